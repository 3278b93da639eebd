"""Structured cognitive-probe catalog and response classification.

The catalog is fixed data: 3 categories x 5 sub-forums x 3 newcomer-persona
paraphrases = 45 probes. Classification extracts @-mention / u/-mention
user references and post references from comments and resolves them against
the corpus registries; validity is resolution success. No text is ever
posted anywhere; response data is supplied by the operator.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass

from .corpus import CommentRecord, CorpusSnapshot

CATEGORIES = ("must_read", "accounts_to_follow", "community_context")
SUBMOLTS = ("general", "introductions", "crypto", "agents", "philosophy")

# Paraphrase templates; {community} is the submolt name, or a generic
# phrase for the `general` forum.
_TEMPLATES: dict[str, tuple[tuple[str, str], ...]] = {
    "must_read": (
        (
            "Looking for must-read posts",
            "Hey everyone, new here. Which posts should I absolutely read "
            "first to get a feel for {community}?",
        ),
        (
            "Catching up on the classics",
            "Just joined and catching up. What are the standout posts in "
            "{community} that everyone keeps coming back to?",
        ),
        (
            "Three posts that define this place?",
            "I'm new to {community}. If you had to pick three posts that "
            "define this place, which ones would you point me to?",
        ),
    ),
    "accounts_to_follow": (
        (
            "Who should I follow?",
            "New here. Which accounts are worth following in {community}? "
            "Who consistently posts things worth reading?",
        ),
        (
            "Most influential users?",
            "Just signed up. Who are the most influential users in "
            "{community} that I should keep an eye on?",
        ),
        (
            "Whose posts shape the conversation?",
            "I'm new to {community}. Whose posts shape the conversation "
            "here? Looking for accounts to follow.",
        ),
    ),
    "community_context": (
        (
            "What should a newcomer know?",
            "Hey, new member. What is {community} mostly about, and what "
            "should a newcomer know before posting?",
        ),
        (
            "Main themes and unwritten rules?",
            "Just joined. How would you describe the main themes and "
            "unwritten rules of {community}?",
        ),
        (
            "Where should I start?",
            "I'm new to {community}. What discussions define this place, "
            "and where should I start?",
        ),
    ),
}


@dataclass(frozen=True)
class ProbePost:
    id: str
    category: str
    submolt: str
    paraphrase: int  # 1..3
    title: str
    content: str


def probe_id(category: str, paraphrase: int, submolt: str) -> str:
    return f"{category}_{paraphrase}_{submolt}"


def parse_probe_id(probe_id_str: str) -> tuple[str, int, str]:
    """Inverse of `probe_id`; raises ValueError on malformed ids."""
    category, paraphrase, submolt = probe_id_str.rsplit("_", 2)
    if category not in CATEGORIES or submolt not in SUBMOLTS:
        raise ValueError(f"unparseable probe id: {probe_id_str}")
    return category, int(paraphrase), submolt


def generate_probes() -> list[ProbePost]:
    """The deterministic 45-probe catalog."""
    probes = []
    for category in CATEGORIES:
        for submolt in SUBMOLTS:
            for paraphrase in (1, 2, 3):
                title, template = _TEMPLATES[category][paraphrase - 1]
                community = "this community" if submolt == "general" else submolt
                probes.append(
                    ProbePost(
                        id=probe_id(category, paraphrase, submolt),
                        category=category,
                        submolt=submolt,
                        paraphrase=paraphrase,
                        title=title,
                        content=template.format(community=community),
                    )
                )
    return probes


def probes_to_jsonl(probes: list[ProbePost]) -> str:
    lines = []
    for p in probes:
        lines.append(
            json.dumps(
                {"id": p.id, "submolt": p.submolt, "title": p.title, "content": p.content},
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class Reference:
    kind: str  # "user" | "post"
    raw: str
    resolved: str | None
    valid: bool


@dataclass
class ProbeOutcome:
    probe_id: str
    comment_count: int
    has_external_reference: bool
    references: tuple[Reference, ...]
    consensus_targets: Counter  # (kind, id) -> count over valid references


_USER_AT = re.compile(r"@([A-Za-z0-9_][A-Za-z0-9_\-]*)")
_USER_SLASH = re.compile(r"\bu/([A-Za-z0-9_][A-Za-z0-9_\-]*)")
_POST_URL = re.compile(r"https?://\S*?/posts?/([A-Za-z0-9_\-]+)")
_POST_TAG = re.compile(r"\bpost:([A-Za-z0-9_\-]+)")


def extract_references(text: str) -> list[tuple[str, str]]:
    """(kind, raw name/id) pairs found by pattern in one comment."""
    refs = []
    for m in _USER_AT.finditer(text):
        refs.append(("user", m.group(1)))
    for m in _USER_SLASH.finditer(text):
        refs.append(("user", m.group(1)))
    for m in _POST_URL.finditer(text):
        refs.append(("post", m.group(1)))
    for m in _POST_TAG.finditer(text):
        refs.append(("post", m.group(1)))
    return refs


def classify_responses(
    probe: ProbePost, comments: list[CommentRecord], snapshot: CorpusSnapshot
) -> ProbeOutcome:
    """Aggregate the references in the comments attached to one probe."""
    references = []
    consensus: Counter = Counter()
    post_ids = snapshot.post_ids
    for comment in comments:
        for kind, raw in extract_references(comment.content):
            if kind == "user":
                resolved = raw if raw in snapshot.author_registry else None
            else:
                resolved = raw if raw in post_ids else None
            valid = resolved is not None
            references.append(Reference(kind=kind, raw=raw, resolved=resolved, valid=valid))
            if valid:
                consensus[(kind, resolved)] += 1
    return ProbeOutcome(
        probe_id=probe.id,
        comment_count=len(comments),
        has_external_reference=bool(references),
        references=tuple(references),
        consensus_targets=consensus,
    )


@dataclass
class ConsensusSummary:
    no_response: int
    response_without_reference: int
    invalid_references: int
    valid_references: int
    missing_probe_ids: tuple[str, ...]
    distinct_targets: int
    max_target_share: float | None  # None when no valid references exist

    @property
    def breakdown(self) -> list[int]:
        return [
            self.no_response,
            self.response_without_reference,
            self.invalid_references,
            self.valid_references,
        ]


def consensus_summary(
    outcomes: list[ProbeOutcome], expected_ids: list[str] | None = None
) -> ConsensusSummary:
    """Four-way engagement breakdown plus dispersion of valid targets.

    The categories are mutually exclusive per probe: no comments at all;
    comments but no references; references but none valid; at least one
    valid reference.
    """
    if expected_ids is None:
        expected_ids = [p.id for p in generate_probes()]
    seen = {o.probe_id for o in outcomes}
    missing = tuple(sorted(set(expected_ids) - seen))

    no_response = 0
    without_ref = 0
    invalid = 0
    valid = 0
    targets: Counter = Counter()
    for outcome in outcomes:
        if outcome.comment_count == 0:
            no_response += 1
        elif not outcome.references:
            without_ref += 1
        elif not any(r.valid for r in outcome.references):
            invalid += 1
        else:
            valid += 1
        targets.update(outcome.consensus_targets)

    total_refs = sum(targets.values())
    max_share = (max(targets.values()) / total_refs) if total_refs else None
    return ConsensusSummary(
        no_response=no_response,
        response_without_reference=without_ref,
        invalid_references=invalid,
        valid_references=valid,
        missing_probe_ids=missing,
        distinct_targets=len(targets),
        max_target_share=max_share,
    )
