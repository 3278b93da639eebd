"""Shared plumbing: timestamps, stable hashing, atomic file writes."""

from __future__ import annotations

import hashlib
import os
from datetime import date, datetime, timedelta, timezone


class DataError(Exception):
    """Input data violates a format or content contract (CLI exit code 2)."""


_EPOCH = date(1970, 1, 1)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def parse_utc(value: str) -> int:
    """Parse an ISO-8601 UTC timestamp to integer epoch seconds.

    Accepts a trailing 'Z' or an explicit offset; naive values are taken
    as UTC. Sub-second precision is truncated (the dump format is
    seconds-resolution).
    """
    if not isinstance(value, str) or not value:
        raise ValueError("timestamp must be a non-empty string")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_utc(epoch: int) -> str:
    """Render epoch seconds as `2026-02-04T12:00:00Z`."""
    dt = datetime.fromtimestamp(epoch, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def epoch_day(epoch: int) -> int:
    """UTC calendar day number (days since 1970-01-01) for an epoch second."""
    return epoch // 86400


def day_to_date(day: int) -> date:
    return _EPOCH + timedelta(days=day)


def date_to_day(d: date) -> int:
    return (d - _EPOCH).days


def fnv64(data: str | bytes) -> int:
    """FNV-1a 64-bit hash; stable across processes and platforms."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer (used to key deterministic streams)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_bytes(path, data: bytes) -> None:
    """Write-then-rename so failures never leave partial files behind."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def fmt_float(x) -> str:
    """Deterministic float formatting for CSV cells; NaN renders as absent."""
    try:
        fx = float(x)
    except (TypeError, ValueError):
        return ""
    if fx != fx:  # NaN
        return ""
    return format(fx, ".12g")
