// Text handed to the encoder: title + newline + content when the title is
// non-empty, else content alone. Pinned by tests/fixtures/text_composition.json
// in the analytics package, which both test suites read.
export function composePostText(title: string, content: string): string {
  return title ? `${title}\n${content}` : content;
}
