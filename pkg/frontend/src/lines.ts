// Matched-line highlighting. Both fragments are reduced to the same
// canonical per-line form the detectors compare (comments out, whitespace
// collapsed), so the highlight agrees with what the service matched even
// when indentation or commenting differs between snippet and origin.

const enum Mode {
  Code,
  Block,
  Str,
  Chr,
}

/** Strip // and block comments, respecting string and char literals. */
export function stripComments(text: string): string {
  let out = "";
  let mode = Mode.Code;
  for (let i = 0; i < text.length; i += 1) {
    const c = text[i]!;
    const pair = c + (text[i + 1] ?? "");
    switch (mode) {
      case Mode.Code:
        if (pair === "//") {
          while (i < text.length && text[i] !== "\n") i += 1;
          out += i < text.length ? "\n" : "";
          break;
        }
        if (pair === "/*") {
          mode = Mode.Block;
          i += 1;
          break;
        }
        if (c === '"') mode = Mode.Str;
        else if (c === "'") mode = Mode.Chr;
        out += c;
        break;
      case Mode.Block:
        if (pair === "*/") {
          mode = Mode.Code;
          i += 1;
        } else if (c === "\n") {
          out += "\n"; // keep line numbers stable across block comments
        }
        break;
      case Mode.Str:
      case Mode.Chr:
        if (c === "\\") {
          out += pair;
          i += 1;
          break;
        }
        if ((mode === Mode.Str && c === '"') || (mode === Mode.Chr && c === "'")) {
          mode = Mode.Code;
        }
        out += c;
        break;
    }
  }
  return out;
}

export function canonicalLines(text: string): string[] {
  return stripComments(text)
    .split("\n")
    .map((line) => line.trim().replace(/\s+/g, " "));
}

export interface MatchedLines {
  left: Set<number>;
  right: Set<number>;
}

/**
 * 0-based indices of lines whose canonical form also appears on the other
 * side. Lines that canonicalize to nothing (blank or comment-only) never
 * match anything.
 */
export function matchedLines(leftText: string, rightText: string): MatchedLines {
  const left = canonicalLines(leftText);
  const right = canonicalLines(rightText);
  const leftForms = new Set(left.filter((line) => line !== ""));
  const rightForms = new Set(right.filter((line) => line !== ""));
  const result: MatchedLines = { left: new Set(), right: new Set() };
  left.forEach((line, i) => {
    if (line !== "" && rightForms.has(line)) result.left.add(i);
  });
  right.forEach((line, i) => {
    if (line !== "" && leftForms.has(line)) result.right.add(i);
  });
  return result;
}
