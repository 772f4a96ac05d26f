"""Lenient Java-ish lexing and block segmentation.

Q&A snippets are routinely incomplete: missing braces, bare statements,
half-typed literals. Every operation here is total - unknown bytes are
counted and skipped, unterminated literals close at end of line, and a
unit with no recognizable method region still yields a whole-unit
fragment so it stays searchable.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator

from .ingest import NormalizedSource
from .records import Diagnostics

MODIFIERS = frozenset(
    {
        "public", "private", "protected", "static", "final", "abstract",
        "synchronized", "volatile", "transient", "native", "strictfp",
    }
)

KEYWORDS = frozenset(
    {
        "assert", "boolean", "break", "byte", "case", "catch", "char",
        "class", "const", "continue", "default", "do", "double", "else",
        "enum", "extends", "false", "finally", "float", "for", "goto", "if",
        "implements", "import", "instanceof", "int", "interface", "long",
        "new", "null", "package", "return", "short", "super", "switch",
        "this", "throw", "throws", "true", "try", "void", "while",
    }
    | MODIFIERS
)

_MULTI_OPS = (
    ">>>=", ">>>", ">>=", "<<=", "==", "!=", "<=", ">=", "&&", "||", "++",
    "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "->",
)
_SINGLE_OPS = frozenset("+-*/%=<>!&|^~?:")
_MULTI_SEPS = ("...", "::")
_SINGLE_SEPS = frozenset("(){}[];,.@")

_NUM_CHARS = frozenset("0123456789abcdefxlfdpABCDEFXLFDP_.")


@dataclass(frozen=True)
class Token:
    kind: str  # identifier|keyword|literal-string|literal-char|literal-number|operator|separator|modifier
    lexeme: str


@dataclass(frozen=True)
class BlockFragment:
    """A brace-balanced (or fallback whole-unit) region in normalized line
    coordinates, with its token sequence and bag."""

    unit_id: str
    start_line: int
    end_line: int
    tokens: tuple[Token, ...]
    token_bag: Counter = field(compare=False)

    @property
    def span_length(self) -> int:
        return self.end_line - self.start_line + 1


@dataclass(frozen=True)
class LineNormOptions:
    ignore_string_case: bool = True
    ignore_char_case: bool = True
    ignore_modifiers: bool = True
    ignore_identifiers: bool = False
    ignore_numbers: bool = False


def _ident_start(c: str) -> bool:
    return c.isalpha() or c in "_$"


def _ident_part(c: str) -> bool:
    return c.isalnum() or c in "_$"


def tokenize_lenient(text: str, diagnostics: Diagnostics | None = None) -> list[Token]:
    """Total tokenizer: never raises, whatever the input."""
    diag = diagnostics if diagnostics is not None else Diagnostics()
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            nl = text.find("\n", i)
            i = n if nl == -1 else nl + 1
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            close = text.find("*/", i + 2)
            i = n if close == -1 else close + 2
            continue
        if c in "\"'":
            # Unterminated literals consume to end of line.
            j = i + 1
            while j < n and text[j] != c and text[j] != "\n":
                j += 2 if text[j] == "\\" else 1
            if j < n and text[j] == c:
                j += 1
            kind = "literal-string" if c == '"' else "literal-char"
            tokens.append(Token(kind, text[i:j]))
            i = j
            continue
        if _ident_start(c):
            j = i + 1
            while j < n and _ident_part(text[j]):
                j += 1
            word = text[i:j]
            if word in MODIFIERS:
                kind = "modifier"
            elif word in KEYWORDS:
                kind = "keyword"
            else:
                kind = "identifier"
            tokens.append(Token(kind, word))
            i = j
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and (
                text[j] in _NUM_CHARS
                or (text[j] in "+-" and text[j - 1] in "eEpP")
            ):
                j += 1
            tokens.append(Token("literal-number", text[i:j]))
            i = j
            continue
        for sep in _MULTI_SEPS:
            if text.startswith(sep, i):
                tokens.append(Token("separator", sep))
                i += len(sep)
                break
        else:
            for op in _MULTI_OPS:
                if text.startswith(op, i):
                    tokens.append(Token("operator", op))
                    i += len(op)
                    break
            else:
                if c in _SINGLE_SEPS:
                    tokens.append(Token("separator", c))
                elif c in _SINGLE_OPS:
                    tokens.append(Token("operator", c))
                else:
                    diag.tally("lexer.unknown_char")
                i += 1
    return tokens


# ---------------------------------------------------------------- blocks

_TYPE_DECL = re.compile(r"\b(?:class|interface|enum)\s+[A-Za-z_$][\w$]*")
_CALLISH = re.compile(
    r"([A-Za-z_$][\w$]*)\s*\((?:[^();{}]|\([^()]*\))*\)\s*(?:throws[^{]*)?$"
)
_CONTROL = frozenset(
    {
        "if", "for", "while", "switch", "catch", "do", "else", "try",
        "return", "new", "super", "this", "assert", "throw", "synchronized",
    }
)


def _signature_like(prefix: str) -> bool:
    prefix = prefix.strip()
    if not prefix:
        return False
    if _TYPE_DECL.search(prefix):
        return True
    m = _CALLISH.search(prefix)
    if m is None or m.group(1) in _CONTROL:
        return False
    # "new Runnable() {" is an anonymous class body, not a signature.
    before = prefix[: m.start()].rstrip()
    return not re.search(r"\bnew$", before)


def _brace_events(line: str) -> Iterator[str]:
    """Braces on a normalized line, literal-aware, paired with their
    prefix-qualification."""
    quote = ""
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        if quote:
            if c == "\\":
                i += 2
                continue
            if c == quote:
                quote = ""
        elif c in "\"'":
            quote = c
        elif c in "{}":
            yield c if c == "}" else ("{" if not _signature_like(line[:i]) else "{sig")
        i += 1


def split_blocks(
    unit: NormalizedSource,
    min_lines: int,
    diagnostics: Diagnostics | None = None,
) -> list[BlockFragment]:
    """Brace-balanced regions opened by a signature-like header, plus every
    nested such region; one whole-unit fallback when none reaches
    min_lines. Spans are normalized line numbers."""
    if not unit.lines:
        return []
    opens: list[tuple[int, bool]] = []
    regions: list[tuple[int, int]] = []
    for lineno, line in enumerate(unit.lines, 1):
        for event in _brace_events(line):
            if event == "}":
                if opens:
                    start, candidate = opens.pop()
                    if candidate and lineno - start + 1 >= min_lines:
                        regions.append((start, lineno))
            else:
                opens.append((lineno, event == "{sig"))
    if not regions:
        regions = [(1, len(unit.lines))]
    regions.sort()
    fragments = []
    for start, end in regions:
        text = "\n".join(unit.lines[start - 1 : end])
        tokens = tuple(tokenize_lenient(text, diagnostics))
        bag = Counter(t.lexeme for t in tokens)
        fragments.append(BlockFragment(unit.unit_id, start, end, tokens, bag))
    return fragments


# ---------------------------------------------------------------- lines

_MOD_WORD = re.compile(r"\b(?:%s)\b" % "|".join(sorted(MODIFIERS)))
_IDENT_WORD = re.compile(r"[A-Za-z_$][\w$]*")
_NUM_WORD = re.compile(r"\b\d[\w.]*")
_SPACE_RUN = re.compile(r"  +")

_ID_MARK = "$id"
_NUM_MARK = "$num"


def _split_literals(line: str) -> list[tuple[str, str]]:
    """Segments of (kind, text) with kind in {code, string, char}."""
    segments: list[tuple[str, str]] = []
    quote = ""
    start = 0
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        if quote:
            if c == "\\":
                i += 2
                continue
            if c == quote:
                kind = "string" if quote == '"' else "char"
                segments.append((kind, line[start : i + 1]))
                quote = ""
                start = i + 1
        elif c in "\"'":
            if i > start:
                segments.append(("code", line[start:i]))
            quote = c
            start = i
        i += 1
    if start < n:
        kind = "code" if not quote else ("string" if quote == '"' else "char")
        segments.append((kind, line[start:]))
    return segments


def _abstract_code(text: str, opts: LineNormOptions) -> str:
    if opts.ignore_modifiers:
        text = _MOD_WORD.sub("", text)
    if opts.ignore_numbers:
        text = _NUM_WORD.sub(_NUM_MARK, text)
    if opts.ignore_identifiers:
        def repl(m: re.Match) -> str:
            word = m.group(0)
            if word in KEYWORDS or word in (_ID_MARK, _NUM_MARK):
                return word
            return _ID_MARK
        text = _IDENT_WORD.sub(repl, text)
    return text


def normalize_line(line: str, opts: LineNormOptions) -> str:
    """Canonical form used by the line detector; idempotent for every
    option combination."""
    out = []
    for kind, text in _split_literals(line):
        if kind == "code":
            out.append(_abstract_code(text, opts))
        elif kind == "string":
            out.append(text.lower() if opts.ignore_string_case else text)
        else:
            out.append(text.lower() if opts.ignore_char_case else text)
    joined = "".join(out)
    return _SPACE_RUN.sub(" ", joined).strip()
