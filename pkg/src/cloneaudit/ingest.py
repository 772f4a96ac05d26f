"""Dump parsing, corpus scanning, and source normalization.

The posts dump is the public Q&A export format: a rows-of-attributes XML
document whose `Body` attributes hold HTML-entity-encoded markup. Parsing is
streaming and row-local: one corrupt row is skipped and tallied instead of
aborting the run, which a whole-document XML parser cannot do.
"""

from __future__ import annotations

import html
import os
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Any, BinaryIO, Iterable, Iterator

from .errors import DumpTruncatedError, ValidationError
from .records import Diagnostics

QUESTION = "question"
ANSWER = "answer"

_READ_CHUNK = 1 << 16
# Tail kept between chunks so a "<row" split across a boundary is not lost.
_TAIL = 8

_CODE_BLOCK = re.compile(r"<code[^>]*>(.*?)</code>", re.S | re.I)
_TAGS_ANGLE = re.compile(r"<([^<>]+)>")
_HTML_TAG = re.compile(r"<[^>]+>")

# One structural keyword plus a statement-punctuation density of at least
# one ';', '{' or '}' per three lines.
_JAVA_MARKERS = ("class ", "interface ", "void ", "public ", "private ", "import java")


@dataclass
class IngestConfig:
    tags: tuple[str, ...] = ("java",)
    min_snippet_lines: int = 10
    source_extensions: tuple[str, ...] = (".java",)
    post_url_template: str = "https://stackoverflow.com/a/{post_id}"


@dataclass(frozen=True)
class RawPost:
    post_id: int
    post_type: str  # QUESTION | ANSWER
    parent_id: int | None
    accepted_answer_id: int | None
    body: str
    creation_date: date | None
    tags: tuple[str, ...]
    score: int


@dataclass(frozen=True)
class Snippet:
    snippet_id: str
    post_id: int
    question_id: int
    text: str
    line_count: int
    post_date: date | None

    def to_json(self) -> dict[str, Any]:
        return {
            "snippet_id": self.snippet_id,
            "post_id": self.post_id,
            "question_id": self.question_id,
            "text": self.text,
            "line_count": self.line_count,
            "post_date": self.post_date.isoformat() if self.post_date else None,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "Snippet":
        post_date = date.fromisoformat(d["post_date"]) if d.get("post_date") else None
        return cls(
            d["snippet_id"], d["post_id"], d["question_id"],
            d["text"], d["line_count"], post_date,
        )


@dataclass(frozen=True)
class SourceFile:
    corpus_id: str
    path: str  # root-relative, "/"-separated
    text: str
    version_label: str
    release_date: date | None

    def to_json(self, root: str) -> dict[str, Any]:
        # Text is stored by path reference, never inline.
        return {
            "corpus": self.corpus_id,
            "path": self.path,
            "version": self.version_label,
            "release_date": self.release_date.isoformat() if self.release_date else None,
            "root": root,
        }


@dataclass(frozen=True)
class NormalizedSource:
    unit_id: str
    lines: tuple[str, ...]
    line_map: tuple[int, ...]  # original 1-based line per normalized line


# ---------------------------------------------------------------- dump rows


def _chunks(stream: BinaryIO | Iterable[str]) -> Iterator[str]:
    read = getattr(stream, "read", None)
    if read is None:
        yield from stream
        return
    while True:
        chunk = read(_READ_CHUNK)
        if not chunk:
            return
        if isinstance(chunk, bytes):
            chunk = chunk.decode("utf-8", errors="replace")
        yield chunk


def _tag_end(buf: str, start: int) -> int | None:
    """Index of the '>' closing the element opened at `start`, honoring
    quoted attribute values (a '>' inside quotes does not close the tag)."""
    quote = ""
    for i in range(start, len(buf)):
        c = buf[i]
        if quote:
            if c == quote:
                quote = ""
        elif c in "\"'":
            quote = c
        elif c == ">":
            return i
    return None


def _scan_rows(stream: BinaryIO | Iterable[str]) -> Iterator[str]:
    buf = ""
    pending = False  # an unterminated "<row" sits at the start of buf
    for chunk in _chunks(stream):
        buf += chunk
        pos = 0
        while True:
            if not pending:
                hit = buf.find("<row", pos)
                if hit == -1:
                    buf = buf[max(len(buf) - _TAIL, pos):]
                    break
                buf = buf[hit:]
                pos = 0
                pending = True
            end = _tag_end(buf, 0)
            if end is None:
                break
            yield buf[: end + 1]
            buf = buf[end + 1:]
            pos = 0
            pending = False
    if pending:
        raise DumpTruncatedError("dump ended inside a <row> element")


def _parse_tags(raw: str) -> tuple[str, ...]:
    if "<" in raw:
        return tuple(t.lower() for t in _TAGS_ANGLE.findall(raw))
    return tuple(t.lower() for t in raw.split("|") if t)


def _int_or_none(attrs: dict[str, str], key: str) -> int | None:
    value = attrs.get(key)
    return int(value) if value is not None and value.lstrip("-").isdigit() else None


def parse_dump(
    stream: BinaryIO | Iterable[str],
    cfg: IngestConfig,
    diagnostics: Diagnostics | None = None,
) -> Iterator[RawPost]:
    """Stream posts out of a dump. Questions not matching the tag allowlist
    are dropped here; answers always pass (their question is only known to
    the two-pass accepted-answer selection downstream)."""
    diag = diagnostics if diagnostics is not None else Diagnostics()
    allow = {t.lower() for t in cfg.tags}
    for raw in _scan_rows(stream):
        if not raw.endswith("/>"):
            raw = raw[:-1].rstrip() + "/>"
        try:
            attrs = dict(ET.fromstring(raw).attrib)
        except ET.ParseError:
            diag.tally("ingest.malformed_row")
            continue
        post_id = _int_or_none(attrs, "Id")
        type_id = attrs.get("PostTypeId")
        if post_id is None or type_id not in ("1", "2"):
            diag.tally(
                "ingest.malformed_row" if post_id is None else "ingest.ignored_post_type"
            )
            continue
        created: date | None = None
        if "CreationDate" in attrs:
            try:
                created = date.fromisoformat(attrs["CreationDate"][:10])
            except ValueError:
                diag.tally("ingest.bad_creation_date")
        post = RawPost(
            post_id=post_id,
            post_type=QUESTION if type_id == "1" else ANSWER,
            parent_id=_int_or_none(attrs, "ParentId"),
            accepted_answer_id=_int_or_none(attrs, "AcceptedAnswerId"),
            body=attrs.get("Body", ""),
            creation_date=created,
            tags=_parse_tags(attrs.get("Tags", "")),
            score=_int_or_none(attrs, "Score") or 0,
        )
        if post.post_type == QUESTION and allow and not (set(post.tags) & allow):
            diag.tally("ingest.filtered_question")
            continue
        yield post


# ---------------------------------------------------------------- snippets


def is_probably_java(text: str) -> bool:
    if not text.strip():
        return False
    if not any(marker in text for marker in _JAVA_MARKERS):
        return False
    lines = text.split("\n")
    punctuation = text.count(";") + text.count("{") + text.count("}")
    return punctuation * 3 >= len(lines)


def _trim_trailing_blanks(text: str) -> str:
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    return "\n".join(lines)


def extract_snippets(answer: RawPost, question: RawPost, cfg: IngestConfig) -> list[Snippet]:
    """One Snippet per `<code>` block that survives the size and Java
    filters. Ordinals count every code block in document order, so ids are
    stable when thresholds change."""
    snippets = []
    for ordinal, raw_block in enumerate(_CODE_BLOCK.findall(answer.body), 1):
        text = _trim_trailing_blanks(html.unescape(raw_block))
        if not text:
            continue
        line_count = text.count("\n") + 1
        if line_count < cfg.min_snippet_lines or not is_probably_java(text):
            continue
        snippets.append(
            Snippet(
                snippet_id=f"{answer.post_id}_{ordinal}",
                post_id=answer.post_id,
                question_id=question.post_id,
                text=text,
                line_count=line_count,
                post_date=answer.creation_date,
            )
        )
    return snippets


def post_plain_text(question: RawPost, answer: RawPost) -> str:
    """Markup-stripped question+answer text, kept for triage display and
    evidence ranking."""
    merged = []
    for body in (question.body, answer.body):
        text = html.unescape(_HTML_TAG.sub(" ", body))
        merged.append(re.sub(r"[ \t]+", " ", text).strip())
    return "\n\n".join(part for part in merged if part)


def ingest_dump(
    dump_path: str | Path,
    cfg: IngestConfig,
    diagnostics: Diagnostics | None = None,
) -> tuple[list[Snippet], list[dict[str, Any]]]:
    """Two passes over the dump: collect tag-matching questions with an
    accepted answer, then extract snippets from exactly those answers.
    Memory is bounded by the matched-question map, not the dump size."""
    diag = diagnostics if diagnostics is not None else Diagnostics()
    dump_path = Path(dump_path)
    accepted: dict[int, RawPost] = {}
    with dump_path.open("rb") as fh:
        for post in parse_dump(fh, cfg, diag):
            if post.post_type == QUESTION and post.accepted_answer_id is not None:
                accepted[post.accepted_answer_id] = post

    snippets: list[Snippet] = []
    post_rows: list[dict[str, Any]] = []
    with dump_path.open("rb") as fh:
        for post in parse_dump(fh, cfg, diag):
            if post.post_type != ANSWER:
                continue
            question = accepted.get(post.post_id)
            if question is None:
                continue
            extracted = extract_snippets(post, question, cfg)
            if not extracted:
                continue
            snippets.extend(extracted)
            post_rows.append(
                {
                    "post_id": post.post_id,
                    "question_id": question.post_id,
                    "text": post_plain_text(question, post),
                    "url": cfg.post_url_template.format(post_id=post.post_id),
                }
            )
    return snippets, post_rows


# ---------------------------------------------------------------- corpora


def scan_corpus(
    root: str | Path,
    corpus_id: str,
    version_label: str,
    extensions: tuple[str, ...] = (".java",),
    release_date: date | None = None,
    diagnostics: Diagnostics | None = None,
) -> list[SourceFile]:
    diag = diagnostics if diagnostics is not None else Diagnostics()
    root = Path(root)
    if not root.is_dir():
        raise ValidationError(f"corpus root does not exist: {root}")
    seen_dirs: set[str] = set()
    seen_files: set[str] = set()
    found: list[SourceFile] = []
    for dirpath, dirnames, filenames in os.walk(root, followlinks=True):
        real = os.path.realpath(dirpath)
        if real in seen_dirs:
            dirnames[:] = []
            continue
        seen_dirs.add(real)
        dirnames.sort()
        for name in sorted(filenames):
            if not name.endswith(extensions):
                continue
            full = Path(dirpath) / name
            real_file = os.path.realpath(full)
            if real_file in seen_files:
                continue
            seen_files.add(real_file)
            try:
                text = full.read_text(encoding="utf-8", errors="replace")
            except OSError:
                diag.tally("ingest.unreadable_file")
                continue
            rel = full.relative_to(root).as_posix()
            found.append(SourceFile(corpus_id, rel, text, version_label, release_date))
    found.sort(key=lambda sf: sf.path)
    return found


# ---------------------------------------------------------------- normalize

_COLLAPSIBLE = " \t\f\v\r"


def normalize(text: str, unit_id: str = "") -> NormalizedSource:
    """Comment-stripped, whitespace-canonical view of arbitrary source text.

    Line and block comments become a single space (so `a/*x*/b` keeps its
    token boundary); string and char literals are preserved byte-exact;
    blank lines vanish; everything else has runs of whitespace collapsed.
    Unterminated block comments consume to end of input, unterminated
    literals to end of line. Total on any input.
    """
    out_lines: list[str] = []
    line_map: list[int] = []
    in_block = False
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), 1):
        kept: list[tuple[str, bool]] = []  # (char, verbatim inside a literal)
        quote = ""  # current literal delimiter, or empty
        i, n = 0, len(raw)
        while i < n:
            c = raw[i]
            if in_block:
                if c == "*" and i + 1 < n and raw[i + 1] == "/":
                    in_block = False
                    kept.append((" ", False))
                    i += 2
                else:
                    i += 1
                continue
            if quote:
                kept.append((c, True))
                if c == "\\" and i + 1 < n:
                    kept.append((raw[i + 1], True))
                    i += 2
                    continue
                if c == quote:
                    quote = ""
                i += 1
                continue
            if c == "/" and i + 1 < n and raw[i + 1] == "/":
                kept.append((" ", False))
                break
            if c == "/" and i + 1 < n and raw[i + 1] == "*":
                in_block = True
                kept.append((" ", False))
                i += 2
                continue
            if c in "\"'":
                quote = c
                kept.append((c, True))
                i += 1
                continue
            kept.append((c, False))
            i += 1
        # Unterminated literal: lenient, closes at end of line.
        collapsed: list[str] = []
        pending = False
        for c, verbatim in kept:
            if not verbatim and c in _COLLAPSIBLE:
                pending = True
                continue
            if pending and collapsed:
                collapsed.append(" ")
            pending = False
            collapsed.append(c)
        line = "".join(collapsed)
        if line:
            out_lines.append(line)
            line_map.append(lineno)
    return NormalizedSource(unit_id, tuple(out_lines), tuple(line_map))
