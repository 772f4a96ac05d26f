"""Shared record types and line-delimited JSON helpers.

Every artifact this package writes is JSONL with sorted keys, so repeated
runs over identical inputs are byte-identical.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator

# Corpus id reserved for the snippet side of every clone pair.
SNIPPET_CORPUS = "snippets"


class Diagnostics:
    """Tally of recoverable oddities (malformed rows, unknown characters,
    unreadable files). Never raises; surfaces in CLI summaries and the
    run manifest."""

    def __init__(self) -> None:
        self.counts: Counter[str] = Counter()

    def tally(self, key: str, n: int = 1) -> None:
        self.counts[key] += n

    def merge(self, other: "Diagnostics") -> None:
        self.counts.update(other.counts)

    def as_dict(self) -> dict[str, int]:
        return {key: self.counts[key] for key in sorted(self.counts)}

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Diagnostics({self.as_dict()})"


@dataclass(frozen=True, order=True)
class CodeFragment:
    """A contiguous region of one source unit, in original line coordinates
    (1-based, inclusive)."""

    corpus_id: str
    unit_id: str
    start_line: int
    end_line: int

    def __post_init__(self) -> None:
        if self.start_line > self.end_line:
            raise ValueError(f"fragment span reversed: {self}")

    @property
    def span_length(self) -> int:
        return self.end_line - self.start_line + 1

    def same_unit(self, other: "CodeFragment") -> bool:
        return self.corpus_id == other.corpus_id and self.unit_id == other.unit_id

    def to_json(self) -> dict[str, Any]:
        return {
            "corpus": self.corpus_id,
            "unit": self.unit_id,
            "start": self.start_line,
            "end": self.end_line,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "CodeFragment":
        return cls(d["corpus"], d["unit"], d["start"], d["end"])


@dataclass(frozen=True)
class ClonePair:
    """Two fragments asserted similar by a named detector. `left` is always
    the snippet side, `right` the project-corpus side."""

    left: CodeFragment
    right: CodeFragment
    detector: str  # "token" | "line"
    similarity: float

    def key(self) -> tuple:
        return (
            self.left.unit_id,
            self.left.start_line,
            self.left.end_line,
            self.right.corpus_id,
            self.right.unit_id,
            self.right.start_line,
            self.right.end_line,
            self.detector,
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "left": self.left.to_json(),
            "right": self.right.to_json(),
            "detector": self.detector,
            "similarity": self.similarity,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "ClonePair":
        return cls(
            CodeFragment.from_json(d["left"]),
            CodeFragment.from_json(d["right"]),
            d["detector"],
            d["similarity"],
        )


def json_line(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def write_jsonl(path: str | Path, records: Iterable[Any]) -> int:
    """Write records atomically (tmp file + rename); returns the line count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with tmp.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json_line(rec))
            fh.write("\n")
            n += 1
    tmp.replace(path)
    return n


def read_jsonl(path: str | Path) -> Iterator[Any]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)
