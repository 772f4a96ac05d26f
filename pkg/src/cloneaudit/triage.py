"""Reviewer classification store, conflict workflow, and evidence ranking.

The store is a single append-only JSONL event log. Every mutation appends
one event and is fsync'd before the call returns, so reviewer sessions
survive crashes; opening a store replays the log. Two reviewers write
distinct (pair, reviewer) keys and only serialize on the short append.
"""

from __future__ import annotations

import json
import math
import os
import re
import threading
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ValidationError
from .lexer import KEYWORDS, tokenize_lenient
from .merge import ConsolidatedPair
from .records import json_line

PATTERNS = ("QS", "SQ", "EX", "UD", "BP", "IN", "NC")
BOILERPLATE_KINDS = ("APIConstraints", "Templating", "DesignPatterns")

TRUTH_CONFLICT = "TruthConflict"
PATTERN_CONFLICT = "PatternConflict"


@dataclass(frozen=True)
class ClassificationRecord:
    pair_id: str
    reviewer_id: str
    pattern: str
    boilerplate_kind: Optional[str] = None
    evidence_note: str = ""
    evidence_url: Optional[str] = None
    timestamp: str = ""

    def __post_init__(self) -> None:
        if self.pattern not in PATTERNS:
            raise ValidationError(f"unknown pattern {self.pattern!r}")
        if self.pattern == "BP":
            if self.boilerplate_kind not in BOILERPLATE_KINDS:
                raise ValidationError("BP requires a boilerplate_kind")
        elif self.boilerplate_kind is not None:
            raise ValidationError("boilerplate_kind is only valid with BP")

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "reviewer_id": self.reviewer_id,
            "pattern": self.pattern,
            "boilerplate_kind": self.boilerplate_kind,
            "evidence_note": self.evidence_note,
            "evidence_url": self.evidence_url,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "ClassificationRecord":
        return cls(
            pair_id=payload["pair_id"],
            reviewer_id=payload["reviewer_id"],
            pattern=payload["pattern"],
            boilerplate_kind=payload.get("boilerplate_kind"),
            evidence_note=payload.get("evidence_note", ""),
            evidence_url=payload.get("evidence_url"),
            timestamp=payload.get("timestamp", ""),
        )


@dataclass(frozen=True)
class ConflictItem:
    pair_id: str
    kind: str
    records: tuple[ClassificationRecord, ClassificationRecord]
    resolution: Optional[ClassificationRecord] = None

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "kind": self.kind,
            "records": [r.to_json() for r in self.records],
            "resolution": self.resolution.to_json() if self.resolution else None,
        }


@dataclass(frozen=True)
class EvidenceRanking:
    pair_id: str
    candidates: tuple[tuple[str, float], ...]

    def to_json(self) -> list:
        return [[origin_id, score] for origin_id, score in self.candidates]


def _conflict_kind(a: ClassificationRecord, b: ClassificationRecord) -> Optional[str]:
    if a.pattern == b.pattern:
        return None
    if (a.pattern == "NC") != (b.pattern == "NC"):
        return TRUTH_CONFLICT
    if a.pattern != "NC" and b.pattern != "NC":
        return PATTERN_CONFLICT
    return None


class TriageStore:
    """Event-sourced classification store over one JSONL file."""

    def __init__(self, path: str | os.PathLike) -> None:
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._pairs: dict[str, dict] = {}
        self._records: dict[tuple[str, str], ClassificationRecord] = {}
        self._resolutions: dict[str, ClassificationRecord] = {}
        self._configured_reviewers: Optional[tuple[str, str]] = None
        self._observed_reviewers: list[str] = []
        self._handle = None

    # ------------------------------------------------------------ lifecycle

    @classmethod
    def create(
        cls,
        path: str | os.PathLike,
        pairs: Sequence[ConsolidatedPair],
        bundles: Mapping[str, dict],
        reviewers: Optional[Sequence[str]] = None,
    ) -> "TriageStore":
        """Initialize a new store file from the consolidated report.

        ``bundles`` supplies the self-contained context (fragment texts, post
        text/url, evidence ranking) shown to reviewers, keyed by pair id.
        """
        store = cls(path)
        events = []
        if reviewers is not None:
            if len(reviewers) != 2:
                raise ValidationError("exactly two designated reviewers expected")
            events.append({"event": "reviewers", "reviewers": list(reviewers)})
        for pair in pairs:
            bundle = bundles.get(pair.pair_id)
            if bundle is None:
                raise ValidationError(f"no bundle for pair {pair.pair_id}")
            events.append({"event": "pair", "pair": pair.to_json(), "bundle": bundle})
        with open(store.path, "w", encoding="utf-8") as handle:
            for event in events:
                handle.write(json_line(event) + "\n")
            handle.flush()
            os.fsync(handle.fileno())
        store._replay()
        store._open_for_append()
        return store

    @classmethod
    def open(cls, path: str | os.PathLike) -> "TriageStore":
        store = cls(path)
        store._replay()
        store._open_for_append()
        return store

    def _open_for_append(self) -> None:
        self._handle = open(self.path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "TriageStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _replay(self) -> None:
        try:
            handle = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            raise ValidationError(f"triage store not found: {self.path}") from None
        with handle:
            for lineno, line in enumerate(handle, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                    self._apply(event)
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValidationError(
                        f"corrupt triage store {self.path}:{lineno}: {exc}"
                    ) from None

    def _apply(self, event: Mapping) -> None:
        kind = event["event"]
        if kind == "pair":
            pair = event["pair"]
            self._pairs[pair["id"]] = {"pair": pair, "bundle": event["bundle"]}
        elif kind == "reviewers":
            reviewers = event["reviewers"]
            self._configured_reviewers = (reviewers[0], reviewers[1])
        elif kind == "classification":
            record = ClassificationRecord.from_json(event["record"])
            self._remember_reviewer(record.reviewer_id)
            self._records[(record.pair_id, record.reviewer_id)] = record
        elif kind == "resolution":
            record = ClassificationRecord.from_json(event["record"])
            self._resolutions[record.pair_id] = record
        else:
            raise ValidationError(f"unknown event type {kind!r}")

    def _remember_reviewer(self, reviewer_id: str) -> None:
        if reviewer_id not in self._observed_reviewers:
            self._observed_reviewers.append(reviewer_id)

    def _append(self, event: dict) -> None:
        # callers hold the lock; durable before the mutation is acknowledged
        self._handle.write(json_line(event) + "\n")
        self._handle.flush()
        os.fsync(self._handle.fileno())

    # ------------------------------------------------------------ queries

    def pair_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._pairs)

    def bundle(self, pair_id: str) -> Optional[dict]:
        with self._lock:
            entry = self._pairs.get(pair_id)
            return dict(entry["bundle"]) if entry else None

    def pair(self, pair_id: str) -> Optional[dict]:
        with self._lock:
            entry = self._pairs.get(pair_id)
            return dict(entry["pair"]) if entry else None

    def designated_reviewers(self) -> Optional[tuple[str, str]]:
        """The conflict-bearing duo: configured up front, else first two seen."""
        with self._lock:
            if self._configured_reviewers is not None:
                return self._configured_reviewers
            if len(self._observed_reviewers) >= 2:
                return (self._observed_reviewers[0], self._observed_reviewers[1])
            return None

    def next_unclassified(self, reviewer_id: str) -> Optional[dict]:
        """Lowest-keyed pair without a record from this reviewer, with its bundle."""
        with self._lock:
            for pair_id in sorted(self._pairs):
                if (pair_id, reviewer_id) not in self._records:
                    entry = self._pairs[pair_id]
                    return {"pair": dict(entry["pair"]), "bundle": dict(entry["bundle"])}
        return None

    def records_for(self, pair_id: str) -> list[ClassificationRecord]:
        with self._lock:
            return [r for (pid, _), r in sorted(self._records.items()) if pid == pair_id]

    # ------------------------------------------------------------ mutations

    def record_classification(self, record: ClassificationRecord) -> ClassificationRecord:
        """Upsert one reviewer's decision for one pair; latest wins."""
        with self._lock:
            if record.pair_id not in self._pairs:
                raise ValidationError(f"unknown pair {record.pair_id!r}")
            self._append({"event": "classification", "record": record.to_json()})
            self._remember_reviewer(record.reviewer_id)
            self._records[(record.pair_id, record.reviewer_id)] = record
        return record

    def resolve_conflict(self, pair_id: str, final: ClassificationRecord) -> ConflictItem:
        """Store the consensus for a pair that currently has an open conflict."""
        if final.pair_id != pair_id:
            final = replace(final, pair_id=pair_id)
        with self._lock:
            item = self._conflict_for(pair_id)
            if item is None:
                raise ValidationError(f"pair {pair_id!r} has no open conflict")
            self._append({"event": "resolution", "record": final.to_json()})
            self._resolutions[pair_id] = final
            return ConflictItem(item.pair_id, item.kind, item.records, final)

    # ------------------------------------------------------------ conflicts

    def _conflict_for(self, pair_id: str) -> Optional[ConflictItem]:
        duo = self._configured_reviewers
        if duo is None and len(self._observed_reviewers) >= 2:
            duo = (self._observed_reviewers[0], self._observed_reviewers[1])
        if duo is None:
            return None
        a = self._records.get((pair_id, duo[0]))
        b = self._records.get((pair_id, duo[1]))
        if a is None or b is None:
            return None
        kind = _conflict_kind(a, b)
        if kind is None:
            return None
        return ConflictItem(pair_id, kind, (a, b), self._resolutions.get(pair_id))

    def conflicts(self) -> list[ConflictItem]:
        """Current disagreements between the designated reviewers, resolved or not."""
        with self._lock:
            items = []
            for pair_id in sorted(self._pairs):
                item = self._conflict_for(pair_id)
                if item is not None:
                    items.append(item)
            return items

    # ------------------------------------------------------------ reporting

    def effective_pattern(self, pair_id: str) -> Optional[str]:
        """Resolution beats unanimous records beats a single record."""
        resolution = self._resolutions.get(pair_id)
        if resolution is not None:
            return resolution.pattern
        patterns = {
            record.pattern
            for (pid, _), record in self._records.items()
            if pid == pair_id
        }
        if len(patterns) == 1:
            return patterns.pop()
        return None

    def export_classified(self) -> dict:
        """Pattern counts (consolidated and source-pair-weighted), QS/UD per
        project, and the open-conflict tally. Only effective patterns count."""
        with self._lock:
            counts = {name: 0 for name in PATTERNS}
            weighted = {name: 0 for name in PATTERNS}
            per_project: dict[str, dict[str, int]] = {}
            classified = 0
            for pair_id in sorted(self._pairs):
                pattern = self.effective_pattern(pair_id)
                if pattern is None:
                    continue
                classified += 1
                pair = self._pairs[pair_id]["pair"]
                counts[pattern] += 1
                weighted[pattern] += pair.get("source_pair_count", 1)
                if pattern in ("QS", "UD") and pair.get("origins"):
                    project = pair["origins"][0]["corpus"]
                    bucket = per_project.setdefault(project, {"QS": 0, "UD": 0})
                    bucket[pattern] += 1
            open_conflicts = 0
            for pair_id in self._pairs:
                item = self._conflict_for(pair_id)
                if item is not None and item.resolution is None:
                    open_conflicts += 1
            return {
                "patterns": counts,
                "patterns_weighted": weighted,
                "per_project": {name: per_project[name] for name in sorted(per_project)},
                "totals": {
                    "pairs": len(self._pairs),
                    "classified": classified,
                    "unclassified": len(self._pairs) - classified,
                },
                "open_conflicts": open_conflicts,
            }


# ---------------------------------------------------------------- evidence

_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_TERM = re.compile(r"[A-Za-z]+|\d+")


def split_terms(text: str) -> list[str]:
    """Lowercased terms after camel-case and separator splitting; Java
    keywords and single characters are dropped."""
    spaced = _CAMEL_BOUNDARY.sub(" ", text)
    terms = []
    for term in _TERM.findall(spaced):
        low = term.lower()
        if len(low) > 1 and low not in KEYWORDS:
            terms.append(low)
    return terms


def _vector(terms: Iterable[str], vocab: Mapping[str, int], idf: Sequence[float]) -> list[float]:
    vec = [0.0] * len(idf)
    for term in terms:
        slot = vocab.get(term)
        if slot is not None:
            vec[slot] += 1.0
    return [tf * w for tf, w in zip(vec, idf)]


def _cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def rank_evidence(
    post_text: str,
    candidates: Sequence[tuple[str, str]],
    pair_id: str = "",
) -> EvidenceRanking:
    """Order origin candidates by tf-idf cosine against the post text.

    The vocabulary is the candidate-descriptor term space, so post words that
    no candidate mentions cannot affect the ordering. idf uses smoothed
    document frequency over the candidate set; ties break on origin id.
    """
    if not candidates:
        return EvidenceRanking(pair_id, ())
    docs = [(origin_id, split_terms(descriptor)) for origin_id, descriptor in candidates]
    vocab: dict[str, int] = {}
    for _, terms in docs:
        for term in terms:
            vocab.setdefault(term, len(vocab))
    df = [0] * len(vocab)
    for _, terms in docs:
        for slot in {vocab[t] for t in terms}:
            df[slot] += 1
    n_docs = len(docs)
    idf = [math.log((1 + n_docs) / (1 + d)) + 1.0 for d in df]
    post_vec = _vector(split_terms(post_text), vocab, idf)
    scored = []
    for origin_id, terms in docs:
        scored.append((origin_id, _cosine(post_vec, _vector(terms, vocab, idf))))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return EvidenceRanking(pair_id, tuple(scored))


# ---------------------------------------------------------------- bundles

def origin_key(fragment) -> str:
    return f"{fragment.corpus_id}:{fragment.unit_id}:{fragment.start_line}-{fragment.end_line}"


def descriptor_text(fragment, fragment_text: str) -> str:
    """Project name, file path, and the identifiers appearing in the fragment."""
    idents = [t.lexeme for t in tokenize_lenient(fragment_text) if t.kind == "identifier"]
    return " ".join([fragment.corpus_id, fragment.unit_id] + idents)


def make_bundle(
    pair: ConsolidatedPair,
    snippet_text: str,
    origin_texts: Sequence[tuple[str, str]],
    post_text: str,
    post_url: str,
) -> dict:
    """Self-contained review context for one consolidated pair.

    ``origin_texts`` pairs each origin key with that origin fragment's text,
    in the same order as ``pair.origins``.
    """
    ranking = rank_evidence(
        post_text,
        [
            (key, descriptor_text(origin, text))
            for origin, (key, text) in zip(pair.origins, origin_texts)
        ],
        pair_id=pair.pair_id,
    )
    return {
        "pair_id": pair.pair_id,
        "snippet": {
            "fragment": pair.snippet_fragment.to_json(),
            "text": snippet_text,
        },
        "origins": [
            {"key": key, "fragment": origin.to_json(), "text": text}
            for origin, (key, text) in zip(pair.origins, origin_texts)
        ],
        "post": {"text": post_text, "url": post_url},
        "ranking": ranking.to_json(),
    }
