"""The two complementary clone detectors.

Token detector: bag-of-tokens overlap over method-ish block fragments,
served by an inverted index with prefix filtering. The filter is lossless:
thresholds are evaluated in exact rational arithmetic, never as floats, so
a query of size n at threshold t probes its ceil-free k = n - ceil(t*n) + 1
rarest occurrences and provably cannot miss a qualifying candidate.

Line detector: maximal runs of equal canonical lines (after the
per-line normalization options), reported at >= min_clone_lines.

Both emit cross-corpus pairs only, in a canonical order so parallel or
repeated runs serialize identically.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ValidationError
from .ingest import NormalizedSource
from .lexer import BlockFragment, LineNormOptions, normalize_line, split_blocks
from .records import SNIPPET_CORPUS, ClonePair, CodeFragment, Diagnostics


@dataclass(frozen=True)
class DetectorConfig:
    min_clone_lines: int = 10
    token_similarity: float = 0.80
    line_norm: LineNormOptions = field(default_factory=LineNormOptions)

    def similarity_fraction(self) -> Fraction:
        # The float is interpreted as the decimal literal it was written as.
        return Fraction(str(self.token_similarity))


def overlap_similarity(
    bag1: Counter, bag2: Counter, diagnostics: Diagnostics | None = None
) -> float:
    """|bag1 n bag2| / max(|bag1|, |bag2|), multiset intersection."""
    n1, n2 = sum(bag1.values()), sum(bag2.values())
    if n1 == 0 and n2 == 0:
        if diagnostics is not None:
            diagnostics.tally("detect.degenerate_overlap")
        return 0.0
    if n1 == 0 or n2 == 0:
        return 0.0
    return _intersection_size(bag1, bag2) / max(n1, n2)


def _intersection_size(bag1: Counter, bag2: Counter) -> int:
    if len(bag2) < len(bag1):
        bag1, bag2 = bag2, bag1
    return sum(min(count, bag2[lex]) for lex, count in bag1.items() if lex in bag2)


class CloneIndex:
    """Inverted index over one corpus side's block fragments."""

    def __init__(self, corpus_id: str, fragments: Sequence[BlockFragment],
                 sources: dict[str, NormalizedSource]):
        self.corpus_id = corpus_id
        self.fragments = tuple(fragments)
        self.sources = sources
        self.fragment_sizes = tuple(sum(f.token_bag.values()) for f in self.fragments)
        postings: dict[str, list[tuple[int, int]]] = defaultdict(list)
        for idx, frag in enumerate(self.fragments):
            for lexeme, tf in frag.token_bag.items():
                postings[lexeme].append((idx, tf))
        self.postings: dict[str, tuple[tuple[int, int], ...]] = {
            lexeme: tuple(entries) for lexeme, entries in postings.items()
        }
        self.df: dict[str, int] = {
            lexeme: len(entries) for lexeme, entries in self.postings.items()
        }


def build_index(
    fragments: Sequence[BlockFragment],
    corpus_id: str,
    sources: dict[str, NormalizedSource],
) -> CloneIndex:
    return CloneIndex(corpus_id, fragments, sources)


def _prefix_lexemes(bag: Counter, k: int, df: dict[str, int]) -> list[str]:
    """Distinct lexemes covering the k rarest token occurrences of the bag,
    rarity taken from the index side (absent lexemes are rarest of all)."""
    ordered = sorted(bag.items(), key=lambda it: (df.get(it[0], 0), it[0]))
    probed, covered = [], 0
    for lexeme, count in ordered:
        if covered >= k:
            break
        probed.append(lexeme)
        covered += count
    return probed


def _to_original(source: NormalizedSource, start: int, end: int,
                 corpus_id: str) -> CodeFragment:
    return CodeFragment(
        corpus_id, source.unit_id,
        source.line_map[start - 1], source.line_map[end - 1],
    )


def detect_token_clones(
    queries: Sequence[BlockFragment],
    index: CloneIndex,
    cfg: DetectorConfig,
    query_corpus: str = SNIPPET_CORPUS,
    query_sources: dict[str, NormalizedSource] | None = None,
    diagnostics: Diagnostics | None = None,
) -> list[ClonePair]:
    """All cross-corpus pairs at similarity >= cfg.token_similarity with
    both spans >= cfg.min_clone_lines; equal to the brute-force all-pairs
    result. Pair.left is the query side."""
    if query_corpus == index.corpus_id:
        raise ValidationError(f"token detection requires two corpora, got {query_corpus!r} twice")
    if query_sources is None:
        raise ValidationError("query_sources required to map spans to original lines")
    theta = cfg.similarity_fraction()
    pairs: list[ClonePair] = []
    for query in queries:
        if query.span_length < cfg.min_clone_lines:
            continue
        n = sum(query.token_bag.values())
        if n == 0:
            if diagnostics is not None:
                diagnostics.tally("detect.empty_token_bag")
            continue
        r_min = math.ceil(theta * n)
        k = n - r_min + 1
        candidates: set[int] = set()
        for lexeme in _prefix_lexemes(query.token_bag, k, index.df):
            for frag_idx, _tf in index.postings.get(lexeme, ()):
                candidates.add(frag_idx)
        for frag_idx in candidates:
            frag = index.fragments[frag_idx]
            if frag.span_length < cfg.min_clone_lines:
                continue
            m = index.fragment_sizes[frag_idx]
            overlap = _intersection_size(query.token_bag, frag.token_bag)
            denominator = max(n, m)
            if Fraction(overlap, denominator) < theta:
                continue
            pairs.append(
                ClonePair(
                    left=_to_original(query_sources[query.unit_id],
                                      query.start_line, query.end_line, query_corpus),
                    right=_to_original(index.sources[frag.unit_id],
                                       frag.start_line, frag.end_line, index.corpus_id),
                    detector="token",
                    similarity=overlap / denominator,
                )
            )
    pairs.sort(key=ClonePair.key)
    return pairs


# ---------------------------------------------------------------- lines


def _canonical_lines(source: NormalizedSource, opts: LineNormOptions) -> list[str]:
    return [normalize_line(line, opts) for line in source.lines]


def _maximal_runs(canon_a: list[str], canon_b: list[str], min_lines: int) -> list[tuple[int, int, int]]:
    """(start_a, start_b, length) for every maximal diagonal run of equal,
    non-empty canonical lines with length >= min_lines. 0-based starts."""
    positions: dict[str, list[int]] = defaultdict(list)
    for j, line in enumerate(canon_b):
        if line:
            positions[line].append(j)
    matches = {
        (i, j)
        for i, line in enumerate(canon_a)
        if line
        for j in positions.get(line, ())
    }
    runs = []
    for i, j in matches:
        if (i - 1, j - 1) in matches:
            continue  # not a run head
        length = 1
        while (i + length, j + length) in matches:
            length += 1
        if length >= min_lines:
            runs.append((i, j, length))
    return runs


def _drop_contained(runs: list[tuple[int, int, int]]) -> list[tuple[int, int, int]]:
    """A run lying inside another on BOTH sides is redundant; partial
    overlaps are distinct clones and stay."""
    kept = []
    for i, j, ln in runs:
        contained = any(
            (oi, oj, oln) != (i, j, ln)
            and oi <= i and i + ln <= oi + oln
            and oj <= j and j + ln <= oj + oln
            for oi, oj, oln in runs
        )
        if not contained:
            kept.append((i, j, ln))
    return kept


def detect_line_clones(
    side_a: Sequence[NormalizedSource],
    side_b: Sequence[NormalizedSource],
    cfg: DetectorConfig,
    corpus_a: str = SNIPPET_CORPUS,
    corpus_b: str = "",
    diagnostics: Diagnostics | None = None,
) -> list[ClonePair]:
    """Cross-corpus maximal equal-line runs; side_a is the snippet side.
    Cost concentrates on lines whose canonical form repeats on both sides,
    which is why empty canonical lines never match."""
    if corpus_a == corpus_b:
        raise ValidationError(f"line detection requires two corpora, got {corpus_a!r} twice")
    pairs: list[ClonePair] = []
    canon_b_all = [(unit, _canonical_lines(unit, cfg.line_norm)) for unit in side_b]
    for unit_a in side_a:
        canon_a = _canonical_lines(unit_a, cfg.line_norm)
        for unit_b, canon_b in canon_b_all:
            runs = _maximal_runs(canon_a, canon_b, cfg.min_clone_lines)
            for i, j, length in _drop_contained(runs):
                pairs.append(
                    ClonePair(
                        left=_to_original(unit_a, i + 1, i + length, corpus_a),
                        right=_to_original(unit_b, j + 1, j + length, corpus_b),
                        detector="line",
                        similarity=1.0,
                    )
                )
    pairs.sort(key=ClonePair.key)
    return pairs


# ---------------------------------------------------------------- driver


def _average_clone_size(pairs: Iterable[ClonePair]) -> float:
    sizes = [(p.left.span_length + p.right.span_length) / 2 for p in pairs]
    return round(sum(sizes) / len(sizes), 2) if sizes else 0.0


def run_detection(
    snippet_sources: Sequence[NormalizedSource],
    corpus_sources: Sequence[NormalizedSource],
    cfg: DetectorConfig,
    corpus_id: str,
    snippet_corpus: str = SNIPPET_CORPUS,
    diagnostics: Diagnostics | None = None,
) -> tuple[list[ClonePair], list[ClonePair], dict]:
    """Token and line reports plus a per-detector summary."""
    if snippet_corpus == corpus_id:
        raise ValidationError(f"detection requires two corpora, got {corpus_id!r} twice")
    snippet_map = {s.unit_id: s for s in snippet_sources}
    corpus_map = {s.unit_id: s for s in corpus_sources}
    queries = [
        frag
        for source in snippet_sources
        for frag in split_blocks(source, cfg.min_clone_lines, diagnostics)
    ]
    indexed = [
        frag
        for source in corpus_sources
        for frag in split_blocks(source, cfg.min_clone_lines, diagnostics)
        if frag.span_length >= cfg.min_clone_lines
    ]
    index = build_index(indexed, corpus_id, corpus_map)
    token_pairs = detect_token_clones(
        queries, index, cfg, snippet_corpus, snippet_map, diagnostics
    )
    line_pairs = detect_line_clones(
        snippet_sources, corpus_sources, cfg, snippet_corpus, corpus_id, diagnostics
    )
    summary = {
        "token": {"pairs": len(token_pairs), "avg_clone_size": _average_clone_size(token_pairs)},
        "line": {"pairs": len(line_pairs), "avg_clone_size": _average_clone_size(line_pairs)},
    }
    return token_pairs, line_pairs, summary
