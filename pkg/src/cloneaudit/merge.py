"""Merging the two detectors' reports via the ok-match containment metric.

contained(CF1, CF2) is the fraction of CF1's lines that also lie in CF2,
zero across different units. The ok-value of two clone pairs is

    ok(CP1, CP2) = min(max(contained(CP1.CF1, CP2.CF1),
                           contained(CP2.CF1, CP1.CF1)),
                       max(contained(CP1.CF2, CP2.CF2),
                           contained(CP2.CF2, CP1.CF2)))

and CP1, CP2 are an ok-match(t) iff ok >= t, evaluated in exact rational
arithmetic so the inclusive boundary behaves at every threshold.

Cross-report ok-matches are grouped transitively (connected components:
the only order-independent grouping); each group keeps a deterministic
representative. Consolidation then collapses merged pairs sharing the
identical snippet-side fragment into one record with many origins.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .records import ClonePair, CodeFragment


@dataclass(frozen=True)
class MergeConfig:
    t: float = 0.5

    def threshold_fraction(self) -> Fraction:
        return Fraction(str(self.t))


def contained_exact(cf1: CodeFragment, cf2: CodeFragment) -> Fraction:
    if not cf1.same_unit(cf2):
        return Fraction(0)
    overlap = min(cf1.end_line, cf2.end_line) - max(cf1.start_line, cf2.start_line) + 1
    if overlap <= 0:
        return Fraction(0)
    return Fraction(overlap, cf1.span_length)


def contained(cf1: CodeFragment, cf2: CodeFragment) -> float:
    """|lines(cf1) n lines(cf2)| / |lines(cf1)|."""
    return float(contained_exact(cf1, cf2))


def ok_value_exact(cp1: ClonePair, cp2: ClonePair) -> Fraction:
    if not cp1.left.same_unit(cp2.left) or not cp1.right.same_unit(cp2.right):
        # Semantically forced: containment across units is zero.
        return Fraction(0)
    left = max(contained_exact(cp1.left, cp2.left), contained_exact(cp2.left, cp1.left))
    right = max(contained_exact(cp1.right, cp2.right), contained_exact(cp2.right, cp1.right))
    return min(left, right)


def ok_value(cp1: ClonePair, cp2: ClonePair) -> float:
    return float(ok_value_exact(cp1, cp2))


def is_ok_match(cp1: ClonePair, cp2: ClonePair, t: float) -> bool:
    """Inclusive at the threshold: ok >= t."""
    return ok_value_exact(cp1, cp2) >= Fraction(str(t))


@dataclass(frozen=True)
class MergedClonePair:
    pair_id: str
    representative: ClonePair
    contributors: tuple[str, ...]
    members: tuple[str, ...]
    # Direct ok-matches of the representative; chain members further away
    # can sit below t and are listed in members only.
    ok_partners: tuple[tuple[str, float], ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.pair_id,
            "representative": self.representative.to_json(),
            "contributors": list(self.contributors),
            "members": list(self.members),
            "ok_partners": [[pid, value] for pid, value in self.ok_partners],
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "MergedClonePair":
        return cls(
            d["id"],
            ClonePair.from_json(d["representative"]),
            tuple(d["contributors"]),
            tuple(d["members"]),
            tuple((pid, value) for pid, value in d["ok_partners"]),
        )


@dataclass(frozen=True)
class ConsolidatedPair:
    pair_id: str
    snippet_fragment: CodeFragment
    origins: tuple[CodeFragment, ...]
    contributors: tuple[str, ...]
    source_pair_count: int

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.pair_id,
            "snippet_fragment": self.snippet_fragment.to_json(),
            "origins": [o.to_json() for o in self.origins],
            "contributors": list(self.contributors),
            "source_pair_count": self.source_pair_count,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "ConsolidatedPair":
        return cls(
            d["id"],
            CodeFragment.from_json(d["snippet_fragment"]),
            tuple(CodeFragment.from_json(o) for o in d["origins"]),
            tuple(d["contributors"]),
            d["source_pair_count"],
        )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _representative_key(indexed_pair: tuple[int, ClonePair]) -> tuple:
    _, pair = indexed_pair
    detector_rank = 0 if pair.detector == "token" else 1
    return (-pair.left.span_length, detector_rank, pair.key())


def merge_reports(
    token_report: Sequence[ClonePair],
    line_report: Sequence[ClonePair],
    cfg: MergeConfig,
) -> list[MergedClonePair]:
    """Unify cross-report ok-matches at cfg.t into merged groups.

    An edge needs ok >= t AND ok > 0: at t=0 this groups exactly the
    same-unit overlapping pairs rather than everything at once.
    """
    threshold = cfg.threshold_fraction()
    token_sorted = sorted(token_report, key=ClonePair.key)
    line_sorted = sorted(line_report, key=ClonePair.key)
    nodes: list[ClonePair] = list(token_sorted) + list(line_sorted)
    ids = [f"token-{i}" for i in range(len(token_sorted))] + [
        f"line-{i}" for i in range(len(line_sorted))
    ]

    # Pairs on different unit pairs can never ok-match; bucket first.
    buckets: dict[tuple, dict[str, list[int]]] = defaultdict(lambda: {"token": [], "line": []})
    for node_idx, pair in enumerate(nodes):
        key = (pair.left.corpus_id, pair.left.unit_id, pair.right.corpus_id, pair.right.unit_id)
        buckets[key][pair.detector].append(node_idx)

    dsu = _UnionFind(len(nodes))
    for bucket in buckets.values():
        for ti in bucket["token"]:
            for li in bucket["line"]:
                ok = ok_value_exact(nodes[ti], nodes[li])
                if ok > 0 and ok >= threshold:
                    dsu.union(ti, li)

    components: dict[int, list[int]] = defaultdict(list)
    for node_idx in range(len(nodes)):
        components[dsu.find(node_idx)].append(node_idx)

    merged: list[MergedClonePair] = []
    for member_indices in components.values():
        rep_idx, rep = min(
            ((i, nodes[i]) for i in member_indices), key=_representative_key
        )
        contributors = tuple(sorted({nodes[i].detector for i in member_indices}))
        members = tuple(ids[i] for i in sorted(member_indices))
        partners = []
        for i in sorted(member_indices):
            if i == rep_idx:
                continue
            ok = ok_value_exact(rep, nodes[i])
            if ok > 0 and ok >= threshold:
                partners.append((ids[i], float(ok)))
        merged.append(
            MergedClonePair(
                pair_id=ids[rep_idx],
                representative=rep,
                contributors=contributors,
                members=members,
                ok_partners=tuple(partners),
            )
        )
    merged.sort(key=lambda m: m.representative.key())
    return merged


def merge_summary(merged: Sequence[MergedClonePair]) -> dict[str, int]:
    """Per-detector input sizes, both-detector group count, merged total."""
    token_members = sum(
        sum(1 for m in group.members if m.startswith("token-")) for group in merged
    )
    line_members = sum(
        sum(1 for m in group.members if m.startswith("line-")) for group in merged
    )
    common = sum(1 for group in merged if len(group.contributors) == 2)
    return {
        "token": token_members,
        "line": line_members,
        "common": common,
        "merged_total": len(merged),
    }


def consolidate(pairs: Sequence[MergedClonePair]) -> list[ConsolidatedPair]:
    """Group merged pairs sharing the identical snippet-side fragment."""
    groups: dict[CodeFragment, list[MergedClonePair]] = defaultdict(list)
    for pair in pairs:
        groups[pair.representative.left].append(pair)
    consolidated = []
    for fragment in sorted(groups, key=lambda f: (f.unit_id, f.start_line, f.end_line)):
        group = groups[fragment]
        origins = tuple(sorted({p.representative.right for p in group}))
        contributors = tuple(sorted({c for p in group for c in p.contributors}))
        consolidated.append(
            ConsolidatedPair(
                pair_id=f"{fragment.unit_id}:{fragment.start_line}-{fragment.end_line}",
                snippet_fragment=fragment,
                origins=origins,
                contributors=contributors,
                source_pair_count=len(group),
            )
        )
    return consolidated


def cloned_ratio(line_count: int, fragments: Iterable[CodeFragment]) -> float:
    """Percentage of a snippet's lines covered by at least one fragment."""
    if line_count <= 0:
        return 0.0
    covered: set[int] = set()
    for fragment in fragments:
        lo = max(fragment.start_line, 1)
        hi = min(fragment.end_line, line_count)
        covered.update(range(lo, hi + 1))
    return 100.0 * len(covered) / line_count
