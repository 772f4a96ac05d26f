"""Compare snippet origins against a latest project snapshot.

For each consolidated pair the primary origin file is searched for in the
latest corpus by base name, the cloned region is re-anchored (method
signature first, then the rarest line of the fragment), and an LCS diff over
normalized lines classifies what changed. Clone age is the floored number of
whole months between the origin release and the answer post.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import date
from pathlib import PurePosixPath
from typing import Iterable, Mapping, Optional, Sequence

from .errors import AmbiguousOriginError
from .ingest import NormalizedSource, SourceFile, normalize
from .lexer import MODIFIERS, _signature_like, split_blocks, tokenize_lenient
from .merge import ConsolidatedPair
from .records import CodeFragment, Diagnostics

LOCATED = "Located"
FILE_DELETED = "FileDeleted"
REGION_DELETED = "RegionDeleted"

STATEMENT_MODIFICATION = "StatementModification"
STATEMENT_ADDITION = "StatementAddition"
STATEMENT_REMOVAL = "StatementRemoval"
METHOD_SIGNATURE_CHANGE = "MethodSignatureChange"
METHOD_REWRITING = "MethodRewriting"
FILE_DELETION = "FileDeletion"

_STATEMENT_LEVEL = frozenset(
    (STATEMENT_MODIFICATION, STATEMENT_ADDITION, STATEMENT_REMOVAL)
)

INTENTS = frozenset(
    ("Enhancement", "Deprecation", "Bug", "Refactoring", "CodingStyle", "DataChange", "Unlabeled")
)

REWRITE_THRESHOLD = 0.2

Span = tuple[int, int]


@dataclass(frozen=True)
class OriginLocation:
    """Where (if anywhere) an origin fragment lives in the latest snapshot.

    ``latest_span`` uses the latest file's original line numbers. ``anchor``
    records how the region was pinned down, for the human report.
    """

    status: str
    latest_path: Optional[str] = None
    latest_span: Optional[Span] = None
    anchor: str = ""

    def __post_init__(self) -> None:
        if self.status == LOCATED and (self.latest_path is None or self.latest_span is None):
            raise ValueError("Located requires latest_path and latest_span")


@dataclass(frozen=True)
class OutdatedVerdict:
    outdated: bool
    modifications: frozenset[str] = frozenset()
    diff_hunks: tuple[tuple[Span, Span], ...] = ()

    def __post_init__(self) -> None:
        if not self.outdated and self.modifications:
            raise ValueError("not outdated but modifications present")
        if FILE_DELETION in self.modifications:
            if self.modifications != frozenset((FILE_DELETION,)) or self.diff_hunks:
                raise ValueError("FileDeletion must be the sole, hunk-free modification")


@dataclass(frozen=True)
class ChangeIntent:
    intent: str
    issue_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.intent not in INTENTS:
            raise ValueError(f"unknown intent {self.intent!r}")


NOT_OUTDATED = OutdatedVerdict(False)


class LatestCorpus:
    """Normalized latest snapshot of one project, indexed for origin lookup."""

    def __init__(self, corpus_id: str, files: Iterable[SourceFile]) -> None:
        self.corpus_id = corpus_id
        self.units: dict[str, NormalizedSource] = {}
        self.by_base: dict[str, list[str]] = {}
        # corpus-wide line frequencies decide which origin line is "distinctive"
        self.line_freq: Counter = Counter()
        for source in files:
            unit = normalize(source.text, source.path)
            self.units[source.path] = unit
            self.by_base.setdefault(PurePosixPath(source.path).name, []).append(source.path)
            self.line_freq.update(unit.lines)
        for paths in self.by_base.values():
            paths.sort()


def _suffix_length(a: str, b: str) -> int:
    pa = PurePosixPath(a).parts
    pb = PurePosixPath(b).parts
    k = 0
    while k < len(pa) and k < len(pb) and pa[-1 - k] == pb[-1 - k]:
        k += 1
    return k


def _match_file(origin_path: str, latest: LatestCorpus) -> Optional[str]:
    """Base-name match, path-suffix tiebreak; a residual tie is an error."""
    candidates = latest.by_base.get(PurePosixPath(origin_path).name)
    if not candidates:
        return None
    if len(candidates) == 1:
        return candidates[0]
    ranked = sorted(candidates, key=lambda c: (-_suffix_length(origin_path, c), c))
    best = _suffix_length(origin_path, ranked[0])
    top = [c for c in ranked if _suffix_length(origin_path, c) == best]
    if len(top) > 1:
        raise AmbiguousOriginError(origin_path, top)
    return top[0]


def _signature_tokens(line: str) -> Optional[tuple[str, ...]]:
    """Modifier-free token sequence of a signature-like line, else None."""
    # the likeness test wants the declaration head, without the open brace
    head = line.rstrip()
    if head.endswith("{"):
        head = head[:-1]
    if not _signature_like(head):
        return None
    return tuple(t.lexeme for t in tokenize_lenient(line) if t.lexeme not in MODIFIERS)


def _region_lines(unit: NormalizedSource, start: int, end: int) -> tuple[list[str], list[int]]:
    """Normalized lines whose original numbers fall inside [start, end]."""
    lines: list[str] = []
    positions: list[int] = []
    for idx, original in enumerate(unit.line_map):
        if start <= original <= end:
            lines.append(unit.lines[idx])
            positions.append(idx)
    return lines, positions


def _original_span(unit: NormalizedSource, first: int, last: int) -> Span:
    return unit.line_map[first], unit.line_map[last]


def _anchor_by_signature(origin_lines: Sequence[str], unit: NormalizedSource) -> Optional[tuple[int, str]]:
    wanted = _signature_tokens(origin_lines[0]) if origin_lines else None
    if not wanted:
        return None
    for idx, line in enumerate(unit.lines):
        if _signature_tokens(line) == wanted:
            return idx, "signature: " + " ".join(wanted)
    return None


def _anchor_by_distinctive_line(
    origin_lines: Sequence[str], unit: NormalizedSource, latest: LatestCorpus
) -> Optional[tuple[int, int, str]]:
    """(latest index, offset inside origin, anchor label) for the rarest
    origin line that still occurs in the latest unit; rarest by corpus-wide
    frequency, then longest, then earliest in the fragment."""
    present = set(unit.lines)
    scored = [
        (latest.line_freq[line], -len(line), offset, line)
        for offset, line in enumerate(origin_lines)
        if line in present
    ]
    if not scored:
        return None
    _, _, offset, line = min(scored)
    return unit.lines.index(line), offset, "line: " + line


def locate_latest(
    origin: CodeFragment, latest: LatestCorpus, origin_text: str
) -> OriginLocation:
    """Find the origin fragment's counterpart in the latest snapshot.

    File by base name (suffix tiebreak, ambiguity raises); region by the
    fragment's signature token sequence, else its most distinctive line. A
    signature anchor takes the brace-balanced block opening there; a line
    anchor takes a window of the origin's length aligned on the hit.
    """
    path = _match_file(origin.unit_id, latest)
    if path is None:
        return OriginLocation(
            FILE_DELETED, anchor="file: " + PurePosixPath(origin.unit_id).name
        )
    unit = latest.units[path]
    origin_unit = normalize(origin_text, origin.unit_id)
    origin_lines, _ = _region_lines(origin_unit, origin.start_line, origin.end_line)
    if origin_lines and unit.lines:
        hit = _anchor_by_signature(origin_lines, unit)
        if hit is not None:
            idx, anchor = hit
            block_end = None
            for block in split_blocks(unit, min_lines=1):
                if block.start_line == idx + 1:
                    block_end = block.end_line
                    break
            if block_end is not None:
                last = block_end - 1
            else:
                last = min(idx + len(origin_lines), len(unit.lines)) - 1
            return OriginLocation(LOCATED, path, _original_span(unit, idx, last), anchor)
        fallback = _anchor_by_distinctive_line(origin_lines, unit, latest)
        if fallback is not None:
            idx, offset, anchor = fallback
            first = max(idx - offset, 0)
            last = min(first + len(origin_lines), len(unit.lines)) - 1
            return OriginLocation(LOCATED, path, _original_span(unit, first, last), anchor)
    return OriginLocation(REGION_DELETED, latest_path=path, anchor="file: " + path)


def _lcs_table(old: Sequence[str], new: Sequence[str]) -> list[list[int]]:
    rows = len(old) + 1
    cols = len(new) + 1
    dp = [[0] * cols for _ in range(rows)]
    for i in range(len(old) - 1, -1, -1):
        row = dp[i]
        below = dp[i + 1]
        for j in range(len(new) - 1, -1, -1):
            if old[i] == new[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = below[j] if below[j] >= row[j + 1] else row[j + 1]
    return dp


def lcs_hunks(old: Sequence[str], new: Sequence[str]) -> tuple[int, list[tuple[Span, Span]]]:
    """(matched line count, diff hunks) from an LCS walk.

    Ties in the walk consume the old side first, so removals precede
    insertions at the same point. Hunk spans are 1-based inclusive; an empty
    side is (k, k-1) at its insertion point.
    """
    dp = _lcs_table(old, new)
    hunks: list[tuple[Span, Span]] = []
    matched = 0
    i = j = 0
    hunk_old = hunk_new = None
    while i < len(old) or j < len(new):
        if i < len(old) and j < len(new) and old[i] == new[j]:
            if hunk_old is not None:
                hunks.append((tuple(hunk_old), tuple(hunk_new)))
                hunk_old = hunk_new = None
            matched += 1
            i += 1
            j += 1
            continue
        if hunk_old is None:
            hunk_old = [i + 1, i]
            hunk_new = [j + 1, j]
        if j >= len(new) or (i < len(old) and dp[i + 1][j] >= dp[i][j + 1]):
            hunk_old[1] = i + 1
            i += 1
        else:
            hunk_new[1] = j + 1
            j += 1
    if hunk_old is not None:
        hunks.append((tuple(hunk_old), tuple(hunk_new)))
    return matched, hunks


def diff_classify(
    old_region: Sequence[str],
    new_region: Sequence[str],
    old_signature: Optional[Sequence[str]] = None,
    new_signature: Optional[Sequence[str]] = None,
    rewrite_threshold: float = REWRITE_THRESHOLD,
) -> OutdatedVerdict:
    """Classify the change between two located regions of normalized lines.

    Hunks map to StatementModification / Addition / Removal; differing
    signature token sequences add MethodSignatureChange; a retained-line
    ratio under rewrite_threshold collapses the statement labels into
    MethodRewriting. No hunks and no signature change means not outdated.
    """
    matched, hunks = lcs_hunks(list(old_region), list(new_region))
    modifications: set[str] = set()
    for (old_start, old_end), (new_start, new_end) in hunks:
        removed = old_end >= old_start
        added = new_end >= new_start
        if removed and added:
            modifications.add(STATEMENT_MODIFICATION)
        elif added:
            modifications.add(STATEMENT_ADDITION)
        else:
            modifications.add(STATEMENT_REMOVAL)
    if old_region:
        retained = matched / len(old_region)
        if retained < rewrite_threshold:
            modifications -= _STATEMENT_LEVEL
            modifications.add(METHOD_REWRITING)
    if old_signature is not None and new_signature is not None:
        if tuple(old_signature) != tuple(new_signature):
            modifications.add(METHOD_SIGNATURE_CHANGE)
    if not modifications:
        return NOT_OUTDATED
    return OutdatedVerdict(True, frozenset(modifications), tuple(hunks))


def clone_age_months(origin_release_date: date, post_date: date) -> int:
    """Whole months from release to post, floored; negative when the post is older."""
    months = (post_date.year - origin_release_date.year) * 12
    months += post_date.month - origin_release_date.month
    if post_date.day < origin_release_date.day:
        months -= 1
    return months


@dataclass
class OutdatedRow:
    pair_id: str
    project: str
    origin: CodeFragment
    status: str
    anchor: str = ""
    latest_path: Optional[str] = None
    latest_span: Optional[Span] = None
    verdict: OutdatedVerdict = NOT_OUTDATED
    clone_age_months: Optional[int] = None
    intent: Optional[Mapping] = None
    note: str = ""

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "project": self.project,
            "origin": self.origin.to_json(),
            "status": self.status,
            "anchor": self.anchor,
            "latest_path": self.latest_path,
            "latest_span": list(self.latest_span) if self.latest_span else None,
            "outdated": self.verdict.outdated,
            "modifications": sorted(self.verdict.modifications),
            "diff_hunks": [[list(a), list(b)] for a, b in self.verdict.diff_hunks],
            "clone_age_months": self.clone_age_months,
            "intent": dict(self.intent) if self.intent is not None else None,
            "note": self.note,
        }


SKIPPED = "Skipped"
AMBIGUOUS = "Ambiguous"


def _signature_of_region(lines: Sequence[str]) -> Optional[tuple[str, ...]]:
    return _signature_tokens(lines[0]) if lines else None


def outdated_report(
    consolidated: Sequence[ConsolidatedPair],
    release_units: Mapping[tuple[str, str], str],
    latest_corpora: Mapping[str, LatestCorpus],
    intents: Optional[Mapping[str, Mapping]] = None,
    release_dates: Optional[Mapping[str, date]] = None,
    post_dates: Optional[Mapping[str, date]] = None,
    rewrite_threshold: float = REWRITE_THRESHOLD,
    diagnostics: Optional[Diagnostics] = None,
) -> tuple[list[OutdatedRow], dict]:
    """One row per consolidated pair, judged against its primary origin.

    ``release_units`` maps (corpus, unit) to the release-time file text;
    ``latest_corpora`` maps project corpus ids to their latest snapshots.
    Pairs whose project has no snapshot are marked Skipped; ambiguous file
    matches are marked Ambiguous rather than aborting the report.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    intents = intents or {}
    release_dates = release_dates or {}
    post_dates = post_dates or {}
    rows: list[OutdatedRow] = []
    for pair in consolidated:
        origin = pair.origins[0]
        row = OutdatedRow(pair.pair_id, origin.corpus_id, origin, SKIPPED)
        row.intent = intents.get(pair.pair_id)
        release = release_dates.get(origin.corpus_id)
        posted = post_dates.get(pair.snippet_fragment.unit_id)
        if release is not None and posted is not None:
            row.clone_age_months = clone_age_months(release, posted)
        latest = latest_corpora.get(origin.corpus_id)
        origin_text = release_units.get((origin.corpus_id, origin.unit_id))
        if latest is None:
            row.note = "no latest corpus registered for project"
            diag.tally("outdated.no_latest_corpus")
            rows.append(row)
            continue
        if origin_text is None:
            row.note = "origin unit missing from release corpus"
            diag.tally("outdated.missing_origin_unit")
            rows.append(row)
            continue
        try:
            location = locate_latest(origin, latest, origin_text)
        except AmbiguousOriginError as exc:
            row.status = AMBIGUOUS
            row.note = str(exc)
            diag.tally("outdated.ambiguous_origin")
            rows.append(row)
            continue
        row.status = location.status
        row.anchor = location.anchor
        row.latest_path = location.latest_path
        row.latest_span = location.latest_span
        if location.status == FILE_DELETED:
            row.verdict = OutdatedVerdict(True, frozenset((FILE_DELETION,)))
        elif location.status == REGION_DELETED:
            row.verdict = OutdatedVerdict(True, frozenset((STATEMENT_REMOVAL,)))
        else:
            origin_unit = normalize(origin_text, origin.unit_id)
            old_lines, _ = _region_lines(origin_unit, origin.start_line, origin.end_line)
            latest_unit = latest.units[location.latest_path]
            new_lines, _ = _region_lines(latest_unit, *location.latest_span)
            row.verdict = diff_classify(
                old_lines,
                new_lines,
                _signature_of_region(old_lines),
                _signature_of_region(new_lines),
                rewrite_threshold=rewrite_threshold,
            )
        rows.append(row)
    by_project: dict[str, dict[str, int]] = {}
    by_modification: Counter = Counter()
    for row in rows:
        if row.status in (SKIPPED, AMBIGUOUS):
            continue
        bucket = by_project.setdefault(row.project, {"pairs": 0, "outdated": 0})
        bucket["pairs"] += 1
        if row.verdict.outdated:
            bucket["outdated"] += 1
        by_modification.update(row.verdict.modifications)
    aggregates = {
        "by_project": {name: by_project[name] for name in sorted(by_project)},
        "by_modification": dict(sorted(by_modification.items())),
    }
    return rows, aggregates


def latest_from_files(corpus_id: str, files: Iterable[SourceFile]) -> LatestCorpus:
    return LatestCorpus(corpus_id, files)
