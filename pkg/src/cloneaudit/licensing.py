"""License identification for source headers and conflict classification.

Identification is catalog-driven: ``data/license_catalog.json`` maps each
license id to clauses of required substrings, checked against a canonical
rendering of the leading comments of a file. The catalog is data, not code,
so new licenses are added without touching this module.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .errors import ValidationError
from .merge import ConsolidatedPair
from .records import Diagnostics

UNKNOWN = "Unknown"
SEE_FILE = "SeeFile"

COMPATIBLE = "Compatible"
INCOMPATIBLE = "Incompatible"
VERDICT_UNKNOWN = "Unknown"

SITE_DEFAULT_LICENSE = "CC-BY-SA-3.0"

#: Leading comments are scanned only this deep; license headers live at the top.
HEADER_SCAN_LINES = 60

_GUTTER = re.compile(r"^\s*\*+\s?")
_SPACES = re.compile(r"\s+")


@dataclass(frozen=True)
class LicenseFinding:
    """Outcome of scanning one unit's header.

    ``license`` is a catalog id, ``SeeFile``, ``Unknown``, or None when the
    header carries no license signal at all.
    """

    unit_id: str
    license: Optional[str]
    matched_sentence: str = ""

    def to_json(self) -> dict:
        return {
            "unit": self.unit_id,
            "license": self.license,
            "matched_sentence": self.matched_sentence,
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "LicenseFinding":
        return cls(
            unit_id=payload["unit"],
            license=payload["license"],
            matched_sentence=payload.get("matched_sentence", ""),
        )


@dataclass(frozen=True)
class ConflictVerdict:
    origin_license: Optional[str]
    snippet_license: str
    verdict: str


class LicenseCatalog:
    """Parsed catalog: ordered license entries plus SeeFile / license-like markers."""

    def __init__(self, payload: Mapping) -> None:
        self.entries: list[tuple[str, list[list[str]]]] = [
            (entry["id"], [list(clause) for clause in entry["clauses"]])
            for entry in payload["licenses"]
        ]
        self.see_file: tuple[str, ...] = tuple(payload.get("see_file", ()))
        self.license_like: tuple[str, ...] = tuple(payload.get("license_like", ()))
        self.ids: frozenset[str] = frozenset(name for name, _ in self.entries)


_catalog: Optional[LicenseCatalog] = None


def default_catalog() -> LicenseCatalog:
    global _catalog
    if _catalog is None:
        raw = resources.files("cloneaudit.data").joinpath("license_catalog.json")
        _catalog = LicenseCatalog(json.loads(raw.read_text(encoding="utf-8")))
    return _catalog


def _header_text(text: str, max_lines: int = HEADER_SCAN_LINES) -> str:
    """Canonical text of the leading comments.

    Collects comment content only (line and block comments) from the first
    ``max_lines`` lines, strips ``*`` gutters, lowercases, collapses runs of
    whitespace, and joins lines with single spaces so clauses may span lines.
    String literals are skipped so embedded license words in code do not count.
    """
    collected: list[str] = []
    in_block = False
    for lineno, line in enumerate(text.splitlines()):
        if lineno >= max_lines:
            break
        i = 0
        n = len(line)
        quote = ""
        piece: list[str] = []
        while i < n:
            c = line[i]
            if in_block:
                if c == "*" and i + 1 < n and line[i + 1] == "/":
                    in_block = False
                    i += 2
                    continue
                piece.append(c)
                i += 1
                continue
            if quote:
                if c == "\\" and i + 1 < n:
                    i += 2
                    continue
                if c == quote:
                    quote = ""
                i += 1
                continue
            if c in "\"'":
                quote = c
                i += 1
                continue
            if c == "/" and i + 1 < n and line[i + 1] == "/":
                piece.append(line[i + 2 :])
                break
            if c == "/" and i + 1 < n and line[i + 1] == "*":
                in_block = True
                i += 2
                continue
            i += 1
        cleaned = _GUTTER.sub("", "".join(piece)).strip()
        if cleaned:
            collected.append(_SPACES.sub(" ", cleaned.lower()))
    return " ".join(collected)


def _sentence_around(canonical: str, needle: str) -> str:
    pos = canonical.find(needle)
    if pos < 0:
        return needle
    start = canonical.rfind(".", 0, pos) + 1
    end = canonical.find(".", pos + len(needle))
    if end < 0:
        end = min(len(canonical), pos + len(needle) + 120)
    return canonical[start:end].strip()


def identify_license(
    text: str,
    unit_id: str = "",
    catalog: Optional[LicenseCatalog] = None,
    max_lines: int = HEADER_SCAN_LINES,
) -> LicenseFinding:
    """Classify the license declared in a unit's leading comments.

    Resolution order: catalog entry, then SeeFile redirection, then a bare
    license-like sentence (Unknown), then None. Comment marker style does not
    matter; ``// x``, ``/* x */`` and gutter blocks canonicalize identically.
    """
    cat = catalog or default_catalog()
    canonical = _header_text(text, max_lines=max_lines)
    if canonical:
        for name, clauses in cat.entries:
            for clause in clauses:
                if all(part in canonical for part in clause):
                    return LicenseFinding(unit_id, name, _sentence_around(canonical, clause[0]))
        for marker in cat.see_file:
            if marker in canonical:
                return LicenseFinding(unit_id, SEE_FILE, _sentence_around(canonical, marker))
        for marker in cat.license_like:
            if marker in canonical:
                return LicenseFinding(unit_id, UNKNOWN, _sentence_around(canonical, marker))
    return LicenseFinding(unit_id, None, "")


def effective_snippet_license(
    finding: Optional[LicenseFinding],
    site_default: str = SITE_DEFAULT_LICENSE,
) -> str:
    """Snippet side of a comparison: absent or unmarked snippets inherit the site default."""
    if finding is None or finding.license is None:
        return site_default
    return finding.license


MatrixKey = tuple[str, str]


def load_matrix(path) -> dict[MatrixKey, str]:
    """Read verdict overrides from a TOML file of [[rule]] tables."""
    with open(path, "rb") as handle:
        payload = tomllib.load(handle)
    matrix: dict[MatrixKey, str] = {}
    for rule in payload.get("rule", []):
        try:
            origin = rule["origin"]
            snippet = rule["snippet"]
            verdict = rule["verdict"]
        except KeyError as exc:
            raise ValidationError(f"matrix rule missing key: {exc}") from None
        if verdict not in (COMPATIBLE, INCOMPATIBLE, VERDICT_UNKNOWN):
            raise ValidationError(f"matrix rule has unknown verdict {verdict!r}")
        matrix[(origin, snippet)] = verdict
    return matrix


def classify_conflict(
    origin: Optional[LicenseFinding],
    snippet: Optional[LicenseFinding],
    matrix: Optional[Mapping[MatrixKey, str]] = None,
    site_default: str = SITE_DEFAULT_LICENSE,
) -> ConflictVerdict:
    """Compare an origin file's license with a snippet's effective license.

    Rule ladder, first match wins:
      explicit matrix override; origin without any license signal is
      reusable (Compatible) unless the snippet side is itself undetermined;
      identical catalog licenses are Compatible; SeeFile or Unknown on either
      side leaves the verdict Unknown except that a positively Unknown origin
      header against a determinate snippet license is Incompatible; any other
      pairing of known, different licenses defaults to Incompatible.
    """
    origin_license = origin.license if origin is not None else UNKNOWN
    snippet_license = effective_snippet_license(snippet, site_default)
    key = (origin_license if origin_license is not None else "None", snippet_license)
    if matrix and key in matrix:
        return ConflictVerdict(origin_license, snippet_license, matrix[key])
    if origin_license is None:
        if snippet_license in (UNKNOWN, SEE_FILE):
            verdict = VERDICT_UNKNOWN
        else:
            verdict = COMPATIBLE
    elif origin_license == snippet_license and origin_license not in (UNKNOWN, SEE_FILE):
        verdict = COMPATIBLE
    elif origin_license == SEE_FILE or snippet_license in (UNKNOWN, SEE_FILE):
        verdict = VERDICT_UNKNOWN
    else:
        # covers a positively Unknown origin header and any known-different pairing
        verdict = INCOMPATIBLE
    return ConflictVerdict(origin_license, snippet_license, verdict)


FindingKey = tuple[str, str]


def license_report(
    consolidated: Sequence[ConsolidatedPair],
    findings: Mapping[FindingKey, LicenseFinding],
    matrix: Optional[Mapping[MatrixKey, str]] = None,
    site_default: str = SITE_DEFAULT_LICENSE,
    diagnostics: Optional[Diagnostics] = None,
) -> tuple[list[dict], list[dict]]:
    """Build per-(snippet, origin file) conflict rows plus an aggregate.

    ``findings`` is keyed by (corpus_id, unit_id). A pair's snippet meets every
    one of its origin files exactly once; repeated combinations across pairs
    are deduplicated. Units never scanned count as Unknown and are tallied.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    rows: dict[tuple[str, str, str], dict] = {}
    for pair in consolidated:
        frag = pair.snippet_fragment
        snippet_finding = findings.get((frag.corpus_id, frag.unit_id))
        if snippet_finding is None:
            diag.tally("license.missing_snippet_finding")
            snippet_finding = LicenseFinding(frag.unit_id, UNKNOWN)
        for origin in pair.origins:
            key = (frag.unit_id, origin.corpus_id, origin.unit_id)
            if key in rows:
                continue
            origin_finding = findings.get((origin.corpus_id, origin.unit_id))
            if origin_finding is None:
                diag.tally("license.missing_origin_finding")
                origin_finding = LicenseFinding(origin.unit_id, UNKNOWN)
            verdict = classify_conflict(
                origin_finding, snippet_finding, matrix=matrix, site_default=site_default
            )
            rows[key] = {
                "snippet_unit": frag.unit_id,
                "origin_corpus": origin.corpus_id,
                "origin_unit": origin.unit_id,
                "origin_license": verdict.origin_license,
                "snippet_license": verdict.snippet_license,
                "verdict": verdict.verdict,
            }
    ordered = [rows[key] for key in sorted(rows)]
    counts: dict[tuple[str, str, str], int] = {}
    for row in ordered:
        origin_name = row["origin_license"] if row["origin_license"] is not None else "None"
        bucket = (origin_name, row["snippet_license"], row["verdict"])
        counts[bucket] = counts.get(bucket, 0) + 1
    aggregate = [
        {
            "origin_license": origin_name,
            "snippet_license": snippet_name,
            "verdict": verdict,
            "count": count,
        }
        for (origin_name, snippet_name, verdict), count in sorted(counts.items())
    ]
    return ordered, aggregate


def scan_units(
    units: Iterable[tuple[str, str, str]],
    catalog: Optional[LicenseCatalog] = None,
) -> dict[FindingKey, LicenseFinding]:
    """Identify licenses for (corpus_id, unit_id, text) triples."""
    out: dict[FindingKey, LicenseFinding] = {}
    for corpus_id, unit_id, text in units:
        out[(corpus_id, unit_id)] = identify_license(text, unit_id=unit_id, catalog=catalog)
    return out
