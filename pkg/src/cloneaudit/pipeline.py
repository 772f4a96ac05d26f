"""Phase orchestration: config loading, artifact files, resume, manifest.

Every phase writes its artifacts before the next phase starts, so a rerun
resumes from the first missing artifact. All artifacts are deterministic
(sorted rows, sorted keys); only the manifest carries timestamps.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields as dataclass_fields
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Optional

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from . import detect, ingest, licensing, merge as merge_mod, outdated as outdated_mod, triage
from .errors import PhaseError, ValidationError
from .lexer import LineNormOptions
from .records import Diagnostics, ClonePair, json_line, read_jsonl, write_jsonl

SNIPPETS = "snippets.jsonl"
POSTS = "posts.jsonl"
CORPUS = "corpus.jsonl"
TOKEN_CLONES = "clones.token.jsonl"
LINE_CLONES = "clones.line.jsonl"
DETECT_SUMMARY = "detect.summary.json"
MERGED = "merged.jsonl"
CONSOLIDATED = "consolidated.jsonl"
MERGE_SUMMARY = "merge.summary.json"
TRIAGE_STORE = "triage.jsonl"
OUTDATED = "outdated.jsonl"
OUTDATED_SUMMARY = "outdated.summary.json"
LICENSES = "licenses.jsonl"
CONFLICTS = "conflicts.jsonl"
LICENSE_SUMMARY = "license.summary.json"
MANIFEST = "manifest.json"


@dataclass
class CorpusSpec:
    name: str
    root: Path
    version: str = ""
    release_date: Optional[date] = None


@dataclass
class PipelineConfig:
    out_dir: Path = Path("artifacts")
    dump_path: Optional[Path] = None
    corpora: list[CorpusSpec] = field(default_factory=list)
    latest_roots: dict[str, Path] = field(default_factory=dict)
    intents_path: Optional[Path] = None
    ingest: ingest.IngestConfig = field(default_factory=ingest.IngestConfig)
    detector: detect.DetectorConfig = field(default_factory=detect.DetectorConfig)
    merge: merge_mod.MergeConfig = field(default_factory=merge_mod.MergeConfig)
    matrix_path: Optional[Path] = None
    site_default: str = licensing.SITE_DEFAULT_LICENSE
    rewrite_threshold: float = outdated_mod.REWRITE_THRESHOLD
    reviewers: Optional[tuple[str, str]] = None
    store_path: Optional[Path] = None
    jobs: int = 1

    def resolved_store(self) -> Path:
        return self.store_path if self.store_path is not None else self.out_dir / TRIAGE_STORE


def _as_date(value: Any, label: str) -> Optional[date]:
    if value is None or isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ValidationError(f"{label} is not a date: {value!r}") from None


def _take(table: Mapping, *keys: str) -> dict:
    unknown = set(table) - set(keys)
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return dict(table)


def _section_config(table: Mapping, factory):
    allowed = {f.name for f in dataclass_fields(factory)}
    unknown = set(table) - allowed
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(table)
    for name in ("tags", "source_extensions"):
        if name in kwargs:
            kwargs[name] = tuple(kwargs[name])
    return factory(**kwargs)


def load_config(
    path: Optional[str | Path] = None,
    out_override: Optional[str | Path] = None,
    jobs: Optional[int] = None,
) -> PipelineConfig:
    """Build a PipelineConfig from a TOML file; relative paths resolve
    against the config file's directory."""
    cfg = PipelineConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        with path.open("rb") as handle:
            try:
                payload = tomllib.load(handle)
            except tomllib.TOMLDecodeError as exc:
                raise ValidationError(f"config parse error: {exc}") from None
        base = path.parent

        def resolve(p: Any) -> Path:
            p = Path(str(p))
            return p if p.is_absolute() else base / p

        top = _take(
            payload, "out", "inputs", "ingest", "detector", "merge",
            "license", "outdated", "triage", "jobs",
        )
        if "out" in top:
            cfg.out_dir = resolve(top["out"])
        cfg.jobs = int(top.get("jobs", cfg.jobs))
        inputs = _take(
            top.get("inputs", {}), "dump", "corpus", "latest", "intents"
        )
        if "dump" in inputs:
            cfg.dump_path = resolve(inputs["dump"])
        for spec in inputs.get("corpus", []):
            spec = _take(spec, "name", "root", "version", "release_date")
            cfg.corpora.append(
                CorpusSpec(
                    name=spec["name"],
                    root=resolve(spec["root"]),
                    version=spec.get("version", ""),
                    release_date=_as_date(spec.get("release_date"), "release_date"),
                )
            )
        for name, root in inputs.get("latest", {}).items():
            cfg.latest_roots[name] = resolve(root)
        if "intents" in inputs:
            cfg.intents_path = resolve(inputs["intents"])
        if "ingest" in top:
            cfg.ingest = _section_config(top["ingest"], ingest.IngestConfig)
        if "detector" in top:
            det = dict(top["detector"])
            norm = det.pop("line_norm", None)
            det = _take(det, "min_clone_lines", "token_similarity")
            if norm is not None:
                det["line_norm"] = _section_config(norm, LineNormOptions)
            cfg.detector = detect.DetectorConfig(**det)
        if "merge" in top:
            cfg.merge = _section_config(top["merge"], merge_mod.MergeConfig)
        lic = _take(top.get("license", {}), "matrix", "site_default")
        if "matrix" in lic:
            cfg.matrix_path = resolve(lic["matrix"])
        cfg.site_default = lic.get("site_default", cfg.site_default)
        out_tbl = _take(top.get("outdated", {}), "rewrite_threshold")
        cfg.rewrite_threshold = float(
            out_tbl.get("rewrite_threshold", cfg.rewrite_threshold)
        )
        tri = _take(top.get("triage", {}), "reviewers", "store")
        if "reviewers" in tri:
            reviewers = list(tri["reviewers"])
            if len(reviewers) != 2:
                raise ValidationError("triage.reviewers must list exactly two ids")
            cfg.reviewers = (reviewers[0], reviewers[1])
        if "store" in tri:
            cfg.store_path = resolve(tri["store"])
    if out_override is not None:
        cfg.out_dir = Path(out_override)
    if jobs is not None:
        cfg.jobs = jobs
    return cfg


def validate_inputs(cfg: PipelineConfig) -> None:
    if cfg.dump_path is not None and not cfg.dump_path.is_file():
        raise ValidationError(f"dump file not found: {cfg.dump_path}")
    for spec in cfg.corpora:
        if not spec.root.is_dir():
            raise ValidationError(f"corpus root not found: {spec.root}")
    for name, root in cfg.latest_roots.items():
        if not root.is_dir():
            raise ValidationError(f"latest corpus root not found ({name}): {root}")
    if cfg.matrix_path is not None and not cfg.matrix_path.is_file():
        raise ValidationError(f"license matrix not found: {cfg.matrix_path}")
    if cfg.intents_path is not None and not cfg.intents_path.is_file():
        raise ValidationError(f"intents file not found: {cfg.intents_path}")


# ---------------------------------------------------------------- artifacts


def write_json(path: str | Path, payload: Any) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json_line(payload) + "\n", encoding="utf-8")
    tmp.replace(path)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _artifact_entry(path: Path) -> dict:
    records = 1
    if path.suffix == ".jsonl" or path.name == TRIAGE_STORE:
        with path.open("r", encoding="utf-8") as handle:
            records = sum(1 for line in handle if line.strip())
    return {"sha256": _sha256(path), "records": records}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------- the run


def load_intents(path: str | Path) -> dict[str, dict]:
    intents: dict[str, dict] = {}
    for row in read_jsonl(path):
        try:
            outdated_mod.ChangeIntent(row["intent"], row.get("issue_id"))
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"bad intent row {row!r}: {exc}") from None
        intents[row["pair_id"]] = {
            "intent": row["intent"],
            "issue_id": row.get("issue_id"),
        }
    return intents


def _fragment_text(full_text: str, start: int, end: int) -> str:
    return "\n".join(full_text.split("\n")[start - 1 : end])


class PipelineRun:
    """Mutable state threaded through the phases of one run."""

    def __init__(self, cfg: PipelineConfig, diagnostics: Optional[Diagnostics] = None):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.diag = diagnostics if diagnostics is not None else Diagnostics()
        self.store_path = cfg.resolved_store()
        self.manifest: dict = {"created": _now(), "phases": [], "paused": False}
        self.snippets: list[ingest.Snippet] = []
        self.posts: list[dict] = []
        self.corpus_files: dict[str, list[ingest.SourceFile]] = {}
        self.token_report: list[ClonePair] = []
        self.line_report: list[ClonePair] = []
        self.merged: list[merge_mod.MergedClonePair] = []
        self.consolidated: list[merge_mod.ConsolidatedPair] = []

    # -------------------------------------------------------- manifest

    def _write_manifest(self) -> None:
        self.manifest["diagnostics"] = self.diag.as_dict()
        write_json(self.out / MANIFEST, self.manifest)

    def _record_phase(self, name: str, artifacts: list[Path], skipped: bool,
                      started: str, error: Optional[str] = None) -> None:
        entry: dict = {
            "name": name,
            "started": started,
            "finished": _now(),
            "skipped": skipped,
            "artifacts": {p.name: _artifact_entry(p) for p in artifacts if p.exists()},
        }
        if error is not None:
            entry["error"] = error
        self.manifest["phases"].append(entry)
        self._write_manifest()

    def _run_phase(self, name: str, artifacts: list[Path], ready: bool, body) -> None:
        started = _now()
        if ready:
            body(load_only=True)
            self._record_phase(name, artifacts, skipped=True, started=started)
            return
        try:
            body(load_only=False)
        except Exception as exc:
            self._record_phase(name, artifacts, skipped=False, started=started,
                               error=f"{type(exc).__name__}: {exc}")
            raise
        self._record_phase(name, artifacts, skipped=False, started=started)

    # -------------------------------------------------------- phases

    def phase_ingest(self, load_only: bool) -> None:
        if load_only:
            self.snippets = [
                ingest.Snippet.from_json(row) for row in read_jsonl(self.out / SNIPPETS)
            ]
            self.posts = list(read_jsonl(self.out / POSTS))
            return
        if self.cfg.dump_path is None:
            raise PhaseError("no dump file configured")
        self.snippets, self.posts = ingest.ingest_dump(
            self.cfg.dump_path, self.cfg.ingest, self.diag
        )
        write_jsonl(self.out / SNIPPETS, (s.to_json() for s in self.snippets))
        write_jsonl(self.out / POSTS, self.posts)

    def phase_scan(self, load_only: bool) -> None:
        if load_only:
            by_corpus: dict[str, list[ingest.SourceFile]] = {}
            for row in read_jsonl(self.out / CORPUS):
                text = (Path(row["root"]) / row["path"]).read_text(
                    encoding="utf-8", errors="replace"
                )
                release = _as_date(row.get("release_date"), "release_date")
                by_corpus.setdefault(row["corpus"], []).append(
                    ingest.SourceFile(
                        row["corpus"], row["path"], text, row.get("version", ""), release
                    )
                )
            self.corpus_files = by_corpus
            return
        rows = []
        for spec in self.cfg.corpora:
            files = ingest.scan_corpus(
                spec.root, spec.name, spec.version,
                self.cfg.ingest.source_extensions, spec.release_date, self.diag,
            )
            self.corpus_files[spec.name] = files
            rows.extend(f.to_json(str(spec.root)) for f in files)
        write_jsonl(self.out / CORPUS, rows)

    def phase_detect(self, load_only: bool) -> None:
        if load_only:
            self.token_report = [
                ClonePair.from_json(row) for row in read_jsonl(self.out / TOKEN_CLONES)
            ]
            self.line_report = [
                ClonePair.from_json(row) for row in read_jsonl(self.out / LINE_CLONES)
            ]
            return
        snippet_sources = [
            ingest.normalize(s.text, s.snippet_id) for s in self.snippets
        ]
        per_corpus = {}
        for spec in self.cfg.corpora:
            corpus_sources = [
                ingest.normalize(f.text, f.path) for f in self.corpus_files[spec.name]
            ]
            token, line, summary = detect.run_detection(
                snippet_sources, corpus_sources, self.cfg.detector,
                spec.name, diagnostics=self.diag,
            )
            self.token_report.extend(token)
            self.line_report.extend(line)
            per_corpus[spec.name] = summary
        self.token_report.sort(key=ClonePair.key)
        self.line_report.sort(key=ClonePair.key)
        write_jsonl(self.out / TOKEN_CLONES, (p.to_json() for p in self.token_report))
        write_jsonl(self.out / LINE_CLONES, (p.to_json() for p in self.line_report))
        write_json(
            self.out / DETECT_SUMMARY,
            {
                "token": {"pairs": len(self.token_report)},
                "line": {"pairs": len(self.line_report)},
                "per_corpus": per_corpus,
            },
        )

    def phase_merge(self, load_only: bool) -> None:
        if load_only:
            self.merged = [
                merge_mod.MergedClonePair.from_json(row)
                for row in read_jsonl(self.out / MERGED)
            ]
            self.consolidated = [
                merge_mod.ConsolidatedPair.from_json(row)
                for row in read_jsonl(self.out / CONSOLIDATED)
            ]
            return
        self.merged = merge_mod.merge_reports(
            self.token_report, self.line_report, self.cfg.merge
        )
        self.consolidated = merge_mod.consolidate(self.merged)
        write_jsonl(self.out / MERGED, (p.to_json() for p in self.merged))
        write_jsonl(self.out / CONSOLIDATED, (p.to_json() for p in self.consolidated))
        summary = merge_mod.merge_summary(self.merged)
        summary["consolidated"] = len(self.consolidated)
        summary["avg_cloned_ratio"] = self._avg_cloned_ratio()
        write_json(self.out / MERGE_SUMMARY, summary)

    def _avg_cloned_ratio(self) -> float:
        """Mean cloned ratio over snippets that have at least one clone."""
        line_counts = {s.snippet_id: s.line_count for s in self.snippets}
        by_unit: dict[str, list] = {}
        for pair in self.consolidated:
            by_unit.setdefault(pair.snippet_fragment.unit_id, []).append(
                pair.snippet_fragment
            )
        ratios = [
            merge_mod.cloned_ratio(line_counts.get(unit, 0), fragments)
            for unit, fragments in by_unit.items()
        ]
        return round(sum(ratios) / len(ratios), 2) if ratios else 0.0

    def phase_triage(self, load_only: bool) -> None:
        if load_only:
            return
        snippet_text = {s.snippet_id: s.text for s in self.snippets}
        post_by_id = {row["post_id"]: row for row in self.posts}
        post_of_snippet = {s.snippet_id: post_by_id.get(s.post_id) for s in self.snippets}
        unit_text = {
            (spec.name, f.path): f.text
            for spec in self.cfg.corpora
            for f in self.corpus_files.get(spec.name, [])
        }
        bundles = {}
        for pair in self.consolidated:
            frag = pair.snippet_fragment
            full = snippet_text.get(frag.unit_id, "")
            origin_texts = []
            for origin in pair.origins:
                text = unit_text.get((origin.corpus_id, origin.unit_id), "")
                origin_texts.append(
                    (
                        triage.origin_key(origin),
                        _fragment_text(text, origin.start_line, origin.end_line),
                    )
                )
            post = post_of_snippet.get(frag.unit_id) or {}
            bundles[pair.pair_id] = triage.make_bundle(
                pair,
                _fragment_text(full, frag.start_line, frag.end_line),
                origin_texts,
                post.get("text", ""),
                post.get("url", ""),
            )
        triage.TriageStore.create(
            self.store_path, self.consolidated, bundles, self.cfg.reviewers
        ).close()
        if self.consolidated:
            self.manifest["paused"] = True

    def phase_outdated(self, load_only: bool) -> None:
        if load_only:
            return
        release_units = {
            (spec.name, f.path): f.text
            for spec in self.cfg.corpora
            for f in self.corpus_files.get(spec.name, [])
        }
        latest_corpora = {}
        for name, root in self.cfg.latest_roots.items():
            files = ingest.scan_corpus(
                root, name, "latest", self.cfg.ingest.source_extensions,
                diagnostics=self.diag,
            )
            latest_corpora[name] = outdated_mod.LatestCorpus(name, files)
        intents = (
            load_intents(self.cfg.intents_path)
            if self.cfg.intents_path is not None
            else {}
        )
        release_dates = {
            spec.name: spec.release_date
            for spec in self.cfg.corpora
            if spec.release_date is not None
        }
        post_dates = {
            s.snippet_id: s.post_date for s in self.snippets if s.post_date is not None
        }
        rows, aggregates = outdated_mod.outdated_report(
            self.consolidated, release_units, latest_corpora,
            intents=intents, release_dates=release_dates, post_dates=post_dates,
            rewrite_threshold=self.cfg.rewrite_threshold, diagnostics=self.diag,
        )
        write_jsonl(self.out / OUTDATED, (row.to_json() for row in rows))
        write_json(self.out / OUTDATED_SUMMARY, aggregates)

    def phase_license(self, load_only: bool) -> None:
        if load_only:
            return
        snippet_text = {s.snippet_id: s.text for s in self.snippets}
        unit_text = {
            (spec.name, f.path): f.text
            for spec in self.cfg.corpora
            for f in self.corpus_files.get(spec.name, [])
        }
        findings: dict[tuple[str, str], licensing.LicenseFinding] = {}
        for pair in self.consolidated:
            frag = pair.snippet_fragment
            key = (frag.corpus_id, frag.unit_id)
            if key not in findings and frag.unit_id in snippet_text:
                findings[key] = licensing.identify_license(
                    snippet_text[frag.unit_id], unit_id=frag.unit_id
                )
            for origin in pair.origins:
                okey = (origin.corpus_id, origin.unit_id)
                if okey not in findings and okey in unit_text:
                    findings[okey] = licensing.identify_license(
                        unit_text[okey], unit_id=origin.unit_id
                    )
        matrix = (
            licensing.load_matrix(self.cfg.matrix_path)
            if self.cfg.matrix_path is not None
            else None
        )
        rows, aggregate = licensing.license_report(
            self.consolidated, findings, matrix=matrix,
            site_default=self.cfg.site_default, diagnostics=self.diag,
        )
        write_jsonl(
            self.out / LICENSES,
            (
                {"corpus": corpus, **findings[(corpus, unit)].to_json()}
                for corpus, unit in sorted(findings)
            ),
        )
        write_jsonl(self.out / CONFLICTS, rows)
        write_json(self.out / LICENSE_SUMMARY, {"aggregate": aggregate})

    # -------------------------------------------------------- driver

    def run(self) -> dict:
        try:
            validate_inputs(self.cfg)
        except ValidationError:
            # manifest with an empty completed prefix
            self._write_manifest()
            raise
        out = self.out
        phases = [
            ("ingest", [out / SNIPPETS, out / POSTS], self.phase_ingest),
            ("scan", [out / CORPUS], self.phase_scan),
            ("detect", [out / TOKEN_CLONES, out / LINE_CLONES, out / DETECT_SUMMARY],
             self.phase_detect),
            ("merge", [out / MERGED, out / CONSOLIDATED, out / MERGE_SUMMARY],
             self.phase_merge),
            ("triage", [self.store_path], self.phase_triage),
            ("outdated", [out / OUTDATED, out / OUTDATED_SUMMARY], self.phase_outdated),
            ("license", [out / LICENSES, out / CONFLICTS, out / LICENSE_SUMMARY],
             self.phase_license),
        ]
        for name, artifacts, body in phases:
            ready = all(p.exists() for p in artifacts)
            self._run_phase(name, artifacts, ready, body)
            if name == "triage" and self.manifest["paused"]:
                # interactive classification happens out of band; a later
                # run finds the store on disk and proceeds past this point
                break
        self._write_manifest()
        return self.manifest


def run_pipeline(cfg: PipelineConfig, diagnostics: Optional[Diagnostics] = None) -> dict:
    return PipelineRun(cfg, diagnostics).run()
