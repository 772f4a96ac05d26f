"""Command-line entry points.

Subcommands mirror the pipeline phases and share its artifact layout, so
`cloneaudit detect` after `cloneaudit ingest` behaves exactly like the
corresponding prefix of `cloneaudit run`. Exit codes: 0 success, 1 usage,
2 phase failure, 3 validation failure.
"""

from __future__ import annotations

import json
from datetime import date
from pathlib import Path
from typing import Optional

import click

from . import report, server
from .errors import CloneAuditError, PhaseError, ValidationError
from .pipeline import (
    PipelineConfig,
    PipelineRun,
    CorpusSpec,
    load_config,
    write_json,
)
from .triage import TriageStore


def _config(ctx: click.Context) -> PipelineConfig:
    opts = ctx.obj
    return load_config(opts["config"], out_override=opts["out"], jobs=opts["jobs"])


def _parse_named_paths(values: tuple[str, ...], option: str) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for value in values:
        name, sep, path = value.partition("=")
        if not sep or not name or not path:
            raise click.UsageError(f"{option} expects name=path, got {value!r}")
        out[name] = Path(path)
    return out


def _parse_named_dates(values: tuple[str, ...], option: str) -> dict[str, date]:
    out: dict[str, date] = {}
    for value in values:
        name, sep, raw = value.partition("=")
        if not sep or not name or not raw:
            raise click.UsageError(f"{option} expects name=YYYY-MM-DD, got {value!r}")
        try:
            out[name] = date.fromisoformat(raw)
        except ValueError:
            raise click.UsageError(f"{option}: {raw!r} is not a date") from None
    return out


@click.group()
@click.option(
    "--config", "config", type=click.Path(path_type=Path), default=None,
    envvar="CLONEAUDIT_CONFIG", help="Pipeline configuration (TOML).",
)
@click.option(
    "--out", "out", type=click.Path(path_type=Path), default=None,
    help="Artifact directory (overrides the config).",
)
@click.option("--jobs", type=int, default=None, help="Worker count hint.")
@click.pass_context
def cli(ctx: click.Context, config: Optional[Path], out: Optional[Path],
        jobs: Optional[int]) -> None:
    """Audit code clones between Q&A snippets and project corpora."""
    ctx.obj = {"config": config, "out": out, "jobs": jobs}


@cli.command("ingest")
@click.option("--dump", type=click.Path(path_type=Path), default=None,
              help="Posts dump file (overrides the config).")
@click.pass_context
def ingest_cmd(ctx: click.Context, dump: Optional[Path]) -> None:
    """Extract snippets from the accepted answers of a posts dump."""
    cfg = _config(ctx)
    if dump is not None:
        cfg.dump_path = dump
    run = PipelineRun(cfg)
    run.phase_ingest(load_only=False)
    click.echo(f"snippets: {len(run.snippets)}, answers: {len(run.posts)}")


@cli.command("scan")
@click.option("--corpus", "corpora", multiple=True, metavar="NAME=DIR",
              help="Corpus root (repeatable; overrides the config).")
@click.pass_context
def scan_cmd(ctx: click.Context, corpora: tuple[str, ...]) -> None:
    """Walk project corpora and record their source files."""
    cfg = _config(ctx)
    if corpora:
        named = _parse_named_paths(corpora, "--corpus")
        cfg.corpora = [CorpusSpec(name, root) for name, root in named.items()]
    run = PipelineRun(cfg)
    run.phase_scan(load_only=False)
    total = sum(len(files) for files in run.corpus_files.values())
    click.echo(f"corpora: {len(run.corpus_files)}, files: {total}")


@cli.command("detect")
@click.pass_context
def detect_cmd(ctx: click.Context) -> None:
    """Run both detectors over previously ingested artifacts."""
    run = PipelineRun(_config(ctx))
    run.phase_ingest(load_only=True)
    run.phase_scan(load_only=True)
    run.phase_detect(load_only=False)
    click.echo(
        f"token pairs: {len(run.token_report)}, line pairs: {len(run.line_report)}"
    )


@cli.command("merge")
@click.option("--t", "threshold", type=float, default=None,
              help="ok-match threshold (overrides the config).")
@click.pass_context
def merge_cmd(ctx: click.Context, threshold: Optional[float]) -> None:
    """Merge the two detector reports and consolidate by snippet fragment."""
    cfg = _config(ctx)
    if threshold is not None:
        cfg.merge = type(cfg.merge)(t=threshold)
    run = PipelineRun(cfg)
    run.phase_ingest(load_only=True)
    run.phase_detect(load_only=True)
    run.phase_merge(load_only=False)
    click.echo(
        f"merged groups: {len(run.merged)}, consolidated: {len(run.consolidated)}"
    )


@cli.command("license")
@click.option("--consolidated", type=click.Path(path_type=Path), default=None,
              help="Consolidated report (defaults to the artifact).")
@click.option("--matrix", type=click.Path(path_type=Path), default=None,
              help="Verdict override matrix (TOML).")
@click.option("--site-default", default=None,
              help="Effective license for unmarked snippets.")
@click.pass_context
def license_cmd(ctx: click.Context, consolidated: Optional[Path],
                matrix: Optional[Path], site_default: Optional[str]) -> None:
    """Identify licenses and classify snippet/origin conflicts."""
    cfg = _config(ctx)
    if matrix is not None:
        cfg.matrix_path = matrix
    if site_default is not None:
        cfg.site_default = site_default
    run = PipelineRun(cfg)
    run.phase_ingest(load_only=True)
    run.phase_scan(load_only=True)
    if consolidated is not None:
        from .merge import ConsolidatedPair
        from .records import read_jsonl

        run.consolidated = [
            ConsolidatedPair.from_json(row) for row in read_jsonl(consolidated)
        ]
    else:
        run.phase_merge(load_only=True)
    run.phase_license(load_only=False)
    click.echo(f"license rows written for {len(run.consolidated)} pairs")


@cli.command("outdated")
@click.option("--consolidated", type=click.Path(path_type=Path), default=None,
              help="Consolidated report (defaults to the artifact).")
@click.option("--latest", "latest", multiple=True, metavar="NAME=DIR",
              help="Latest corpus snapshot per project (repeatable).")
@click.option("--release-date", "release_dates", multiple=True,
              metavar="NAME=YYYY-MM-DD",
              help="Origin release date per project (repeatable).")
@click.option("--intents", type=click.Path(path_type=Path), default=None,
              help="Intent annotations (JSONL).")
@click.pass_context
def outdated_cmd(ctx: click.Context, consolidated: Optional[Path],
                 latest: tuple[str, ...], release_dates: tuple[str, ...],
                 intents: Optional[Path]) -> None:
    """Check whether origin code changed in the latest project versions."""
    cfg = _config(ctx)
    if latest:
        cfg.latest_roots = _parse_named_paths(latest, "--latest")
    if intents is not None:
        cfg.intents_path = intents
    for name, when in _parse_named_dates(release_dates, "--release-date").items():
        for spec in cfg.corpora:
            if spec.name == name:
                spec.release_date = when
    run = PipelineRun(cfg)
    run.phase_ingest(load_only=True)
    run.phase_scan(load_only=True)
    if consolidated is not None:
        from .merge import ConsolidatedPair
        from .records import read_jsonl

        run.consolidated = [
            ConsolidatedPair.from_json(row) for row in read_jsonl(consolidated)
        ]
    else:
        run.phase_merge(load_only=True)
    run.phase_outdated(load_only=False)
    click.echo(f"outdated rows written for {len(run.consolidated)} pairs")


@cli.command("serve")
@click.option("--store", type=click.Path(path_type=Path), default=None,
              help="Triage store (defaults to the artifact).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path), default=None,
              help="Static UI directory to serve at /.")
@click.pass_context
def serve_cmd(ctx: click.Context, store: Optional[Path], host: str, port: int,
              ui_dir: Optional[Path]) -> None:
    """Serve the triage HTTP API (and optionally the UI) for reviewers."""
    cfg = _config(ctx)
    store_path = store if store is not None else cfg.resolved_store()
    server.serve(str(store_path), host=host, port=port,
                 ui_dir=str(ui_dir) if ui_dir else None)


@cli.command("export")
@click.option("--store", type=click.Path(path_type=Path), default=None,
              help="Triage store (defaults to the artifact).")
@click.pass_context
def export_cmd(ctx: click.Context, store: Optional[Path]) -> None:
    """Export effective classification counts from a triage store."""
    cfg = _config(ctx)
    store_path = store if store is not None else cfg.resolved_store()
    with TriageStore.open(store_path) as opened:
        payload = opened.export_classified()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out_dir / "export.json", payload)
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@cli.command("run")
@click.pass_context
def run_cmd(ctx: click.Context) -> None:
    """Run the full pipeline; pauses after creating the triage store."""
    manifest = PipelineRun(_config(ctx)).run()
    done = [p["name"] for p in manifest["phases"]]
    state = "paused for triage" if manifest["paused"] else "complete"
    click.echo(f"pipeline {state}; phases: {', '.join(done)}")


@cli.command("summarize")
@click.option("--report-dir", type=click.Path(path_type=Path), default=None,
              help="Where to write CSVs and figures (default: <out>/report).")
@click.option("--no-figures", is_flag=True, default=False,
              help="Skip chart rendering.")
@click.pass_context
def summarize_cmd(ctx: click.Context, report_dir: Optional[Path],
                  no_figures: bool) -> None:
    """Print the run summary and export report files."""
    cfg = _config(ctx)
    text = report.summarize(cfg.out_dir, report_dir, render=not no_figures)
    click.echo(text)


def main(argv: Optional[list[str]] = None) -> int:
    """Library-friendly entry point mapping errors to exit codes."""
    try:
        cli.main(args=argv, prog_name="cloneaudit", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return 3
    except (PhaseError, OSError) as exc:
        click.echo(f"phase error: {exc}", err=True)
        return 2
    except CloneAuditError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
