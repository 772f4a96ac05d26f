"""Rendered run summaries: sections, CSV exports, and figure files."""

import csv
import shutil

from cloneaudit.report import summarize
from cloneaudit.triage import ClassificationRecord, TriageStore

CSVS = (
    "counts.csv",
    "clones.csv",
    "merge_venn.csv",
    "patterns.csv",
    "outdated_by_project.csv",
    "license_matrix.csv",
)
PNGS = (
    "merge_venn.png",
    "patterns.png",
    "outdated_by_project.png",
    "license_matrix.png",
)


def _csv_rows(path):
    with path.open(newline="") as handle:
        return list(csv.reader(handle))


def test_full_report_renders_everything(pipeline_workspace):
    text = summarize(pipeline_workspace["out"])
    for header in (
        "== Snippets and clone pairs ==",
        "== Detector agreement ==",
        "== Classification ==",
        "== Outdated origins ==",
        "== License verdicts ==",
    ):
        assert header in text
    assert "section omitted" not in text
    report_dir = pipeline_workspace["out"] / "report"
    assert text.splitlines()[-1] == f"report files: {report_dir}"
    for name in CSVS:
        assert (report_dir / name).is_file(), name
    for name in PNGS:
        data = (report_dir / name).read_bytes()
        assert data.startswith(b"\x89PNG"), name


def test_counts_reflect_the_planted_run(pipeline_workspace):
    summarize(pipeline_workspace["out"], render=False)
    rows = _csv_rows(pipeline_workspace["out"] / "report" / "counts.csv")
    counts = {metric: value for metric, value in rows[1:]}
    assert counts["snippets"] == "10"
    assert counts["accepted answers"] == "9"
    assert counts["corpus files"] == "10"
    assert counts["corpora"] == "1"
    assert counts["token pairs"] == "5"
    assert counts["line pairs"] == "3"
    assert counts["merged groups"] == "4"
    assert counts["consolidated pairs"] == "3"
    assert counts["avg cloned ratio %"] == "80.0"


def test_clone_csv_lists_both_detectors(pipeline_workspace):
    summarize(pipeline_workspace["out"], render=False)
    rows = _csv_rows(pipeline_workspace["out"] / "report" / "clones.csv")
    assert rows[0] == [
        "unit1", "start1", "end1", "unit2", "start2", "end2", "detector", "similarity",
    ]
    body = rows[1:]
    assert len(body) == 8  # five token pairs, three line pairs
    detectors = [row[6] for row in body]
    assert detectors.count("token") == 5 and detectors.count("line") == 3
    for row in body:
        assert 0.0 <= float(row[7]) <= 1.0
        assert row[3].startswith("acme-core/")


def test_agreement_buckets(pipeline_workspace):
    summarize(pipeline_workspace["out"], render=False)
    rows = _csv_rows(pipeline_workspace["out"] / "report" / "merge_venn.csv")
    assert rows == [
        ["bucket", "groups"],
        ["token only", "1"],
        ["both", "2"],
        ["line only", "1"],
    ]


def test_outdated_and_license_tables(pipeline_workspace):
    summarize(pipeline_workspace["out"], render=False)
    report_dir = pipeline_workspace["out"] / "report"
    rows = _csv_rows(report_dir / "outdated_by_project.csv")
    assert rows == [["project", "pairs", "outdated"], ["acme-core", "3", "3"]]
    rows = _csv_rows(report_dir / "license_matrix.csv")
    assert rows[0] == ["origin_license", "snippet_license", "verdict", "count"]
    buckets = {(r[0], r[1]): (r[2], r[3]) for r in rows[1:]}
    assert buckets[("Apache-2", "CC-BY-SA-3.0")] == ("Incompatible", "2")
    assert buckets[("NewBSD3", "CC-BY-SA-3.0")] == ("Incompatible", "1")
    assert buckets[("None", "CC-BY-SA-3.0")] == ("Compatible", "1")


def test_render_flag_skips_figures(pipeline_workspace, tmp_path):
    text = summarize(pipeline_workspace["out"], tmp_path / "rep", render=False)
    assert text.splitlines()[-1] == f"report files: {tmp_path / 'rep'}"
    for name in CSVS:
        assert (tmp_path / "rep" / name).is_file(), name
    assert not list((tmp_path / "rep").glob("*.png"))


def test_missing_artifacts_turn_into_notices(tmp_path):
    text = summarize(tmp_path / "empty-run", render=False)
    assert "section omitted: missing merge.summary.json, snippets.jsonl" in text
    assert "section omitted: missing merged.jsonl" in text
    assert "section omitted: missing triage.jsonl" in text
    assert "section omitted: missing outdated.summary.json" in text
    assert "section omitted: missing license.summary.json" in text
    assert text.splitlines()[-1].startswith("report files:")


def test_classification_section_reads_the_store(pipeline_workspace, tmp_path):
    art = tmp_path / "art"
    art.mkdir()
    shutil.copy(pipeline_workspace["out"] / "triage.jsonl", art / "triage.jsonl")
    with TriageStore.open(art / "triage.jsonl") as store:
        first = store.pair_ids()[0]
        store.record_classification(ClassificationRecord(first, "rev-a", "QS"))
        store.record_classification(ClassificationRecord(first, "rev-b", "QS"))
    text = summarize(art, render=False)
    assert "classified 1 of 3, open conflicts 0" in text
    rows = _csv_rows(art / "report" / "patterns.csv")
    assert rows[0] == ["pattern", "pairs", "weighted"]
    by_pattern = {r[0]: r[1] for r in rows[1:]}
    assert by_pattern["QS"] == "1"
    assert by_pattern["NC"] == "0"
