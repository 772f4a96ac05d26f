"""Human-readable run summary plus CSV and figure exports.

Reads whatever artifacts exist under the run directory and renders five
sections: corpus counts, detector agreement, classification tallies,
outdated origins by project, and the license verdict matrix. Each missing
artifact drops its section with a notice instead of failing. CSVs and PNG
charts land in a report/ subdirectory next to the artifacts.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")  # file rendering only, no display

import matplotlib.pyplot as plt

from . import pipeline
from .triage import PATTERNS, TriageStore

_VERDICT_COLORS = {
    "Compatible": "#3a923a",
    "Incompatible": "#c03a2b",
    "Unknown": "#8a8a8a",
}


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _read_jsonl(path: Path) -> list:
    rows = []
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _bar_figure(path: Path, labels: list[str], values: list[float], title: str,
                color: str = "#4878a8") -> None:
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(labels) + 2), 3.2))
    ax.bar(range(len(labels)), values, color=color)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_title(title, fontsize=10)
    ax.set_ylabel("count", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


class Summary:
    def __init__(self, artifacts_dir: str | Path, report_dir: Optional[str | Path] = None,
                 render: bool = True):
        self.art = Path(artifacts_dir)
        self.rep = Path(report_dir) if report_dir is not None else self.art / "report"
        self.render = render
        self.sections: list[str] = []
        self.notices: list[str] = []

    def _missing(self, *names: str) -> bool:
        absent = [n for n in names if not (self.art / n).exists()]
        if absent:
            self.notices.append(
                "section omitted: missing " + ", ".join(sorted(absent))
            )
            return True
        return False

    # ------------------------------------------------------------ sections

    def overview(self) -> None:
        if self._missing(pipeline.SNIPPETS, pipeline.MERGE_SUMMARY):
            return
        snippets = _read_jsonl(self.art / pipeline.SNIPPETS)
        merge_summary = _read_json(self.art / pipeline.MERGE_SUMMARY)
        posts = (
            _read_jsonl(self.art / pipeline.POSTS)
            if (self.art / pipeline.POSTS).exists()
            else []
        )
        corpus_rows = (
            _read_jsonl(self.art / pipeline.CORPUS)
            if (self.art / pipeline.CORPUS).exists()
            else []
        )
        detect_summary = (
            _read_json(self.art / pipeline.DETECT_SUMMARY)
            if (self.art / pipeline.DETECT_SUMMARY).exists()
            else {"token": {"pairs": 0}, "line": {"pairs": 0}}
        )
        corpora = sorted({row["corpus"] for row in corpus_rows})
        stats = [
            ("snippets", len(snippets)),
            ("accepted answers", len(posts)),
            ("corpus files", len(corpus_rows)),
            ("corpora", len(corpora)),
            ("token pairs", detect_summary["token"]["pairs"]),
            ("line pairs", detect_summary["line"]["pairs"]),
            ("merged groups", merge_summary["merged_total"]),
            ("consolidated pairs", merge_summary["consolidated"]),
            ("avg cloned ratio %", merge_summary["avg_cloned_ratio"]),
        ]
        width = max(len(name) for name, _ in stats)
        lines = ["== Snippets and clone pairs =="]
        lines += [f"  {name.ljust(width)}  {value}" for name, value in stats]
        self.sections.append("\n".join(lines))
        _write_csv(self.rep / "counts.csv", ["metric", "value"],
                   [[name, value] for name, value in stats])
        self._export_clone_csv()

    def _export_clone_csv(self) -> None:
        rows = []
        for name in (pipeline.TOKEN_CLONES, pipeline.LINE_CLONES):
            path = self.art / name
            if not path.exists():
                continue
            for pair in _read_jsonl(path):
                rows.append(
                    [
                        pair["left"]["unit"], pair["left"]["start"], pair["left"]["end"],
                        pair["right"]["corpus"] + "/" + pair["right"]["unit"],
                        pair["right"]["start"], pair["right"]["end"],
                        pair["detector"], pair["similarity"],
                    ]
                )
        if rows:
            _write_csv(
                self.rep / "clones.csv",
                ["unit1", "start1", "end1", "unit2", "start2", "end2",
                 "detector", "similarity"],
                rows,
            )

    def detector_agreement(self) -> None:
        if self._missing(pipeline.MERGED):
            return
        merged = _read_jsonl(self.art / pipeline.MERGED)
        token_only = sum(1 for g in merged if g["contributors"] == ["token"])
        line_only = sum(1 for g in merged if g["contributors"] == ["line"])
        both = sum(1 for g in merged if len(g["contributors"]) == 2)
        self.sections.append(
            "== Detector agreement ==\n"
            f"  token only  {token_only}\n"
            f"  both        {both}\n"
            f"  line only   {line_only}"
        )
        labels = ["token only", "both", "line only"]
        values = [token_only, both, line_only]
        _write_csv(self.rep / "merge_venn.csv", ["bucket", "groups"],
                   [[l, v] for l, v in zip(labels, values)])
        if self.render:
            _bar_figure(self.rep / "merge_venn.png", labels, values,
                        "Merged groups by contributing detector")

    def classification(self) -> None:
        store_path = self.art / pipeline.TRIAGE_STORE
        if not store_path.exists():
            self.notices.append("section omitted: missing " + pipeline.TRIAGE_STORE)
            return
        store = TriageStore.open(store_path)
        with store:
            export = store.export_classified()
        lines = ["== Classification =="]
        for name in PATTERNS:
            lines.append(
                f"  {name}  {export['patterns'][name]}"
                f" (weighted {export['patterns_weighted'][name]})"
            )
        totals = export["totals"]
        lines.append(f"  classified {totals['classified']} of {totals['pairs']},"
                     f" open conflicts {export['open_conflicts']}")
        self.sections.append("\n".join(lines))
        _write_csv(
            self.rep / "patterns.csv",
            ["pattern", "pairs", "weighted"],
            [[name, export["patterns"][name], export["patterns_weighted"][name]]
             for name in PATTERNS],
        )
        if self.render:
            _bar_figure(
                self.rep / "patterns.png",
                list(PATTERNS),
                [export["patterns"][name] for name in PATTERNS],
                "Effective pattern counts",
            )

    def outdated_by_project(self) -> None:
        if self._missing(pipeline.OUTDATED_SUMMARY):
            return
        summary = _read_json(self.art / pipeline.OUTDATED_SUMMARY)
        by_project = summary.get("by_project", {})
        by_modification = summary.get("by_modification", {})
        lines = ["== Outdated origins =="]
        for project in sorted(by_project):
            entry = by_project[project]
            lines.append(
                f"  {project}  {entry['outdated']} outdated of {entry['pairs']}"
            )
        if by_modification:
            mods = ", ".join(f"{k} {v}" for k, v in sorted(by_modification.items()))
            lines.append("  modifications: " + mods)
        if len(lines) == 1:
            lines.append("  (no origins checked)")
        self.sections.append("\n".join(lines))
        _write_csv(
            self.rep / "outdated_by_project.csv",
            ["project", "pairs", "outdated"],
            [[p, by_project[p]["pairs"], by_project[p]["outdated"]]
             for p in sorted(by_project)],
        )
        if self.render and by_project:
            projects = sorted(by_project)
            fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(projects) + 2), 3.2))
            xs = range(len(projects))
            ax.bar([x - 0.2 for x in xs], [by_project[p]["pairs"] for p in projects],
                   width=0.4, label="checked", color="#4878a8")
            ax.bar([x + 0.2 for x in xs], [by_project[p]["outdated"] for p in projects],
                   width=0.4, label="outdated", color="#c03a2b")
            ax.set_xticks(list(xs))
            ax.set_xticklabels(projects, rotation=30, ha="right", fontsize=8)
            ax.legend(fontsize=8)
            ax.set_title("Outdated origins by project", fontsize=10)
            fig.tight_layout()
            fig.savefig(self.rep / "outdated_by_project.png", dpi=110)
            plt.close(fig)

    def license_matrix(self) -> None:
        if self._missing(pipeline.LICENSE_SUMMARY):
            return
        aggregate = _read_json(self.art / pipeline.LICENSE_SUMMARY)["aggregate"]
        lines = ["== License verdicts =="]
        for row in aggregate:
            lines.append(
                f"  {row['origin_license']} / {row['snippet_license']}"
                f"  {row['verdict']}  {row['count']}"
            )
        if len(lines) == 1:
            lines.append("  (no pairs)")
        self.sections.append("\n".join(lines))
        _write_csv(
            self.rep / "license_matrix.csv",
            ["origin_license", "snippet_license", "verdict", "count"],
            [[r["origin_license"], r["snippet_license"], r["verdict"], r["count"]]
             for r in aggregate],
        )
        if self.render and aggregate:
            origins = sorted({r["origin_license"] for r in aggregate})
            snippets = sorted({r["snippet_license"] for r in aggregate})
            fig, ax = plt.subplots(
                figsize=(max(4, 1.1 * len(snippets) + 2), max(3, 0.5 * len(origins) + 2))
            )
            ax.set_xlim(0, len(snippets))
            ax.set_ylim(0, len(origins))
            for row in aggregate:
                x = snippets.index(row["snippet_license"])
                y = origins.index(row["origin_license"])
                color = _VERDICT_COLORS.get(row["verdict"], "#8a8a8a")
                ax.add_patch(plt.Rectangle((x, y), 1, 1, color=color, alpha=0.7))
                ax.text(x + 0.5, y + 0.5, str(row["count"]),
                        ha="center", va="center", fontsize=9)
            ax.set_xticks([i + 0.5 for i in range(len(snippets))])
            ax.set_xticklabels(snippets, rotation=30, ha="right", fontsize=8)
            ax.set_yticks([i + 0.5 for i in range(len(origins))])
            ax.set_yticklabels(origins, fontsize=8)
            ax.set_xlabel("snippet license", fontsize=8)
            ax.set_ylabel("origin license", fontsize=8)
            ax.set_title("License verdict counts", fontsize=10)
            fig.tight_layout()
            fig.savefig(self.rep / "license_matrix.png", dpi=110)
            plt.close(fig)

    # ------------------------------------------------------------ driver

    def build(self) -> str:
        self.rep.mkdir(parents=True, exist_ok=True)
        self.overview()
        self.detector_agreement()
        self.classification()
        self.outdated_by_project()
        self.license_matrix()
        parts = list(self.sections)
        if self.notices:
            parts.append("\n".join(self.notices))
        parts.append(f"report files: {self.rep}")
        return "\n\n".join(parts)


def summarize(artifacts_dir: str | Path, report_dir: Optional[str | Path] = None,
              render: bool = True) -> str:
    return Summary(artifacts_dir, report_dir, render=render).build()
