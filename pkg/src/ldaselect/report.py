"""Summary tables and per-criterion CSVs for a Monte Carlo output directory."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ldaselect.criteria import display_name
from ldaselect.errors import ValidationError
from ldaselect.harness import EVAL_COLUMNS, EVAL_METRICS, McSummary, read_results, summarize

SUMMARY_COLUMNS = ("criterion", "label", "n", "std", "mean", "median", "skewness") + tuple(
    f"{m}_{s}" for m in EVAL_METRICS for s in ("mean", "std")
)


def _cell(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def write_summary(summary: McSummary, out: Path) -> None:
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for name, cs in summary.criteria.items():
            w.writerow([_cell(x) for x in (
                name, display_name(name), cs.n, cs.std, cs.mean, cs.median, cs.skewness,
                *(cs.eval[c] for c in SUMMARY_COLUMNS[7:]),
            )])
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n")


def write_histograms(summary: McSummary, out: Path) -> None:
    for name, cs in summary.criteria.items():
        with (out / f"histogram_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["K", "count"])
            for k, c in cs.histogram.items():
                w.writerow([k, c])


def scatter_points(rows) -> tuple[dict, dict]:
    binary, weighted = {}, {}
    for r in sorted(rows, key=lambda r: (r["criterion"], r["replication"])):
        binary.setdefault(r["criterion"], []).append((r["recall"], r["precision"]))
        weighted.setdefault(r["criterion"], []).append((r["recall_weighted"], r["precision_weighted"]))
    return binary, weighted


def write_scatter(rows, out: Path) -> None:
    for name in sorted({r["criterion"] for r in rows}):
        group = sorted((r for r in rows if r["criterion"] == name), key=lambda r: r["replication"])
        with (out / f"scatter_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replication", "recall", "precision", "recall_weighted", "precision_weighted"])
            for r in group:
                w.writerow([r["replication"], *(repr(r[c]) for c in
                            ("recall", "precision", "recall_weighted", "precision_weighted"))])


def write_eval(rows, out: Path) -> None:
    """Long-format per-replication scores, one row per (criterion, mode)."""
    with (out / "eval.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_COLUMNS)
        for r in sorted(rows, key=lambda r: (r["replication"], r["criterion"])):
            w.writerow([r["dgp"], r["criterion"], r["replication"], r["K_selected"],
                        repr(r["recall"]), repr(r["precision"]), repr(r["f1"]), "binary"])
            w.writerow([r["dgp"], r["criterion"], r["replication"], r["K_selected"],
                        repr(r["recall_weighted"]), repr(r["precision_weighted"]), repr(r["f1_weighted"]),
                        "weighted"])


def build_report(mc_dir, figures: bool = True, fmt: str = "png") -> McSummary:
    """Recompute the summary from persisted rows and write every report artifact."""
    mc_dir = Path(mc_dir)
    results = mc_dir / "results.csv"
    if not results.exists():
        raise ValidationError(f"{results} not found; run mc-run first")
    rows = read_results(results)
    if not rows:
        raise ValidationError(f"{results} holds no completed replications")
    manifest = json.loads((mc_dir / "manifest.json").read_text()) if (mc_dir / "manifest.json").exists() else {}
    k_range = tuple(manifest["k_range"]) if "k_range" in manifest else None
    if "config" in manifest:
        limit = manifest["config"]["replications"]
        rows = [r for r in rows if r["replication"] <= limit]
    summary = summarize(rows, k_range=k_range, k_true=manifest.get("K_true"))
    write_summary(summary, mc_dir)
    write_histograms(summary, mc_dir)
    write_scatter(rows, mc_dir)
    write_eval(rows, mc_dir)
    if figures:
        from ldaselect import plotting

        plotting.histogram_figure(summary, mc_dir / "histograms", fmt=fmt)
        binary, weighted = scatter_points(rows)
        plotting.scatter_figure(binary, mc_dir / "scatter", fmt=fmt)
        plotting.scatter_figure(weighted, mc_dir / "scatter_weighted", weighted=True, fmt=fmt)
    return summary
