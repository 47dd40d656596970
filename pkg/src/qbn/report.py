"""File output for chain-experiment runs: a CSV of per-run rows plus
an optional error-trend figure rendered next to it."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .oracle import ExperimentReport, ExperimentRow

__all__ = ["CSV_FIELDS", "write_csv", "read_csv", "save_error_figure",
           "write_report"]

CSV_FIELDS = ("chain_len", "n_samples", "seed", "inferred_mean",
              "exact_mean", "abs_err", "inferred_var", "var_bound")


def _cell(value) -> str:
    if isinstance(value, int):
        return str(value)
    return f"{value:.17g}"


def write_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for row in report.rows:
            writer.writerow([_cell(getattr(row, name))
                             for name in CSV_FIELDS])


def read_csv(path) -> ExperimentReport:
    report = ExperimentReport()
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            report.rows.append(ExperimentRow(
                chain_len=int(rec["chain_len"]),
                n_samples=int(rec["n_samples"]),
                seed=int(rec["seed"]),
                inferred_mean=float(rec["inferred_mean"]),
                exact_mean=float(rec["exact_mean"]),
                abs_err=float(rec["abs_err"]),
                inferred_var=float(rec["inferred_var"]),
                var_bound=float(rec["var_bound"]),
            ))
    return report


def save_error_figure(report: ExperimentReport, path) -> None:
    """Median absolute error against chain length, one line per sample
    size.  Written without embedded metadata so reruns are
    byte-identical."""
    medians = report.median_abs_err()
    lengths = sorted({ln for ln, _ in medians})
    sizes = sorted({n for _, n in medians})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for n in sizes:
        ys = [medians[(ln, n)] for ln in lengths]
        ax.plot(lengths, ys, marker="o", label=f"{n} samples")
    ax.set_xlabel("chain length")
    ax.set_ylabel("median |inferred - exact|")
    ax.set_xticks(lengths)
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def write_report(report: ExperimentReport, csv_path, figure: bool = True
                 ) -> list[Path]:
    """Write the CSV and, unless disabled, a PNG with the same stem.
    Returns the paths written."""
    csv_path = Path(csv_path)
    write_csv(report, csv_path)
    written = [csv_path]
    if figure:
        fig_path = csv_path.with_suffix(".png")
        save_error_figure(report, fig_path)
        written.append(fig_path)
    return written
