"""Figure rendering for training curves and scan densities.

Renders the standard report figures next to the CSV outputs: loss curves
(mean line with a min/max envelope cloud per subset), the step-size
schedule in log10, and the event-density comparison across batch sizes.
All rendering targets files via the Agg backend; nothing here opens a
display. CSVs remain the primary data product, so every figure can also
be re-rendered later from an output directory alone.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

LOSS_PANELS = (("train", "Training loss"), ("val", "Validation loss"),
               ("test", "Test loss"))


def _as_array(values):
    return np.asarray(values, dtype=np.float64)


def render_training_figures(results, out_dir) -> list[Path]:
    """One 2x2 figure per experiment: three loss panels plus step sizes."""
    out_dir = Path(out_dir)
    written = []
    for res in results:
        fig, axes = plt.subplots(2, 2, figsize=(9, 7))
        it = res.iters
        for ax, (key, title) in zip(axes.flat, LOSS_PANELS):
            mean = _as_array(res.mean[key])
            ax.fill_between(it, res.lo[key], res.hi[key], alpha=0.25, lw=0)
            ax.plot(it, mean, lw=1.2)
            ax.set_yscale("log")
            ax.set_xlabel("iteration")
            ax.set_title(title)
        ax = axes.flat[3]
        ax.fill_between(it, res.lo["log10_alpha"], res.hi["log10_alpha"],
                        alpha=0.25, lw=0)
        ax.plot(it, res.mean["log10_alpha"], lw=1.2)
        ax.set_xlabel("iteration")
        ax.set_title("log10 step size")
        fig.suptitle(res.config.tag)
        fig.tight_layout()
        path = out_dir / f"curves_{res.config.tag}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    if len(results) > 1:
        written.append(_render_comparison(results, out_dir))
    return written


def _render_comparison(results, out_dir) -> Path:
    """Training-loss overlay across experiments, for quick comparison."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for res in results:
        ax.plot(res.iters, _as_array(res.mean["train"]), lw=1.2,
                label=res.config.tag)
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("training loss")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(out_dir) / "comparison_train_loss.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_scan_figure(result, out_dir) -> Path:
    """Event densities along the scanned direction, per batch size.

    Left panel: local minima of the sampled function values. Right panel:
    derivative sign changes. Probabilities are drawn on a log axis so the
    spread difference between the two event kinds is visible.
    """
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    grid = result.config.grid
    floor = 1e-4  # display floor for empty bins on the log axis
    for b, (pdf_snn, pdf_min) in sorted(result.pdfs.items()):
        axes[0].plot(grid, np.maximum(pdf_min.probabilities, floor),
                     drawstyle="steps-mid", lw=1.0, label=f"|B|={b}")
        axes[1].plot(grid, np.maximum(pdf_snn.probabilities, floor),
                     drawstyle="steps-mid", lw=1.0, label=f"|B|={b}")
    axes[0].set_title("local minima (function values)")
    axes[1].set_title("derivative sign changes")
    for ax in axes:
        ax.set_yscale("log")
        ax.set_xlabel("step size")
        ax.legend(fontsize=8)
    axes[0].set_ylabel("event probability")
    fig.tight_layout()
    path = Path(out_dir) / "scan_pdfs.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_from_directory(in_dir, out_dir=None) -> list[Path]:
    """Re-render figures from previously emitted CSVs in ``in_dir``."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir) if out_dir else in_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    curve_files = sorted(in_dir.glob("curve_*.csv"))
    for curve in curve_files:
        tag = curve.stem[len("curve_"):]
        envelope = in_dir / f"envelope_{tag}.csv"
        written.append(_render_curve_csv(curve, envelope if envelope.exists()
                                         else None, out_dir, tag))
    pdf_files = sorted(in_dir.glob("scan_pdf_b*.csv"))
    if pdf_files:
        written.append(_render_pdf_csvs(pdf_files, out_dir))
    return written


def _read_csv_columns(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    cols = np.array(rows, dtype=np.float64).T if rows else np.empty((len(header), 0))
    return {name: cols[i] for i, name in enumerate(header)}


def _render_curve_csv(curve_path, envelope_path, out_dir, tag) -> Path:
    data = _read_csv_columns(curve_path)
    env = _read_csv_columns(envelope_path) if envelope_path else None
    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    it = data["iter"]
    for ax, (key, title) in zip(axes.flat, LOSS_PANELS):
        if env is not None:
            ax.fill_between(it, env[f"{key}_min"], env[f"{key}_max"],
                            alpha=0.25, lw=0)
        ax.plot(it, data[f"{key}_loss"], lw=1.2)
        ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_title(title)
    ax = axes.flat[3]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_alpha = np.log10(data["alpha"])
    if env is not None:
        ax.fill_between(it, env["log10_alpha_min"], env["log10_alpha_max"],
                        alpha=0.25, lw=0)
    ax.plot(it, log_alpha, lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_title("log10 step size")
    fig.suptitle(tag)
    fig.tight_layout()
    path = Path(out_dir) / f"curves_{tag}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _render_pdf_csvs(pdf_files, out_dir) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    floor = 1e-4
    for path in pdf_files:
        label = path.stem[len("scan_pdf_"):]
        data = _read_csv_columns(path)
        axes[0].plot(data["alpha_bin"], np.maximum(data["pdf_localmin"], floor),
                     drawstyle="steps-mid", lw=1.0, label=label)
        axes[1].plot(data["alpha_bin"], np.maximum(data["pdf_snngpp"], floor),
                     drawstyle="steps-mid", lw=1.0, label=label)
    axes[0].set_title("local minima (function values)")
    axes[1].set_title("derivative sign changes")
    for ax in axes:
        ax.set_yscale("log")
        ax.set_xlabel("step size")
        ax.legend(fontsize=8)
    axes[0].set_ylabel("event probability")
    fig.tight_layout()
    path = Path(out_dir) / "scan_pdfs.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
