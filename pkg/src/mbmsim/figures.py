"""Render sweep results to figure files.

Two figures accompany every CSV report: BER-vs-SNR curves (log y, one line
per detector) and a per-detector FLOP comparison (measured next to the
closed-form model where one exists).  Rendering uses the Agg backend and
only ever writes files.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["ber_figure", "flops_figure", "render_report_figures"]

_MARKERS = "osd^v<>pX*"


def _by_detector(records):
    groups = defaultdict(list)
    for r in records:
        groups[r.detector].append(r)
    return {k: sorted(v, key=lambda r: r.snr_db) for k, v in sorted(groups.items())}


def ber_figure(records, path) -> Path:
    """Semilog BER curves; zero-BER points are left out of the line."""
    groups = _by_detector(records)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for i, (ident, rs) in enumerate(groups.items()):
        snrs = [r.snr_db for r in rs]
        bers = [r.ber if r.ber > 0 else math.nan for r in rs]
        ax.semilogy(snrs, bers, marker=_MARKERS[i % len(_MARKERS)], label=ident)
    ax.set_xlabel("average received SNR per antenna (dB)")
    ax.set_ylabel("bit error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def flops_figure(records, path) -> Path:
    """Grouped bars: measured mean FLOPs per frame and the closed-form model."""
    groups = _by_detector(records)
    idents = list(groups)
    measured = []
    model = []
    for ident in idents:
        rs = groups[ident]
        frames = sum(r.frames for r in rs)
        measured.append(sum(r.mean_measured_flops * r.frames for r in rs) / frames)
        model.append(sum(r.flops_model * r.frames for r in rs) / frames)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    xs = range(len(idents))
    width = 0.38
    ax.bar([x - width / 2 for x in xs], measured, width, label="measured")
    ax.bar(
        [x + width / 2 for x in xs],
        [m if math.isfinite(m) else 0.0 for m in model],
        width,
        label="model",
    )
    ax.set_xticks(list(xs))
    ax.set_xticklabels(idents, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("FLOPs per frame")
    ax.set_yscale("log")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report_figures(records, csv_path) -> list[Path]:
    """Write ``<stem>_ber.png`` and ``<stem>_flops.png`` next to the CSV."""
    stem = Path(csv_path)
    return [
        ber_figure(records, stem.with_name(stem.stem + "_ber.png")),
        flops_figure(records, stem.with_name(stem.stem + "_flops.png")),
    ]
