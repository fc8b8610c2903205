"""Plain-text summaries of sweep results.

The summary has two sections: FLOP comparisons against the IIC baseline
(measured and closed-form, as savings percentages) and SNR gaps to IIC at
configurable target BERs.  Sections degrade gracefully: without an IIC
baseline or with too few SNR points the report keeps what it can and says
what it skipped.
"""

from __future__ import annotations

import math
from collections import defaultdict

from .simulate import GapError, snr_gap_at_ber

__all__ = ["report_summary", "flop_savings"]

_BASELINE = "iic"


def _by_detector(records):
    groups = defaultdict(list)
    for r in records:
        groups[r.detector].append(r)
    return dict(groups)


def _baseline_ident(groups) -> str | None:
    for ident in sorted(groups):
        if ident.split("(")[0] == _BASELINE:
            return ident
    return None


def flop_savings(records, baseline_records) -> tuple[float, float]:
    """(measured, model) savings fractions vs the baseline, frame-weighted
    across SNR points.  Model savings is NaN when either side has no
    closed-form budget."""

    def totals(rs):
        measured = sum(r.mean_measured_flops * r.frames for r in rs)
        model = sum(r.flops_model * r.frames for r in rs)
        frames = sum(r.frames for r in rs)
        return measured / frames, model / frames

    m_det, mod_det = totals(records)
    m_base, mod_base = totals(baseline_records)
    measured = 1.0 - m_det / m_base
    model = 1.0 - mod_det / mod_base if math.isfinite(mod_det) and math.isfinite(mod_base) else float("nan")
    return measured, model


def _fmt_pct(x: float) -> str:
    return f"{100.0 * x:6.1f}%" if math.isfinite(x) else "    n/a"


def _fmt_flops(x: float) -> str:
    return f"{x:.4g}" if math.isfinite(x) else "n/a"


def report_summary(records, targets=(1e-3, 1e-4)) -> str:
    """Human-readable FLOP-savings and SNR-gap report."""
    records = list(records)
    if not records:
        return "no records\n"
    groups = _by_detector(records)
    baseline = _baseline_ident(groups)
    lines = []

    lines.append("FLOP comparison (per frame, averaged over the sweep)")
    header = f"  {'detector':24s} {'measured':>12s} {'model':>12s}"
    if baseline:
        header += f" {'saved vs ' + baseline + ' (meas)':>24s} {'(model)':>10s}"
    lines.append(header)
    for ident in sorted(groups):
        rs = groups[ident]
        measured = sum(r.mean_measured_flops * r.frames for r in rs) / sum(r.frames for r in rs)
        model = sum(r.flops_model * r.frames for r in rs) / sum(r.frames for r in rs)
        row = f"  {ident:24s} {_fmt_flops(measured):>12s} {_fmt_flops(model):>12s}"
        if baseline:
            if ident == baseline:
                row += f" {'baseline':>24s} {'':>10s}"
            else:
                meas_s, model_s = flop_savings(rs, groups[baseline])
                row += f" {_fmt_pct(meas_s):>24s} {_fmt_pct(model_s):>10s}"
        lines.append(row)
    if not baseline:
        lines.append("  (no iic baseline in this run; savings column skipped)")

    lines.append("")
    lines.append("SNR gaps to the iic baseline")
    if baseline is None:
        lines.append("  skipped: no iic baseline in this run")
    elif len({r.snr_db for r in records}) < 2:
        lines.append("  skipped: need at least two SNR points for interpolation")
    else:
        others = [i for i in sorted(groups) if i != baseline]
        if not others:
            lines.append("  skipped: only the baseline was run")
        for target in targets:
            for ident in others:
                try:
                    gap = snr_gap_at_ber(groups[ident], groups[baseline], target)
                    lines.append(f"  BER {target:g}: {ident:24s} {gap:+.3f} dB")
                except GapError as exc:
                    lines.append(f"  BER {target:g}: {ident:24s} n/a ({exc})")
    return "\n".join(lines) + "\n"
