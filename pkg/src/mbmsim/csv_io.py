"""CSV emission and parsing for sweep results.

Column order is fixed; reals print as 17-significant-digit scientific
notation (exact float64 round-trip, locale-independent), integers as plain
decimals.  Detector ids that contain commas are quoted per RFC 4180.  Rows
sort by (detector, snr_db), so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .simulate import BerRecord

__all__ = ["CSV_FIELDS", "CSV_HEADER", "CsvRow", "emit_csv", "read_csv"]

CSV_FIELDS = (
    "detector",
    "snr_db",
    "frames",
    "bits_sent",
    "bit_errors",
    "ber",
    "ver",
    "mean_flops_measured",
    "flops_model",
    "mean_iters",
    "stderr_ber",
)
CSV_HEADER = ",".join(CSV_FIELDS)


@dataclass(frozen=True)
class CsvRow:
    """One parsed result row; mirrors the emitted columns exactly."""

    detector: str
    snr_db: float
    frames: int
    bits_sent: int
    bit_errors: int
    ber: float
    ver: float
    mean_flops_measured: float
    flops_model: float
    mean_iters: float
    stderr_ber: float

    @property
    def mean_measured_flops(self) -> float:
        return self.mean_flops_measured

    @property
    def mean_iterations(self) -> float:
        return self.mean_iters


def _real(x: float) -> str:
    return f"{x:.16e}" if math.isfinite(x) else ("nan" if math.isnan(x) else repr(x))


def emit_csv(records, path) -> None:
    """Write one row per record, sorted by (detector, snr_db)."""
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    rows = sorted(records, key=lambda r: (r.detector, r.snr_db))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in rows:
            writer.writerow(
                [
                    r.detector,
                    _real(r.snr_db),
                    r.frames,
                    r.bits_sent,
                    r.bit_errors,
                    _real(r.ber),
                    _real(r.ver),
                    _real(r.mean_measured_flops),
                    _real(r.flops_model),
                    _real(r.mean_iterations),
                    _real(r.stderr_ber),
                ]
            )


def read_csv(path) -> list[CsvRow]:
    """Parse a file written by :func:`emit_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}: not a sweep result file (unexpected header)")
        out = []
        for f in reader:
            if not f:
                continue
            if len(f) != len(CSV_FIELDS):
                raise ValueError(f"{path}: malformed row {f!r}")
            out.append(
                CsvRow(
                    detector=f[0],
                    snr_db=float(f[1]),
                    frames=int(f[2]),
                    bits_sent=int(f[3]),
                    bit_errors=int(f[4]),
                    ber=float(f[5]),
                    ver=float(f[6]),
                    mean_flops_measured=float(f[7]),
                    flops_model=float(f[8]),
                    mean_iters=float(f[9]),
                    stderr_ber=float(f[10]),
                )
            )
    return out
