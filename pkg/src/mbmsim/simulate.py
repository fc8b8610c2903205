"""Monte Carlo engine: SNR sweeps, paired trials, and BER/VER records.

SNR convention: the sweep axis is average received SNR per antenna with
unit-energy constellations, so ``sigma2 = U / 10**(snr_db/10)``.  Absolute
curve positions therefore depend on this normalization; detector orderings,
convergence behavior and SNR gaps do not.

Every trial draws one channel, one bit block per user and one noise vector
from a stream derived as ``SeedSequence(seed, spawn_key=(snr_index, trial,
redraw))``; all detectors of the sweep see the identical instance, so
per-detector differences are paired-sample statistics.  Trials are processed
in fixed-size rounds whose accumulators merge by summation, which makes the
aggregate counts independent of how many workers execute them.

A sweep point stops once every detector has collected ``min_bit_errors``
bit errors (or at ``max_frames``); all detectors share the same frames.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import complexity
from .channel import (
    DegenerateChannelError,
    NoiseModel,
    derived_rng,
    generate_channel,
    transmit,
)
from .detectors import (
    DetectionOutcome,
    iic_detect,
    isd_detect,
    kmap_iic_detect,
    map_isd_detect,
    ml_detect,
    mmse_detect,
)
from .model import MbmConfig, decode, encode

__all__ = [
    "DetectorSpec",
    "SweepConfig",
    "BerRecord",
    "TrialCounts",
    "GapError",
    "snr_to_sigma2",
    "run_trial",
    "run_sweep",
    "snr_gap_at_ber",
    "default_threads",
]

THREADS_ENV_VAR = "MBMSIM_THREADS"
_ROUND_FRAMES = 100

DETECTOR_KINDS = ("ml", "mmse", "isd", "iic", "map-isd", "kmap-iic")
_ITERATIVE = {"isd", "iic", "map-isd", "kmap-iic"}


class GapError(ValueError):
    """A BER target is outside the measured range of a curve."""


@dataclass(frozen=True)
class DetectorSpec:
    """One detector entry of a sweep, with optional L/K overrides."""

    kind: str
    iterations: int | None = None
    list_size: int | None = None

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"unknown detector {self.kind!r}, expected one of {DETECTOR_KINDS}")
        if self.iterations is not None and self.kind not in _ITERATIVE:
            raise ValueError(f"detector {self.kind!r} takes no iteration count")
        if self.list_size is not None and self.kind != "kmap-iic":
            raise ValueError(f"detector {self.kind!r} takes no list size")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.list_size is not None and self.list_size < 1:
            raise ValueError(f"list size must be >= 1, got {self.list_size}")

    @property
    def ident(self) -> str:
        parts = []
        if self.kind in _ITERATIVE and self.iterations is not None:
            parts.append(f"L={self.iterations}")
        if self.kind == "kmap-iic" and self.list_size is not None:
            parts.append(f"K={self.list_size}")
        return f"{self.kind}({','.join(parts)})" if parts else self.kind

    def resolve(self, config: MbmConfig) -> MbmConfig:
        """Config with this detector's L/K substituted in."""
        kwargs = {}
        if self.iterations is not None:
            kwargs["iterations"] = self.iterations
        if self.list_size is not None:
            kwargs["list_size"] = self.list_size
        return replace(config, **kwargs) if kwargs else config

    def run(self, y, channels, config: MbmConfig, sigma2: float, count_flops: bool = True) -> DetectionOutcome:
        cfg = self.resolve(config)
        if self.kind == "ml":
            return ml_detect(y, channels, cfg, count_flops=count_flops)
        if self.kind == "mmse":
            return mmse_detect(y, channels, cfg, sigma2, count_flops=count_flops)
        if self.kind == "isd":
            return isd_detect(y, channels, cfg, count_flops=count_flops)
        if self.kind == "iic":
            return iic_detect(y, channels, cfg, count_flops=count_flops)
        if self.kind == "map-isd":
            return map_isd_detect(y, channels, cfg, count_flops=count_flops)
        return kmap_iic_detect(y, channels, cfg, count_flops=count_flops)

    def model_flops(self, config: MbmConfig, mean_iterations: float) -> float:
        """Closed-form budget at the observed mean iteration count; NaN for
        detectors without a published model."""
        cfg = self.resolve(config)
        n_r, u, m = cfg.n_r, cfg.users, cfg.maps
        if self.kind == "iic":
            return complexity.flops_iic_iter(n_r, u, m, cfg.constellation.size) * mean_iterations
        if self.kind == "map-isd":
            once, per_iter = complexity.flops_map_isd(n_r, u, m)
            return once + per_iter * mean_iterations
        if self.kind == "kmap-iic":
            once, per_iter = complexity.flops_kmap_iic(n_r, u, m, cfg.list_size)
            return once + per_iter * mean_iterations
        return float("nan")


@dataclass(frozen=True)
class SweepConfig:
    """A full experiment: one system, an SNR grid, and a detector set."""

    mbm: MbmConfig
    snr_db: tuple[float, ...]
    detectors: tuple[DetectorSpec, ...]
    min_bit_errors: int = 200
    max_frames: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        snrs = tuple(float(s) for s in self.snr_db)
        object.__setattr__(self, "snr_db", snrs)
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not snrs:
            raise ValueError("snr_db must not be empty")
        if any(s1 <= s0 for s0, s1 in zip(snrs, snrs[1:])):
            raise ValueError(f"snr_db must be strictly increasing, got {snrs}")
        if self.min_bit_errors < 1:
            raise ValueError(f"min_bit_errors must be >= 1, got {self.min_bit_errors}")
        if self.max_frames < 1:
            raise ValueError(f"max_frames must be >= 1, got {self.max_frames}")
        if not self.detectors:
            raise ValueError("at least one detector is required")
        idents = [d.ident for d in self.detectors]
        if len(set(idents)) != len(idents):
            raise ValueError(f"duplicate detector entries: {idents}")
        for d in self.detectors:
            if d.kind == "kmap-iic":
                k = d.list_size if d.list_size is not None else self.mbm.list_size
                if not 1 <= k <= self.mbm.maps:
                    raise ValueError(f"list size K={k} outside 1..M={self.mbm.maps}")


@dataclass
class BerRecord:
    """Monte Carlo result for one (detector, SNR) pair."""

    detector: str
    snr_db: float
    frames: int
    bits_sent: int
    bit_errors: int
    vector_errors: int
    vectors_sent: int
    mean_measured_flops: float
    mean_iterations: float
    flops_model: float

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent

    @property
    def ver(self) -> float:
        return self.vector_errors / self.vectors_sent

    @property
    def stderr_ber(self) -> float:
        p = self.ber
        return math.sqrt(p * (1.0 - p) / self.bits_sent)


class TrialCounts(NamedTuple):
    """One detector's tallies for a single frame."""

    bit_errors: int
    vector_errors: int
    flops: int
    iterations: int


def snr_to_sigma2(snr_db: float, config: MbmConfig) -> float:
    """Noise variance for a given per-antenna received SNR in dB."""
    return config.users / 10.0 ** (snr_db / 10.0)


def default_threads() -> int:
    """Worker count from the environment, defaulting to 1."""
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_trial(
    rng: np.random.Generator,
    config: MbmConfig,
    sigma2: float,
    detectors: tuple[DetectorSpec, ...],
    count_flops: bool = True,
) -> dict[str, TrialCounts]:
    """One frame: fresh channel, bits and noise, every detector on the same
    instance.  Raises :class:`DegenerateChannelError` on a zero-norm column
    (callers redraw)."""
    channels = generate_channel(rng, config)
    bits = rng.integers(0, 2, size=(config.users, config.bits_per_symbol), dtype=np.uint8)
    truth = [encode(bits[k], config) for k in range(config.users)]
    y = transmit(channels, truth, NoiseModel(sigma2), rng, config.constellation)

    out: dict[str, TrialCounts] = {}
    for spec in detectors:
        outcome = spec.run(y, channels, config, sigma2, count_flops)
        bit_errors = 0
        vector_errors = 0
        for k, estimate in enumerate(outcome.estimates):
            if estimate != truth[k]:
                vector_errors += 1
                bit_errors += int(np.sum(decode(estimate, config) != bits[k]))
        out[spec.ident] = TrialCounts(
            bit_errors=bit_errors,
            vector_errors=vector_errors,
            flops=outcome.flops if outcome.flops is not None else 0,
            iterations=outcome.iterations_used,
        )
    return out


class _Accumulator(NamedTuple):
    bit_errors: int
    vector_errors: int
    flops: int
    iterations: int

    def merged(self, c: TrialCounts) -> "_Accumulator":
        return _Accumulator(
            self.bit_errors + c.bit_errors,
            self.vector_errors + c.vector_errors,
            self.flops + c.flops,
            self.iterations + c.iterations,
        )


def _run_range(args) -> tuple[dict[str, _Accumulator], int]:
    """Process trials [lo, hi) of one SNR point; returns sums and redraws."""
    sweep, snr_index, sigma2, lo, hi = args
    acc = {d.ident: _Accumulator(0, 0, 0, 0) for d in sweep.detectors}
    redraws = 0
    for trial in range(lo, hi):
        attempt = 0
        while True:
            rng = derived_rng(sweep.seed, snr_index, trial, attempt)
            try:
                counts = run_trial(rng, sweep.mbm, sigma2, sweep.detectors)
                break
            except DegenerateChannelError:
                attempt += 1
                redraws += 1
        for ident, c in counts.items():
            acc[ident] = acc[ident].merged(c)
    return acc, redraws


def run_sweep(sweep: SweepConfig, threads: int | None = None) -> list[BerRecord]:
    """Run the whole sweep and return one record per (detector, SNR).

    Frames accumulate in rounds of 100 until every detector has at least
    ``min_bit_errors`` bit errors or ``max_frames`` is reached; the round
    structure (not the worker count) fixes the totals, so results are
    identical for any ``threads``.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    records: list[BerRecord] = []
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for snr_index, snr in enumerate(sweep.snr_db):
            sigma2 = snr_to_sigma2(snr, sweep.mbm)
            acc = {d.ident: _Accumulator(0, 0, 0, 0) for d in sweep.detectors}
            frames = 0
            while frames < sweep.max_frames and any(
                a.bit_errors < sweep.min_bit_errors for a in acc.values()
            ):
                hi = min(frames + _ROUND_FRAMES, sweep.max_frames)
                for part, _ in _scatter(sweep, snr_index, sigma2, frames, hi, pool, threads):
                    for ident, a in part.items():
                        acc[ident] = _Accumulator(
                            acc[ident].bit_errors + a.bit_errors,
                            acc[ident].vector_errors + a.vector_errors,
                            acc[ident].flops + a.flops,
                            acc[ident].iterations + a.iterations,
                        )
                frames = hi
            for spec in sweep.detectors:
                a = acc[spec.ident]
                mean_iters = a.iterations / frames
                records.append(
                    BerRecord(
                        detector=spec.ident,
                        snr_db=snr,
                        frames=frames,
                        bits_sent=frames * sweep.mbm.bits_per_frame,
                        bit_errors=a.bit_errors,
                        vector_errors=a.vector_errors,
                        vectors_sent=frames * sweep.mbm.users,
                        mean_measured_flops=a.flops / frames,
                        mean_iterations=mean_iters,
                        flops_model=spec.model_flops(sweep.mbm, mean_iters),
                    )
                )
    finally:
        if pool is not None:
            pool.shutdown()
    records.sort(key=lambda r: (r.detector, r.snr_db))
    return records


def _scatter(sweep, snr_index, sigma2, lo, hi, pool, threads):
    """Split [lo, hi) into contiguous chunks and run them (possibly in
    parallel); chunk boundaries depend only on the range, not the pool."""
    if pool is None or hi - lo <= 1:
        yield _run_range((sweep, snr_index, sigma2, lo, hi))
        return
    size = hi - lo
    n_chunks = min(threads, size)
    bounds = [lo + (size * i) // n_chunks for i in range(n_chunks + 1)]
    jobs = [
        (sweep, snr_index, sigma2, bounds[i], bounds[i + 1]) for i in range(n_chunks)
    ]
    yield from pool.map(_run_range, jobs)


def _curve(records: list[BerRecord]):
    pts = sorted(((r.snr_db, r.ber, r.bits_sent) for r in records))
    return pts


def _snr_at_ber(records: list[BerRecord], target: float) -> float:
    """SNR where the curve crosses ``target``, by log-linear interpolation.

    Zero-BER points are floored at half an error before taking logs.
    """
    pts = _curve(records)
    if len(pts) < 1:
        raise GapError("empty curve")
    logs = [
        (snr, math.log10(max(ber, 0.5 / bits))) for snr, ber, bits in pts
    ]
    lt = math.log10(target)
    exact = [snr for snr, lb in logs if lb == lt]
    if exact:
        return exact[0]
    for (s0, l0), (s1, l1) in zip(logs, logs[1:]):
        if (l0 - lt) * (l1 - lt) < 0:
            return s0 + (s1 - s0) * (lt - l0) / (l1 - l0)
    raise GapError(
        f"target BER {target} outside measured range "
        f"[{min(p[1] for p in pts)}, {max(p[1] for p in pts)}]"
    )


def snr_gap_at_ber(
    records_a: list[BerRecord], records_b: list[BerRecord], target_ber: float
) -> float:
    """SNR(curve a at target) minus SNR(curve b at target), in dB."""
    return _snr_at_ber(records_a, target_ber) - _snr_at_ber(records_b, target_ber)
