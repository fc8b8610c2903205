"""FLOP accounting: closed-form per-iteration models and a runtime counter.

Two independent views of detector cost live here.

The closed-form models reproduce the published per-iteration budgets as
exact integer arithmetic:

=========  =====================================================
detector   cost
=========  =====================================================
IIC        per iteration: 2*N_r + (4*N_r-1)*M*U*|A| + (6*N_r-1)*U^2
MAP-ISD    once: (2*N_r-1)*M*U;  per iteration: 2*M*N_r*U + (4*N_r-1)*U
KMAP-IIC   once: (2*N_r-1)*M*U;  per iteration: 2*M*N_r*U
           + (2*N_r+4)*K*U + (6*N_r-1)*U^2
=========  =====================================================

The runtime counter tallies what the instrumented kernels actually execute,
under an explicit real-FLOP convention (the closed forms above count complex
operations loosely, so the two are only compared as ratios):

* complex multiply-accumulate term (dot products, matvecs): 8
* complex multiply: 6;  complex add/subtract: 2
* |z|^2: 3;  real add/multiply/divide/compare/round: 1

Derived kernel costs used by the detectors, for a length-n vector:
squared norm ``4n-1``; candidate cost ``||y - q h||^2`` evaluated directly
``12n-1``; scaled-column update ``8n``; guard cost ``||r + d||^2`` ``6n-1``;
M x n matvec ``8*M*n``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import MbmConfig

__all__ = [
    "FlopModelInput",
    "FlopCounter",
    "InstrumentationDisabled",
    "flops_iic_iter",
    "flops_map_isd",
    "flops_kmap_iic",
    "measured_flops",
]


class InstrumentationDisabled(RuntimeError):
    """The detector ran without FLOP instrumentation."""


def _check_positive(**values: int) -> None:
    for name, v in values.items():
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")


def flops_iic_iter(n_r: int, users: int, maps: int, alphabet_size: int) -> int:
    """Published per-iteration budget of the full-search canceller (IIC)."""
    _check_positive(n_r=n_r, users=users, maps=maps, alphabet_size=alphabet_size)
    return 2 * n_r + (4 * n_r - 1) * maps * users * alphabet_size + (6 * n_r - 1) * users**2


def flops_map_isd(n_r: int, users: int, maps: int) -> tuple[int, int]:
    """(one-time, per-iteration) budget of the single-MAP detector."""
    _check_positive(n_r=n_r, users=users, maps=maps)
    once = (2 * n_r - 1) * maps * users
    per_iter = 2 * maps * n_r * users + (4 * n_r - 1) * users
    return once, per_iter


def flops_kmap_iic(n_r: int, users: int, maps: int, list_size: int) -> tuple[int, int]:
    """(one-time, per-iteration) budget of the K-MAP list canceller."""
    _check_positive(n_r=n_r, users=users, maps=maps, list_size=list_size)
    if list_size > maps:
        raise ValueError(f"list_size {list_size} exceeds maps {maps}")
    once = (2 * n_r - 1) * maps * users
    per_iter = (
        2 * maps * n_r * users
        + (2 * n_r + 4) * list_size * users
        + (6 * n_r - 1) * users**2
    )
    return once, per_iter


@dataclass(frozen=True)
class FlopModelInput:
    """Dimension bundle for the closed-form models."""

    n_r: int
    users: int
    maps: int
    alphabet_size: int
    list_size: int = 1
    iterations: int = 1

    def __post_init__(self):
        _check_positive(
            n_r=self.n_r,
            users=self.users,
            maps=self.maps,
            alphabet_size=self.alphabet_size,
            list_size=self.list_size,
            iterations=self.iterations,
        )
        if self.list_size > self.maps:
            raise ValueError(f"list_size {self.list_size} exceeds maps {self.maps}")

    @classmethod
    def from_config(cls, config: MbmConfig) -> "FlopModelInput":
        return cls(
            n_r=config.n_r,
            users=config.users,
            maps=config.maps,
            alphabet_size=config.constellation.size,
            list_size=config.list_size,
            iterations=config.iterations,
        )

    def iic_iter(self) -> int:
        return flops_iic_iter(self.n_r, self.users, self.maps, self.alphabet_size)

    def map_isd(self) -> tuple[int, int]:
        return flops_map_isd(self.n_r, self.users, self.maps)

    def kmap_iic(self) -> tuple[int, int]:
        return flops_kmap_iic(self.n_r, self.users, self.maps, self.list_size)


class FlopCounter:
    """Monotone per-trial tally fed by the instrumented numeric kernels."""

    __slots__ = ("total",)

    def __init__(self):
        self.total = 0

    def add(self, n: int) -> None:
        if n < 0:
            raise ValueError("FLOP increments cannot be negative")
        self.total += n


class _NullCounter(FlopCounter):
    """Counter stand-in used when instrumentation is switched off."""

    def add(self, n: int) -> None:  # noqa: ARG002 - intentional no-op
        pass


NULL_COUNTER = _NullCounter()


def measured_flops(outcome) -> int:
    """Instrumented tally of a finished detection, or raise if disabled."""
    if outcome.flops is None:
        raise InstrumentationDisabled("detector ran with count_flops=False")
    return outcome.flops
