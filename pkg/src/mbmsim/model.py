"""MBM signal model: constellations, mirror patterns, and bit mapping.

A media-based-modulation (MBM) user sends one complex constellation point
through one of ``M = 2**n_rf`` channel fade realizations ("mirror activation
patterns", MAPs).  A transmit symbol is therefore a pair (map_index,
point_index); its dense form is an M-vector with a single nonzero entry.
Bits split into ``n_rf`` MAP bits (MSB-first natural binary) followed by
``log2(|constellation|)`` point bits.  The point bits are Gray-labelled:
``Constellation.points`` is ordered so that index ``b`` is the point whose
per-axis Gray label is ``b``, which makes encode/decode a plain integer
(de)composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "Constellation",
    "MbmConfig",
    "MbmSymbol",
    "ZERO",
    "bpsk",
    "square_qam",
    "constellation_by_name",
    "spectral_efficiency",
    "signal_set_size",
    "encode",
    "decode",
    "to_dense",
    "signal_set",
]


def _gray_decode(g: int) -> int:
    """Inverse Gray code: label -> rank along one PAM axis."""
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


@dataclass(frozen=True)
class Constellation:
    """A unit-average-energy complex alphabet.

    ``points[b]`` is the point carrying bit label ``b``.  For square or
    rectangular QAM (``pam_sizes`` set) the unscaled points live on the odd
    integer grid {±1, ±3, ...} per axis and ``scale`` maps that grid to unit
    average energy; other alphabets keep ``pam_sizes = None``.
    """

    name: str
    points: np.ndarray
    pam_sizes: tuple[int, int] | None = None
    scale: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        n = len(pts)
        if n < 2 or n & (n - 1):
            raise ValueError(f"constellation size {n} is not a power of two")
        energy = float(np.mean(np.abs(pts) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"constellation {self.name!r} has mean energy {energy!r}, expected 1")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bits_per_point(self) -> int:
        return self.size.bit_length() - 1

    def grid_point_index(self, re_level: int, im_level: int) -> int:
        """Index of the point at unscaled grid coordinates (re, im)."""
        return int(self.grid_point_indices(np.asarray([re_level]), np.asarray([im_level]))[0])

    def grid_point_indices(self, re_levels, im_levels) -> np.ndarray:
        """Vectorized grid-coordinates -> point-index map (Gray labels)."""
        if self.pam_sizes is None:
            raise ValueError(f"constellation {self.name!r} has no integer grid")
        n1, n2 = self.pam_sizes
        i1 = (np.asarray(re_levels, dtype=np.int64) + (n1 - 1)) >> 1
        i2 = (np.asarray(im_levels, dtype=np.int64) + (n2 - 1)) >> 1
        bits_q = n2.bit_length() - 1
        return ((i1 ^ (i1 >> 1)) << bits_q) | (i2 ^ (i2 >> 1))


def square_qam(order: int) -> Constellation:
    """Gray-labelled square/rectangular QAM of the given power-of-two order.

    Odd powers of two (8, 32, ...) use a rectangular N1 x N2 grid with
    N1 = 2*N2.  Bit labels put the real-axis bits first.
    """
    k = order.bit_length() - 1
    if order < 4 or order & (order - 1):
        raise ValueError(f"QAM order must be a power of two >= 4, got {order}")
    n1 = 1 << ((k + 1) // 2)
    n2 = 1 << (k // 2)
    scale = 1.0 / math.sqrt((n1 * n1 - 1) / 3 + (n2 * n2 - 1) / 3)
    bits_q = n2.bit_length() - 1
    points = np.empty(order, dtype=np.complex128)
    for label in range(order):
        b_i, b_q = label >> bits_q, label & (n2 - 1)
        re = 2 * _gray_decode(b_i) - (n1 - 1)
        im = 2 * _gray_decode(b_q) - (n2 - 1)
        points[label] = complex(re, im) * scale
    return Constellation(f"{order}-qam", points, pam_sizes=(n1, n2), scale=scale)


def bpsk() -> Constellation:
    return Constellation("bpsk", np.array([1.0 + 0j, -1.0 + 0j]))


def constellation_by_name(name: str) -> Constellation:
    """Parse names like ``4-qam``, ``16qam``, ``qpsk``, ``bpsk``."""
    key = name.strip().lower().replace("_", "-")
    if key == "bpsk":
        return bpsk()
    if key == "qpsk":
        return square_qam(4)
    stem = key[:-3].rstrip("-") if key.endswith("qam") else None
    if stem is None or not stem.isdigit():
        raise ValueError(f"unknown constellation {name!r}")
    return square_qam(int(stem))


class MbmSymbol(NamedTuple):
    """One user's transmit symbol: which MAP fired and which point was sent.

    ``ZERO`` (negative indices) is the all-zero vector the iterative
    detectors start from; it never appears in the transmit alphabet.
    """

    map_index: int
    point_index: int

    @property
    def is_zero(self) -> bool:
        return self.map_index < 0


ZERO = MbmSymbol(-1, -1)


@dataclass(frozen=True)
class MbmConfig:
    """System dimensions for one MBM-mMIMO uplink."""

    n_r: int
    users: int
    n_rf: int
    constellation: Constellation
    iterations: int = 6
    list_size: int = 1

    def __post_init__(self):
        if not (self.n_r >= self.users >= 1):
            raise ValueError(f"need n_r >= users >= 1, got n_r={self.n_r}, users={self.users}")
        if self.n_rf < 1:
            raise ValueError(f"need n_rf >= 1, got {self.n_rf}")
        if self.iterations < 1:
            raise ValueError(f"need iterations >= 1, got {self.iterations}")
        if not (1 <= self.list_size <= self.maps):
            raise ValueError(
                f"list_size must satisfy 1 <= K <= M={self.maps}, got {self.list_size}"
            )

    @property
    def maps(self) -> int:
        return 1 << self.n_rf

    @property
    def bits_per_symbol(self) -> int:
        return self.n_rf + self.constellation.bits_per_point

    @property
    def bits_per_frame(self) -> int:
        return self.users * self.bits_per_symbol


def spectral_efficiency(config: MbmConfig) -> float:
    """Bits per channel use carried by all users together."""
    return float(config.users * config.bits_per_symbol)


def signal_set_size(config: MbmConfig) -> tuple[int, int]:
    """(per-user alphabet size, joint search-space size).

    Python integers are unbounded, so the joint size is exact even when it
    is astronomically large.
    """
    per_user = config.maps * config.constellation.size
    return per_user, per_user**config.users


def encode(bits, config: MbmConfig) -> MbmSymbol:
    """Map one user's bit block to a transmit symbol.

    The first ``n_rf`` bits (MSB first) select the MAP; the rest select the
    constellation point through the Gray-labelled point table.
    """
    bits = np.asarray(bits)
    if bits.shape != (config.bits_per_symbol,):
        raise ValueError(
            f"expected {config.bits_per_symbol} bits, got shape {bits.shape}"
        )
    map_index = 0
    for b in bits[: config.n_rf]:
        map_index = (map_index << 1) | int(b)
    point_index = 0
    for b in bits[config.n_rf :]:
        point_index = (point_index << 1) | int(b)
    return MbmSymbol(map_index, point_index)


def decode(symbol: MbmSymbol, config: MbmConfig) -> np.ndarray:
    """Exact inverse of :func:`encode`."""
    if symbol.is_zero:
        raise ValueError("the ZERO symbol carries no bits")
    n_map, n_pt = config.n_rf, config.constellation.bits_per_point
    out = np.empty(n_map + n_pt, dtype=np.uint8)
    for i in range(n_map):
        out[i] = (symbol.map_index >> (n_map - 1 - i)) & 1
    for i in range(n_pt):
        out[n_map + i] = (symbol.point_index >> (n_pt - 1 - i)) & 1
    return out


def to_dense(symbol: MbmSymbol, maps: int, constellation: Constellation) -> np.ndarray:
    """Dense M-vector form: one nonzero entry, or all zeros for ZERO."""
    out = np.zeros(maps, dtype=np.complex128)
    if not symbol.is_zero:
        if symbol.map_index >= maps:
            raise ValueError(f"map_index {symbol.map_index} out of range for M={maps}")
        out[symbol.map_index] = constellation.points[symbol.point_index]
    return out


def signal_set(config: MbmConfig) -> list[MbmSymbol]:
    """All M*|A| per-user symbols, lexicographic in (map_index, point_index)."""
    return [
        MbmSymbol(m, q)
        for m in range(config.maps)
        for q in range(config.constellation.size)
    ]
