"""Rayleigh channel ensemble, AWGN transmission, and the diagonal pseudo-inverse.

Each user owns an ``N_r x M`` matrix whose columns are the fade realizations
selectable by that user's mirrors.  Entries are i.i.d. CN(0,1): independent
real/imaginary Gaussians of variance 1/2 each.  For the proposed detectors a
per-user matrix ``W_k = D_k^{-1} H_k^H`` (D_k = diagonal of the per-user Gram
matrix) is computed once per realization and cached here: channel hardening
makes ``W_k H_k`` approximately the identity at large N_r, so ``W_k`` acts as
a cheap O(M*N_r) stand-in for the full pseudo-inverse.

RNG contract: every stream is derived from a master seed with
``numpy.random.SeedSequence(master, spawn_key=path)``, so any (seed, path)
pair names the same stream regardless of execution order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .model import MbmConfig, MbmSymbol

__all__ = [
    "ChannelSet",
    "NoiseModel",
    "DegenerateChannelError",
    "derived_rng",
    "generate_channel",
    "transmit",
    "superpose",
    "gram_diag_inverse",
    "hardening_metric",
    "dump_channel_set",
    "load_channel_set",
]

_DUMP_MAGIC = b"MBMCHAN1"


class DegenerateChannelError(RuntimeError):
    """A channel column has zero norm; the realization cannot be equalized."""


@dataclass(frozen=True)
class NoiseModel:
    """Complex AWGN with total per-entry variance ``sigma2``."""

    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")


@dataclass(frozen=True)
class ChannelSet:
    """Per-user channel matrices plus their cached diagonal pseudo-inverses.

    ``per_user[k]`` is N_r x M; ``pseudo_inverses[k]`` is M x N_r with row m
    equal to ``h_m^H / ||h_m||^2``; ``col_norms2[k][m] = ||h_m||^2``.
    """

    per_user: tuple[np.ndarray, ...]
    pseudo_inverses: tuple[np.ndarray, ...]
    col_norms2: tuple[np.ndarray, ...]

    @property
    def users(self) -> int:
        return len(self.per_user)

    @property
    def n_r(self) -> int:
        return self.per_user[0].shape[0]

    @property
    def maps(self) -> int:
        return self.per_user[0].shape[1]

    def stacked(self) -> np.ndarray:
        """The N_r x (U*M) matrix with all users' columns side by side."""
        return np.concatenate(self.per_user, axis=1)


def derived_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent stream addressed by (seed, path), order-insensitive."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=path))


def gram_diag_inverse(h_k: np.ndarray) -> np.ndarray:
    """``D^{-1} H^H`` for one user: row m is ``h_m^H / ||h_m||^2``.

    Costs O(M*N_r); raises :class:`DegenerateChannelError` on a zero-norm
    column (probability zero under the CN(0,1) model).
    """
    norms2 = np.sum(h_k.real**2 + h_k.imag**2, axis=0)
    if np.any(norms2 == 0.0):
        raise DegenerateChannelError("channel matrix has a zero-norm column")
    return h_k.conj().T / norms2[:, None]


def generate_channel(rng: np.random.Generator, config: MbmConfig) -> ChannelSet:
    """Draw one CN(0,1) realization for every user and cache the inverses."""
    shape = (config.users, config.n_r, config.maps)
    draws = rng.standard_normal((2, *shape))
    full = np.sqrt(0.5) * (draws[0] + 1j * draws[1])
    per_user = []
    pinvs = []
    norms = []
    for k in range(config.users):
        h = full[k]
        norms2 = np.sum(h.real**2 + h.imag**2, axis=0)
        if np.any(norms2 == 0.0):
            raise DegenerateChannelError("channel matrix has a zero-norm column")
        per_user.append(h)
        pinvs.append(h.conj().T / norms2[:, None])
        norms.append(norms2)
    return ChannelSet(tuple(per_user), tuple(pinvs), tuple(norms))


def transmit(
    channels: ChannelSet,
    symbols: list[MbmSymbol],
    noise: NoiseModel,
    rng: np.random.Generator,
    constellation,
) -> np.ndarray:
    """Received vector ``sum_k H_k x_k + n`` with ``n ~ CN(0, sigma2 I)``."""
    if len(symbols) != channels.users:
        raise ValueError(f"expected {channels.users} symbols, got {len(symbols)}")
    y = np.zeros(channels.n_r, dtype=np.complex128)
    for h, s in zip(channels.per_user, symbols):
        if s.is_zero:
            raise ValueError("cannot transmit the ZERO symbol")
        y += constellation.points[s.point_index] * h[:, s.map_index]
    if noise.sigma2 > 0:
        std = np.sqrt(noise.sigma2 / 2)
        y += std * (
            rng.standard_normal(channels.n_r) + 1j * rng.standard_normal(channels.n_r)
        )
    return y


def superpose(channels: ChannelSet, symbols: list[MbmSymbol], constellation) -> np.ndarray:
    """Noise-free ``sum_k H_k x_k``; ZERO symbols contribute nothing."""
    y = np.zeros(channels.n_r, dtype=np.complex128)
    for h, s in zip(channels.per_user, symbols):
        if not s.is_zero:
            y += constellation.points[s.point_index] * h[:, s.map_index]
    return y


def hardening_metric(channels: ChannelSet) -> float:
    """Worst-case normalized column correlation of the stacked channel.

    ``max_{i != j} |h_i^H h_j| / N_r`` shrinks like 1/sqrt(N_r), which is the
    effect the diagonal pseudo-inverse relies on.
    """
    h = channels.stacked()
    g = h.conj().T @ h
    np.fill_diagonal(g, 0.0)
    return float(np.max(np.abs(g)) / channels.n_r)


def dump_channel_set(channels: ChannelSet, path) -> None:
    """Write a little-endian fixture: magic, dims, then per-user row-major
    complex64 matrices."""
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(struct.pack("<III", channels.users, channels.n_r, channels.maps))
        for h in channels.per_user:
            fh.write(np.ascontiguousarray(h.astype(np.complex64)).tobytes())


def load_channel_set(path) -> ChannelSet:
    """Read a fixture written by :func:`dump_channel_set`.

    Values round-trip at complex64 precision; the pseudo-inverses are
    recomputed from the loaded matrices.
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(_DUMP_MAGIC))
        if magic != _DUMP_MAGIC:
            raise ValueError(f"not a channel fixture: bad magic {magic!r}")
        users, n_r, maps = struct.unpack("<III", fh.read(12))
        per_user = []
        pinvs = []
        norms = []
        for _ in range(users):
            raw = fh.read(8 * n_r * maps)
            h = np.frombuffer(raw, dtype=np.complex64).reshape(n_r, maps).astype(np.complex128)
            norms2 = np.sum(h.real**2 + h.imag**2, axis=0)
            if np.any(norms2 == 0.0):
                raise DegenerateChannelError("channel fixture has a zero-norm column")
            per_user.append(h)
            pinvs.append(h.conj().T / norms2[:, None])
            norms.append(norms2)
    return ChannelSet(tuple(per_user), tuple(pinvs), tuple(norms))
