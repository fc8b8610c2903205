"""Symbol detectors for the MBM-mMIMO uplink.

Six detectors share one calling convention ``detect(y, channels, config)``
(MMSE additionally takes the noise variance) and return a
:class:`DetectionOutcome`:

* ``ml_detect`` - exhaustive joint search, feasible only at desk scale;
* ``mmse_detect`` - regularized linear equalizer on the stacked channel;
* ``isd_detect`` - per-user matched filter + cancellation, no safeguards;
* ``iic_detect`` - per-user exhaustive alphabet search on the
  interference-cancelled signal, then a guarded greedy per-user update;
* ``map_isd_detect`` - picks a single most favorable mirror pattern per user
  through the cached diagonal pseudo-inverse, quantizes, and accepts the
  update only when it shrinks the residual;
* ``kmap_iic_detect`` - restricts the per-user search to the K most
  favorable mirror patterns, with a constellation-size-independent grid
  quantizer for square/rectangular QAM.

Iterative detectors keep the residual ``r = y - sum_k H_k x_k`` incrementally
and record ``||r||^2`` after every outer sweep.  Guarded updates make that
trace non-increasing for IIC, KMAP-IIC and MAP-ISD.  All tie-breaks
(users, mirror patterns, constellation points) resolve to the lowest index.

Search phases evaluate each candidate's residual norm directly (rather than
factoring out shared inner products) because that per-candidate evaluation
is what the closed-form complexity models in :mod:`mbmsim.complexity`
budget for; the instrumented FLOP tallies follow the convention documented
there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, superpose
from .complexity import NULL_COUNTER, FlopCounter
from .model import ZERO, Constellation, MbmConfig, MbmSymbol, signal_set_size

__all__ = [
    "DetectionOutcome",
    "ReducedSet",
    "SearchSpaceError",
    "SingularEqualizerError",
    "ml_cost",
    "ml_detect",
    "mmse_detect",
    "isd_detect",
    "iic_detect",
    "map_isd_detect",
    "kmap_iic_detect",
    "select_maps",
    "nearest_point_quantize",
    "qam_fast_quantize",
]


class SearchSpaceError(ValueError):
    """The joint alphabet is too large for exhaustive search."""


class SingularEqualizerError(RuntimeError):
    """The (regularized) Gram matrix cannot be inverted."""


@dataclass
class DetectionOutcome:
    """Per-user estimates plus diagnostics of one detection run."""

    estimates: list[MbmSymbol]
    iterations_used: int
    residual_trace: list[float]
    flops: int | None
    final_residual_norm2: float = float("nan")


@dataclass(frozen=True)
class ReducedSet:
    """The list of favorable mirror patterns for one user, best first."""

    owner_user: int
    map_indices: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.map_indices)) != len(self.map_indices):
            raise ValueError("map indices must be distinct")


# ---------------------------------------------------------------------------
# instrumented kernels


def _norm2(v: np.ndarray, counter: FlopCounter) -> float:
    counter.add(4 * v.size - 1)
    return float(np.sum(v.real**2 + v.imag**2))


def _user_observation(r, h, sym, points, counter):
    """``r + H_j x_j``: the received vector with user j's own term restored."""
    if sym.is_zero:
        return r
    counter.add(8 * r.size)
    return r + points[sym.point_index] * h[:, sym.map_index]


def _symbol_delta(h, old: MbmSymbol, new: MbmSymbol, points, counter):
    """``H_j (old - new)`` exploiting that both vectors have <= 1 nonzero."""
    n = h.shape[0]
    if old.is_zero:
        counter.add(6 * n)
        return -points[new.point_index] * h[:, new.map_index]
    if old.map_index == new.map_index:
        counter.add(2 + 6 * n)
        return (points[old.point_index] - points[new.point_index]) * h[:, old.map_index]
    counter.add(14 * n)
    return (
        points[old.point_index] * h[:, old.map_index]
        - points[new.point_index] * h[:, new.map_index]
    )


def _candidate_costs(y_user, h_cols, points, counter):
    """``||y - q h||^2`` for every (column, point) pair, evaluated directly.

    Returns a (columns, points) array; each entry is charged as one
    per-candidate evaluation.  The (points, columns, antennas) layout keeps
    the reduction axis contiguous; the per-candidate arithmetic (scale,
    subtract, squared magnitudes, antenna sum) is the same as in
    :func:`_listed_costs`, so equal candidates cost out bit-identically on
    either path.
    """
    n = y_user.size
    cand = np.empty((points.size, h_cols.shape[1], n), dtype=np.complex128)
    np.multiply(points[:, None, None], h_cols.T[None, :, :], out=cand)
    np.subtract(y_user, cand, out=cand)
    v = cand.view(np.float64).reshape(points.size, h_cols.shape[1], 2 * n)
    counter.add((12 * n - 1) * h_cols.shape[1] * points.size)
    return np.einsum("qmk,qmk->qm", v, v).T


def _listed_costs(y_user, h_cols, point_values, counter):
    """``||y - q_l h_l||^2`` for one chosen point per listed column."""
    n = y_user.size
    cand = np.empty((point_values.size, n), dtype=np.complex128)
    np.multiply(point_values[:, None], h_cols.T, out=cand)
    np.subtract(y_user, cand, out=cand)
    v = cand.view(np.float64).reshape(point_values.size, 2 * n)
    counter.add((12 * n - 1) * h_cols.shape[1])
    return np.einsum("kn,kn->k", v, v)


def _nearest_index(z: complex, points: np.ndarray, counter: FlopCounter) -> int:
    d2 = np.abs(points - z) ** 2
    counter.add(6 * points.size - 1)
    return int(np.argmin(d2))


def _charge_inverse_setup(channels: ChannelSet, counter: FlopCounter) -> None:
    # Detectors consuming the cached per-user inverses are charged their
    # construction once per call, as a standalone deployment would pay it.
    counter.add(channels.users * channels.maps * (6 * channels.n_r - 1))


# ---------------------------------------------------------------------------
# quantizers and MAP selection


def nearest_point_quantize(z: complex, constellation: Constellation) -> int:
    """Index of the constellation point closest to ``z``; ties to the lower
    index."""
    return _nearest_index(z, constellation.points, NULL_COUNTER)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.floor(np.abs(x) + 0.5) * np.sign(x)


def _grid_levels(vals: np.ndarray, n: int) -> np.ndarray:
    levels = 2.0 * _round_half_away((vals + 1.0) / 2.0) - 1.0
    return np.clip(levels, -(n - 1), n - 1)


def qam_fast_quantize(z, n1: int, n2: int):
    """Nearest point on the odd-integer QAM grid, one rounding per axis.

    ``z`` (scalar or array) must already be expressed on the unscaled grid.
    Axis roundings take half-way cases away from zero and clamp to
    ``+/-(N-1)``; the result matches a brute-force nearest-point search
    except on the measure-zero half-way set.
    """
    if n1 < 2 or n1 % 2 or n2 < 2 or n2 % 2:
        raise ValueError(f"PAM sizes must be even and >= 2, got ({n1}, {n2})")
    z = np.asarray(z, dtype=np.complex128)
    out = _grid_levels(z.real, n1) + 1j * _grid_levels(z.imag, n2)
    return complex(out) if out.ndim == 0 else out


def select_maps(
    user_observation: np.ndarray,
    w_j: np.ndarray,
    list_size: int,
    user: int = 0,
    counter: FlopCounter = NULL_COUNTER,
) -> ReducedSet:
    """The ``list_size`` mirror patterns with the largest filtered magnitude.

    ``user_observation`` is the interference-cancelled vector for this user;
    the returned indices are magnitude-descending with ties to the lower
    index.
    """
    maps = w_j.shape[0]
    if not 1 <= list_size <= maps:
        raise ValueError(f"need 1 <= K <= M={maps}, got {list_size}")
    e = w_j @ user_observation
    counter.add(8 * w_j.shape[1] * maps)
    return ReducedSet(user, _top_indices(e, list_size, counter))


def _top_index_array(e: np.ndarray, k: int, counter: FlopCounter) -> np.ndarray:
    """Indices of the k largest |e| entries, descending, ties to lower index."""
    mags = e.real**2 + e.imag**2
    counter.add(3 * e.size)
    order = np.argsort(-mags, kind="stable")
    return order[:k]


def _top_indices(e: np.ndarray, k: int, counter: FlopCounter) -> tuple[int, ...]:
    return tuple(int(i) for i in _top_index_array(e, k, counter))


# ---------------------------------------------------------------------------
# costs and exhaustive detection


def ml_cost(y, channels: ChannelSet, symbols, config: MbmConfig) -> float:
    """``||y - sum_k H_k x_k||^2``; ZERO symbols contribute nothing."""
    return float(np.sum(np.abs(y - superpose(channels, symbols, config.constellation)) ** 2))


def ml_detect(
    y,
    channels: ChannelSet,
    config: MbmConfig,
    max_candidates: int = 10**6,
    count_flops: bool = True,
) -> DetectionOutcome:
    """Global minimizer of the joint cost by exhaustive enumeration.

    Refuses when the joint space exceeds ``max_candidates``.  Ties resolve
    to the lexicographically smallest per-user (map_index, point_index)
    sequence.
    """
    per_user, joint = signal_set_size(config)
    if joint > max_candidates:
        raise SearchSpaceError(
            f"joint search space {joint} exceeds the cap of {max_candidates}"
        )
    counter = FlopCounter() if count_flops else NULL_COUNTER
    points = config.constellation.points
    n_r, users = channels.n_r, channels.users
    a = config.constellation.size

    # per-user candidate contributions, column s = points[s % A] * h[:, s // A]
    contribs = []
    for h in channels.per_user:
        cols = h[:, np.repeat(np.arange(config.maps), a)] * np.tile(points, config.maps)
        counter.add(6 * n_r * per_user)
        contribs.append(cols)

    best_cost = np.inf
    best_index = -1
    weights = [per_user ** (users - 1 - k) for k in range(users)]
    chunk = 4096
    for start in range(0, joint, chunk):
        idx = np.arange(start, min(start + chunk, joint))
        acc = np.zeros((n_r, idx.size), dtype=np.complex128)
        for k in range(users):
            digits = (idx // weights[k]) % per_user
            acc += contribs[k][:, digits]
        diff = y[:, None] - acc
        costs = np.sum(diff.real**2 + diff.imag**2, axis=0)
        counter.add((2 * n_r * users + 4 * n_r - 1) * idx.size)
        local = int(np.argmin(costs))
        if costs[local] < best_cost:
            best_cost = float(costs[local])
            best_index = start + local

    estimates = []
    for k in range(users):
        s = (best_index // weights[k]) % per_user
        estimates.append(MbmSymbol(s // a, s % a))
    return DetectionOutcome(
        estimates=estimates,
        iterations_used=1,
        residual_trace=[best_cost],
        flops=counter.total if count_flops else None,
        final_residual_norm2=best_cost,
    )


def mmse_detect(
    y,
    channels: ChannelSet,
    config: MbmConfig,
    sigma2: float,
    count_flops: bool = True,
) -> DetectionOutcome:
    """Linear MMSE equalizer on the stacked channel, then per-user hard
    decisions: the strongest entry of each user's block names the mirror
    pattern and is quantized to the nearest point."""
    h = channels.stacked()
    um = h.shape[1]
    if sigma2 == 0 and um > channels.n_r:
        raise SingularEqualizerError(
            f"unregularized equalizer needs U*M <= N_r, got {um} > {channels.n_r}"
        )
    counter = FlopCounter() if count_flops else NULL_COUNTER
    gram = h.conj().T @ h
    gram[np.diag_indices_from(gram)] += sigma2
    rhs = h.conj().T @ y
    counter.add(8 * channels.n_r * um * um + 8 * channels.n_r * um)
    try:
        soft = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularEqualizerError(f"regularized Gram is singular: {exc}") from exc
    counter.add((8 * um**3) // 3)

    points = config.constellation.points
    maps = config.maps
    estimates = []
    for k in range(channels.users):
        block = soft[k * maps : (k + 1) * maps]
        mags = block.real**2 + block.imag**2
        counter.add(3 * maps + maps - 1)
        m = int(np.argmax(mags))
        q = _nearest_index(block[m], points, counter)
        estimates.append(MbmSymbol(m, q))
    final = ml_cost(y, channels, estimates, config)
    return DetectionOutcome(
        estimates=estimates,
        iterations_used=1,
        residual_trace=[final],
        flops=counter.total if count_flops else None,
        final_residual_norm2=final,
    )


# ---------------------------------------------------------------------------
# iterative detectors


def isd_detect(y, channels: ChannelSet, config: MbmConfig, count_flops: bool = True):
    """Plain sequential matched-filter detection, iterated ``L`` times.

    The ablation baseline: same per-user filter and argmax as
    :func:`map_isd_detect` but every decision is committed unconditionally
    and all ``L`` sweeps always run.
    """
    counter = FlopCounter() if count_flops else NULL_COUNTER
    _charge_inverse_setup(channels, counter)
    points = config.constellation.points
    n_r = channels.n_r
    x = [ZERO] * channels.users
    r = y.astype(np.complex128, copy=True)
    trace = []
    for _ in range(config.iterations):
        for j in range(channels.users):
            h = channels.per_user[j]
            y_j = _user_observation(r, h, x[j], points, counter)
            e = channels.pseudo_inverses[j] @ y_j
            counter.add(8 * channels.maps * n_r)
            k = _argmax_magnitude(e, counter)
            q = _nearest_index(e[k], points, counter)
            x[j] = MbmSymbol(int(k), q)
            r = y_j - points[q] * h[:, k]
            counter.add(8 * n_r)
        trace.append(_norm2(r, counter))
    return DetectionOutcome(
        estimates=x,
        iterations_used=config.iterations,
        residual_trace=trace,
        flops=counter.total if count_flops else None,
        final_residual_norm2=trace[-1],
    )


def _argmax_magnitude(e: np.ndarray, counter: FlopCounter) -> int:
    mags = e.real**2 + e.imag**2
    counter.add(3 * e.size + e.size - 1)
    return int(np.argmax(mags))


def map_isd_detect(y, channels: ChannelSet, config: MbmConfig, count_flops: bool = True):
    """Favorable-MAP sequential detection with a residual-decrease guard.

    Per user and sweep: filter the interference-cancelled vector through the
    cached diagonal pseudo-inverse, take the strongest coordinate as the
    mirror pattern, quantize its soft value, and commit only if the residual
    norm strictly drops.  Stops after ``L`` sweeps or one sweep without any
    accepted change.
    """
    counter = FlopCounter() if count_flops else NULL_COUNTER
    _charge_inverse_setup(channels, counter)
    points = config.constellation.points
    n_r = channels.n_r
    users = channels.users
    x = [ZERO] * users
    last_candidate: list[MbmSymbol] = [ZERO] * users
    r = y.astype(np.complex128, copy=True)
    rnorm = _norm2(r, counter)
    trace = []
    iterations_used = config.iterations
    for t in range(1, config.iterations + 1):
        changed = False
        for j in range(users):
            h = channels.per_user[j]
            y_j = _user_observation(r, h, x[j], points, counter)
            e = channels.pseudo_inverses[j] @ y_j
            counter.add(8 * channels.maps * n_r)
            k = _argmax_magnitude(e, counter)
            q = _nearest_index(e[k], points, counter)
            candidate = MbmSymbol(int(k), q)
            last_candidate[j] = candidate
            if candidate == x[j]:
                continue
            d = _symbol_delta(h, x[j], candidate, points, counter)
            updated = r + d
            cost = _norm2(updated, counter)
            counter.add(2 * n_r)
            if cost < rnorm:
                r = updated
                rnorm = cost
                x[j] = candidate
                changed = True
        trace.append(rnorm)
        if not changed:
            iterations_used = t
            break
    final = _assign_stranded(r, rnorm, x, last_candidate, channels, points, counter)
    return DetectionOutcome(
        estimates=x,
        iterations_used=iterations_used,
        residual_trace=trace,
        flops=counter.total if count_flops else None,
        final_residual_norm2=final,
    )


def iic_detect(y, channels: ChannelSet, config: MbmConfig, count_flops: bool = True):
    """Iterative interference cancellation with a full per-user search.

    Each sweep finds every user's best symbol over the whole per-user
    alphabet on its interference-cancelled vector, then applies up to ``U``
    greedy guarded updates, committing the user whose update shrinks the
    residual most.  Stops after ``L`` sweeps or when a sweep leaves the
    solution unchanged.
    """
    counter = FlopCounter() if count_flops else NULL_COUNTER
    points = config.constellation.points
    users = channels.users
    x = [ZERO] * users
    candidates: list[MbmSymbol] = [ZERO] * users
    r = y.astype(np.complex128, copy=True)
    rnorm = _norm2(r, counter)
    trace = []
    iterations_used = config.iterations
    for t in range(1, config.iterations + 1):
        previous = list(x)
        for j in range(users):
            h = channels.per_user[j]
            y_j = _user_observation(r, h, x[j], points, counter)
            costs = _candidate_costs(y_j, h, points, counter)
            flat = int(np.argmin(costs))
            candidates[j] = MbmSymbol(flat // points.size, flat % points.size)
        rnorm = _greedy_update(r, rnorm, x, candidates, channels, points, counter)
        trace.append(rnorm)
        if x == previous:
            iterations_used = t
            break
    final = _assign_stranded(r, rnorm, x, candidates, channels, points, counter)
    return DetectionOutcome(
        estimates=x,
        iterations_used=iterations_used,
        residual_trace=trace,
        flops=counter.total if count_flops else None,
        final_residual_norm2=final,
    )


def kmap_iic_detect(y, channels: ChannelSet, config: MbmConfig, count_flops: bool = True):
    """Interference cancellation searching only the K most favorable MAPs.

    Like :func:`iic_detect`, but each user's search runs over the
    ``list_size`` mirror patterns ranked by the diagonal-pseudo-inverse
    filter.  For square/rectangular QAM the per-pattern point comes from the
    one-shot grid quantizer, making the search cost independent of the
    constellation size; other alphabets scan the listed candidates.
    With ``list_size == M`` the result is identical to :func:`iic_detect`.
    """
    k_list = config.list_size
    if not 1 <= k_list <= config.maps:
        raise ValueError(f"need 1 <= K <= M={config.maps}, got {k_list}")
    counter = FlopCounter() if count_flops else NULL_COUNTER
    _charge_inverse_setup(channels, counter)
    const = config.constellation
    points = const.points
    users = channels.users
    n_r = channels.n_r
    x = [ZERO] * users
    candidates: list[MbmSymbol] = [ZERO] * users
    r = y.astype(np.complex128, copy=True)
    rnorm = _norm2(r, counter)
    trace = []
    iterations_used = config.iterations
    for t in range(1, config.iterations + 1):
        previous = list(x)
        for j in range(users):
            h = channels.per_user[j]
            y_j = _user_observation(r, h, x[j], points, counter)
            e = channels.pseudo_inverses[j] @ y_j
            counter.add(8 * config.maps * n_r)
            listed = _top_index_array(e, k_list, counter)
            if const.pam_sizes is not None:
                n1, n2 = const.pam_sizes
                grid = np.atleast_1d(qam_fast_quantize(e[listed] / const.scale, n1, n2))
                counter.add(18 * k_list)
                point_idx = const.grid_point_indices(
                    np.round(grid.real).astype(np.int64), np.round(grid.imag).astype(np.int64)
                )
                costs = _listed_costs(y_j, h[:, listed], points[point_idx], counter)
                best = _lowest_map_argmin(costs, listed)
                candidates[j] = MbmSymbol(int(listed[best]), int(point_idx[best]))
            else:
                costs = _candidate_costs(y_j, h[:, listed], points, counter)
                candidates[j] = _lex_argmin(costs, listed)
        rnorm = _greedy_update(r, rnorm, x, candidates, channels, points, counter)
        trace.append(rnorm)
        if x == previous:
            iterations_used = t
            break
    final = _assign_stranded(r, rnorm, x, candidates, channels, points, counter)
    return DetectionOutcome(
        estimates=x,
        iterations_used=iterations_used,
        residual_trace=trace,
        flops=counter.total if count_flops else None,
        final_residual_norm2=final,
    )


def _lowest_map_argmin(costs: np.ndarray, listed: np.ndarray) -> int:
    """Position of the cheapest listed entry, ties to the lowest map index."""
    minimum = costs.min()
    tied = np.flatnonzero(costs == minimum)
    return int(tied[np.argmin(listed[tied])])


def _lex_argmin(costs: np.ndarray, listed: np.ndarray) -> MbmSymbol:
    """Cheapest (map, point) among listed rows, ties lexicographic."""
    minimum = costs.min()
    rows, cols = np.nonzero(costs == minimum)
    order = np.lexsort((cols, listed[rows]))
    pick = order[0]
    return MbmSymbol(int(listed[rows[pick]]), int(cols[pick]))


def _greedy_update(r, rnorm, x, candidates, channels, points, counter):
    """Guarded greedy per-user commit phase shared by IIC and KMAP-IIC.

    Candidate improvements are costed once against the residual at phase
    entry; after each commit only the committed user's entry is retired.
    The guard itself always compares against a freshly evaluated norm, so
    accepted updates strictly decrease ``||r||^2``.  Mutates ``r`` and ``x``
    in place and returns the new residual norm.
    """
    users = len(x)
    n_r = r.size
    deltas: list[np.ndarray | None] = [None] * users
    costs = np.full(users, np.inf)
    for i in range(users):
        if candidates[i] == x[i]:
            continue
        d = _symbol_delta(channels.per_user[i], x[i], candidates[i], points, counter)
        deltas[i] = d
        costs[i] = _norm2(r + d, counter)
        counter.add(2 * n_r)
    stale = False
    for _ in range(users):
        u = int(np.argmin(costs))
        if not np.isfinite(costs[u]):
            break
        if stale:
            updated = r + deltas[u]
            fresh = _norm2(updated, counter)
            counter.add(2 * n_r)
        else:
            updated = r + deltas[u]
            counter.add(2 * n_r)
            fresh = costs[u]
        if fresh < rnorm:
            r[:] = updated
            rnorm = fresh
            x[u] = candidates[u]
            costs[u] = np.inf
            stale = True
        else:
            break
    return rnorm


def _assign_stranded(r, rnorm, x, candidates, channels, points, counter):
    """Give any user still at ZERO its most recent search candidate.

    The residual guards can reject every proposal for a user at very low
    SNR, which would leave an undecodable ZERO estimate.  Committing the
    last candidate (with the matching residual update) keeps the returned
    estimates inside the transmit alphabet and the final residual consistent
    with them; the per-sweep trace is already closed at this point.
    """
    for j in range(len(x)):
        if x[j].is_zero:
            d = _symbol_delta(channels.per_user[j], x[j], candidates[j], points, counter)
            r[:] = r + d
            counter.add(2 * r.size)
            rnorm = _norm2(r, counter)
            x[j] = candidates[j]
    return rnorm
