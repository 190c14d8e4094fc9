"""Adversary matrices for ordered search and the runtime bounds built on them."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from scipy.integrate import simpson

from .evolution import Schedule, Trajectory, worker_count
from .paths import SecretWord

__all__ = [
    "AdversaryMatrix",
    "GridMismatch",
    "RateBoundReport",
    "LocalConditionReport",
    "alpha_string",
    "hamming_distance",
    "power_iteration",
    "ordered_search_adversary",
    "restricted_adversary",
    "restricted_norms",
    "max_restricted_norm",
    "distinguishability",
    "w_trace",
    "w_rate_bound_check",
    "spectral_lower_bound",
    "pairwise_overlap_epsilon",
    "local_condition_check",
    "critical_speed_constant",
    "adversary_report",
    "write_adversary_report",
]


class GridMismatch(ValueError):
    pass


def alpha_string(word: SecretWord) -> np.ndarray:
    """Step string over positions ``i``: 0 before ``x``, 1 from ``x`` on."""
    return (np.arange(2**word.n) >= word.x).astype(np.int8)


def hamming_distance(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def power_iteration(a, tol: float = 1e-10, max_iter: int = 200_000):
    """Principal eigenpair of a symmetric nonnegative matrix.

    Starts from the uniform vector. A positive shift of a quarter of the
    maximal row sum separates the Perron root from ``-lambda`` when the
    support graph is bipartite.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    x = np.full(n, 1 / np.sqrt(n))
    shift = 0.25 * float(np.max(np.sum(np.abs(a), axis=1)))
    lam = 0.0
    for _ in range(max_iter):
        y = a @ x
        lam = float(x @ y)
        if np.linalg.norm(y - lam * x) <= tol:
            break
        y = y + shift * x
        x = y / np.linalg.norm(y)
    else:
        raise RuntimeError(f"power iteration did not converge to {tol:g}")
    return lam, x


@dataclass(frozen=True, eq=False)
class AdversaryMatrix:
    entries: np.ndarray
    norm: float
    vector: np.ndarray
    n: int = field(default=0)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@lru_cache(maxsize=16)
def ordered_search_adversary(n: int) -> AdversaryMatrix:
    """``Gamma[x, y] = 1 / Hd(alpha_x, alpha_y) = 1/|x - y|`` off the diagonal."""
    if not 1 <= n <= 12:
        raise ValueError(f"n must be in 1..12, got {n}")
    N = 2**n
    idx = np.arange(N)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        gamma = np.where(dist > 0, 1.0 / dist, 0.0)
    norm, vec = power_iteration(gamma)
    vec = np.abs(vec)
    gamma.setflags(write=False)
    vec.setflags(write=False)
    return AdversaryMatrix(gamma, norm, vec, n)


def restricted_adversary(gamma: AdversaryMatrix, i: int) -> np.ndarray:
    """Keep ``Gamma[x, y]`` where the alpha strings differ at position ``i``."""
    N = gamma.size
    if not 0 <= i < N:
        raise ValueError(f"position {i} out of range for N={N}")
    idx = np.arange(N)
    bit = idx <= i  # alpha_x^i = 1 iff x <= i
    mask = bit[:, None] != bit[None, :]
    return np.where(mask, gamma.entries, 0.0)


def _block_norm(gamma_entries, i, tol):
    block = gamma_entries[: i + 1, i + 1 :]
    if block.size == 0:
        return 0.0
    lam, _ = power_iteration(block.T @ block, tol=tol)
    return math.sqrt(max(lam, 0.0))


def restricted_norms(gamma: AdversaryMatrix, tol: float = 1e-10, method: str = "power", workers: int | None = None) -> np.ndarray:
    """``||Gamma^i||`` for every position ``i``.

    ``Gamma^i`` is supported on the corner ``{x <= i < y}`` and its
    transpose, so its norm is the largest singular value of that block.
    """
    N = gamma.size
    if method == "dense":
        return np.array([np.max(np.abs(np.linalg.eigvalsh(restricted_adversary(gamma, i)))) for i in range(N)])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        return np.array(list(pool.map(lambda i: _block_norm(gamma.entries, i, tol), range(N))))


@lru_cache(maxsize=16)
def max_restricted_norm(n: int) -> float:
    return float(np.max(restricted_norms(ordered_search_adversary(n))))


def spectral_lower_bound(n: int, delta: float, eps: float) -> float:
    """``(1 - eps) ||Gamma|| / (4 delta max_i ||Gamma^i||)`` with computed norms."""
    if not 0 <= eps < 1:
        raise ValueError(f"eps must be in [0, 1), got {eps}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    gamma = ordered_search_adversary(n)
    return (1 - eps) * gamma.norm / (4 * delta * max_restricted_norm(n))


def _key_index(key) -> int:
    return key.x if isinstance(key, SecretWord) else int(key)


def _stacked(trajectories: Mapping, N: int | None = None):
    keys = sorted(trajectories, key=_key_index)
    idx = [_key_index(k) for k in keys]
    if N is not None and idx != list(range(N)):
        raise GridMismatch(f"need one trajectory per input 0..{N - 1}, got {idx}")
    times = trajectories[keys[0]].times
    for k in keys[1:]:
        t = trajectories[k].times
        if t.shape != times.shape or np.max(np.abs(t - times)) > 1e-9 * max(1.0, times[-1]):
            raise GridMismatch(f"trajectory {k} is on a different time grid")
    return times, np.stack([trajectories[k].states for k in keys])


def w_trace(gamma: AdversaryMatrix, trajectories: Mapping, imag_tol: float = 1e-10):
    """``W(t_k)`` on the common stored grid; returns ``(times, W)``."""
    times, states = _stacked(trajectories, gamma.size)
    weights = gamma.entries * np.outer(gamma.vector, gamma.vector)
    w = np.einsum("xkd,xy,ykd->k", states.conj(), weights, states)
    if np.max(np.abs(w.imag)) > imag_tol:
        raise ArithmeticError(f"W(t) has imaginary part {np.max(np.abs(w.imag)):.3e}")
    return times, w.real


def distinguishability(gamma: AdversaryMatrix, trajectories: Mapping, t: float) -> float:
    """``W(t) = sum_xy Gamma_xy v_x v_y <phi_x(t)|phi_y(t)>``."""
    times, w = w_trace(gamma, trajectories)
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) > 1e-9 * max(1.0, times[-1]):
        raise GridMismatch(f"t={t} is not on the trajectory grid")
    return float(w[k])


def pairwise_overlap_epsilon(trajectories: Mapping, t: float | None = None) -> float:
    """``max_{x != y} |<phi_x(t)|phi_y(t)>|``; ``t=None`` means the final time."""
    times, states = _stacked(trajectories)
    k = len(times) - 1 if t is None else int(np.argmin(np.abs(times - t)))
    if t is not None and abs(times[k] - t) > 1e-9 * max(1.0, times[-1]):
        raise GridMismatch(f"t={t} is not on the trajectory grid")
    s = states[:, k, :]
    overlaps = np.abs(s.conj() @ s.T)
    np.fill_diagonal(overlaps, 0.0)
    return float(np.max(overlaps))


@dataclass
class RateBoundReport:
    times: np.ndarray
    w: np.ndarray
    rates: np.ndarray
    pointwise_bounds: np.ndarray
    max_rate: float
    max_gap: float
    max_gamma_i_norm: float
    bound: float
    tolerance: float

    @property
    def slack(self) -> float:
        """Smallest margin of the bound over the measured rate (uniform and pointwise)."""
        uniform = self.bound - self.max_rate
        pointwise = float(np.min(self.pointwise_bounds - self.rates)) if self.rates.size else math.inf
        return min(uniform, pointwise)

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tolerance


def w_rate_bound_check(
    gamma: AdversaryMatrix,
    trajectories: Mapping,
    gap_of_t: Callable[[float], float],
    tolerance: float = 1e-3,
    max_gamma_i_norm: float | None = None,
) -> RateBoundReport:
    """Compare finite-difference rates of ``W`` with ``4 gap max_i ||Gamma^i||``.

    The uniform bound uses the largest gap over the run; the pointwise bound
    uses the largest gap on each grid interval (endpoints and midpoint).
    """
    times, w = w_trace(gamma, trajectories)
    m = max_gamma_i_norm if max_gamma_i_norm is not None else float(np.max(restricted_norms(gamma)))
    rates = np.abs(np.diff(w)) / np.diff(times)
    gaps = np.array([gap_of_t(t) for t in times])
    mids = np.array([gap_of_t(t) for t in 0.5 * (times[1:] + times[:-1])])
    local = np.maximum(np.maximum(gaps[1:], gaps[:-1]), mids)
    max_gap = float(max(np.max(gaps), np.max(mids) if mids.size else 0.0))
    return RateBoundReport(
        times, w, rates, 4 * local * m,
        float(np.max(rates)) if rates.size else 0.0,
        max_gap, m, 4 * max_gap * m, tolerance,
    )


@dataclass
class LocalConditionReport:
    n: int
    eps: float
    lhs: float
    rhs: float
    rhs_change_of_variables: float | None
    critical_c: float
    critical_c_literal: float | None

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)

    @property
    def change_of_variables_holds(self) -> bool | None:
        if self.rhs_change_of_variables is None:
            return None
        return self.lhs < self.rhs_change_of_variables


def local_condition_check(
    n: int,
    eps: float,
    schedule: Schedule,
    gap_of_r: Callable[[float], float],
    path_length: float | None = None,
    c: float | None = None,
    min_points: int = 2048,
) -> LocalConditionReport:
    """Both sides of ``(1 - eps) n <= 4 pi int_0^T gap(r(t)) dt``.

    The integral runs on the schedule's own grid, refined to at least
    ``min_points`` samples, with Simpson's rule. For monotone schedules
    with a speed constant ``c`` and a path length, the change-of-variables
    right side ``4 pi L / c`` is reported too.
    """
    t = np.union1d(schedule.times, np.linspace(0.0, schedule.T, min_points + 1))
    mid = 0.5 * (t[1:] + t[:-1])
    grid = np.sort(np.concatenate([t, mid]))
    values = np.array([gap_of_r(schedule(s)) for s in grid])
    integral = float(simpson(values, x=grid))
    lhs = (1 - eps) * n
    rhs = 4 * math.pi * integral
    rhs15 = None
    if c is not None and path_length is not None and schedule.monotone:
        rhs15 = 4 * math.pi * path_length / c
    literal = 4 * math.pi * path_length / (n * (1 - eps)) if path_length is not None and eps < 1 else None
    return LocalConditionReport(n, eps, lhs, rhs, rhs15, critical_speed_constant(min(eps, 1 - 1e-15)), literal)


def critical_speed_constant(eps: float) -> float:
    """``2 pi^2 / (1 - eps)``: local-schedule speed constants at or above it cannot succeed."""
    if not 0 <= eps < 1:
        raise ValueError(f"eps must be in [0, 1), got {eps}")
    return 2 * math.pi**2 / (1 - eps)


def adversary_report(
    n: int,
    delta: float,
    trajectories: Mapping | None = None,
    gap_of_t: Callable[[float], float] | None = None,
    eps: float | None = None,
) -> dict:
    """JSON-ready summary: norms, spectral bound and (optionally) the W trace."""
    gamma = ordered_search_adversary(n)
    m = max_restricted_norm(n)
    out = {"n": n, "gamma_norm": gamma.norm, "max_gamma_i_norm": m}
    trace, slack = [], None
    if trajectories is not None:
        if eps is None:
            eps = pairwise_overlap_epsilon(trajectories)
        gap = gap_of_t if gap_of_t is not None else (lambda t: delta)
        rep = w_rate_bound_check(gamma, trajectories, gap, max_gamma_i_norm=m)
        trace = [[float(t), float(w)] for t, w in zip(rep.times, rep.w)]
        slack = rep.slack
    out["eps"] = 0.0 if eps is None else float(eps)
    out["spectral_lower_bound"] = spectral_lower_bound(n, delta, min(out["eps"], 1 - 1e-15))
    out["w_trace"] = trace
    out["rate_bound_slack"] = slack
    return out


def write_adversary_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
