"""Tracked eigenstates, local gaps, eigenpath velocity and path length."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy.integrate import simpson

from .numerics import operator_norm
from .paths import TRACK_BOTTOM, TRACK_CONTINUATION, TRACK_TOP, HamiltonianPath

__all__ = [
    "DegeneracyError",
    "ResolutionError",
    "EigenpathSample",
    "PathLength",
    "tracked_eigenstate",
    "sample_eigenpath",
    "local_gap",
    "path_velocity",
    "path_length",
    "path_length_upper_bound",
    "min_gap",
    "segment_profiles",
]

FD_STEP = 1e-5  # in units of the local segment parameter s, i.e. 1e-5/n in r
RICHARDSON_TOL = 1e-4
_SUBSET_MIN_DIM = 32


class DegeneracyError(RuntimeError):
    def __init__(self, r: float, detail: str = ""):
        super().__init__(f"ambiguous eigenstate continuation at r={r:.12g}" + (f": {detail}" if detail else ""))
        self.r = r


class ResolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenpathSample:
    r: float
    state: np.ndarray
    eigenvalue: float
    gap: float
    velocity: float = math.nan
    segment: int = 1


class PathLength(NamedTuple):
    value: float
    error: float


def _fix_gauge(vec, reference=None):
    if reference is not None:
        ov = np.vdot(reference, vec)
        if abs(ov) > 0:
            return vec * (abs(ov) / ov)
    total = vec.sum()
    if abs(total) > 1e-6:
        return vec * (abs(total) / total)
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def _extremal(h, top: bool):
    d = h.shape[0]
    if d >= _SUBSET_MIN_DIM:
        idx = [d - 2, d - 1] if top else [0, 1]
        w, v = sla.eigh(h, subset_by_index=idx, check_finite=False)
    else:
        w, v = np.linalg.eigh(h)
    if top:
        return w[-1], v[:, -1], w[-1] - w[-2]
    return w[0], v[:, 0], w[1] - w[0]


def _continuation(path, l, s, previous):
    h = path.at(l, s)
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(w))))
    # cluster (numerically) degenerate eigenvalues
    edges = np.flatnonzero(np.diff(w) > 1e-8 * scale) + 1
    clusters = np.split(np.arange(w.size), edges)
    coeffs = v.conj().T @ previous
    weights = np.array([np.sum(np.abs(coeffs[c]) ** 2) for c in clusters])
    order = np.argsort(weights)[::-1]
    best = clusters[order[0]]
    if len(order) > 1 and weights[order[0]] - weights[order[1]] < 1e-6:
        raise DegeneracyError(path.to_r(l, s), f"cluster weights {weights[order[0]]:.3g}, {weights[order[1]]:.3g}")
    state = v[:, best] @ coeffs[best]
    state /= np.linalg.norm(state)
    eigenvalue = float(np.mean(w[best]))
    basis = path.info.get("gammas")
    if basis is not None and path.kind == "clock":
        # gap inside the invariant two-dimensional subspace of this segment
        b = np.column_stack([basis[l - 1], basis[l]])
        m = b.conj().T @ h @ b
        ev = np.linalg.eigvalsh(m)
        gap = float(np.max(np.abs(ev - eigenvalue)))
    else:
        others = np.concatenate([w[c] for k, c in enumerate(clusters) if k != order[0]]) if len(clusters) > 1 else np.array([np.inf])
        gap = float(np.min(np.abs(others - eigenvalue)))
    return state, eigenvalue, gap


def _state_at(path, l, s, previous=None):
    """(state, eigenvalue, gap) for segment ``l`` at local parameter ``s``."""
    if path.track == TRACK_CONTINUATION:
        if previous is None:
            previous = _march(path, l, s)
        return _continuation(path, l, s, previous)
    if path.track not in (TRACK_TOP, TRACK_BOTTOM):
        raise ValueError(f"unknown track {path.track!r}")
    lam, vec, gap = _extremal(path.at(l, s), path.track == TRACK_TOP)
    vec = _fix_gauge(vec.astype(np.complex128), previous)
    return vec, float(lam), float(gap)


def _march(path, l_target, s_target, max_step=1 / 16):
    """Continue the seed state from r=0 to (l_target, s_target)."""
    state = np.asarray(path.seed, dtype=np.complex128)
    state, _, _ = _continuation(path, 1, 0.0, state)
    for l in range(1, l_target + 1):
        s_end = s_target if l == l_target else 1.0
        steps = max(1, int(np.ceil(s_end / max_step)))
        for s in np.linspace(0.0, s_end, steps + 1)[1:]:
            state, _, _ = _continuation(path, l, s, state)
    return state


def _previous_state(previous):
    if previous is None:
        return None
    if isinstance(previous, EigenpathSample):
        return previous.state
    return np.asarray(previous, dtype=np.complex128)


def tracked_eigenstate(path: HamiltonianPath, r: float, previous=None, segment: int | None = None) -> EigenpathSample:
    """Tracked eigenstate of ``path`` at ``r``.

    ``previous`` (a sample or a raw state) fixes the gauge and, for
    continuation tracks, selects the eigenvector of maximal overlap inside a
    degenerate eigenspace. Without it, continuation tracks are marched from
    the seed state.
    """
    if segment is None:
        l, s = path.locate(r)
    else:
        l, s = segment, r * path.n_segments - segment + 1
    state, lam, gap = _state_at(path, l, s, _previous_state(previous))
    return EigenpathSample(float(r), state, lam, gap, segment=l)


def sample_eigenpath(path: HamiltonianPath, resolution: int = 64, velocity: bool = False):
    """Tracked samples on a uniform grid of ``resolution`` intervals per segment.

    Breakpoints appear once per adjacent segment so that each segment's
    samples are self-contained. Consecutive samples share a gauge.
    """
    samples = []
    prev = None
    for l in range(1, path.n_segments + 1):
        for s in np.linspace(0.0, 1.0, resolution + 1):
            state, lam, gap = _state_at(path, l, s, prev)
            v = _velocity(path, l, s, state)[0] if velocity else math.nan
            samples.append(EigenpathSample(path.to_r(l, s), state, lam, gap, v, l))
            prev = state
    return samples


def local_gap(path: HamiltonianPath, r: float, previous=None) -> float:
    return tracked_eigenstate(path, r, previous).gap


def _aligned(vec, ref):
    ov = np.vdot(ref, vec)
    return vec * (abs(ov) / ov) if abs(ov) > 0 else vec


def _fd_norm(path, l, s, h, center):
    """|d psi/ds| by second-order finite differences; returns (value, one_sided)."""
    anchor = center
    if s - h >= 0 and s + h <= 1:
        plus, _, _ = _state_at(path, l, s + h, anchor)
        minus, _, _ = _state_at(path, l, s - h, anchor)
        return np.linalg.norm(plus - _aligned(minus, plus)) / (2 * h), False
    direction = 1.0 if s + 2 * h <= 1 else -1.0
    if center is None:
        center, _, _ = _state_at(path, l, s)
    p1, _, _ = _state_at(path, l, s + direction * h, center)
    p2, _, _ = _state_at(path, l, s + 2 * direction * h, center)
    p1, p2 = _aligned(p1, center), _aligned(p2, center)
    deriv = (-3 * center + 4 * p1 - p2) / (2 * h)
    return np.linalg.norm(deriv), True


def _velocity(path, l, s, center=None, richardson=True):
    if center is None and path.track == TRACK_CONTINUATION:
        center, _, _ = _state_at(path, l, s)
    n = path.n_segments
    v1, one_sided = _fd_norm(path, l, s, FD_STEP, center)
    if not richardson:
        return n * v1, one_sided
    v2, _ = _fd_norm(path, l, s, 2 * FD_STEP, center)
    if abs(v1 - v2) > RICHARDSON_TOL * max(v1, 1e-8):
        warnings.warn(f"velocity finite differences disagree at r={path.to_r(l, s):.6g}: {v1:.6g} vs {v2:.6g}", RuntimeWarning)
    return n * (4 * v1 - v2) / 3, one_sided


def path_velocity(path: HamiltonianPath, r: float, segment: int | None = None, with_flag: bool = False):
    """Norm of the gauge-fixed eigenpath derivative ``|d psi / dr|``.

    At a breakpoint (or an end of [0, 1]) the derivative is taken one-sided
    inside the chosen segment; ``with_flag=True`` returns ``(value, one_sided)``.
    """
    if segment is None:
        l, s = path.locate(r)
    else:
        l, s = segment, r * path.n_segments - segment + 1
    value, one_sided = _velocity(path, l, s)
    return (float(value), one_sided) if with_flag else float(value)


def segment_profiles(path: HamiltonianPath, nodes):
    """Velocities and gaps at local parameters ``nodes`` on every segment.

    Returns two lists (one array per segment). Continuation tracks are
    followed sequentially through the nodes.
    """
    velocities, gaps = [], []
    prev = None
    for l in range(1, path.n_segments + 1):
        vrow, grow = [], []
        for s in nodes:
            center, _, gap = _state_at(path, l, s, prev)
            if path.track == TRACK_CONTINUATION:
                prev = center
            vrow.append(_velocity(path, l, s, center)[0])
            grow.append(gap)
        velocities.append(np.array(vrow))
        gaps.append(np.array(grow))
    return velocities, gaps


def path_length(path: HamiltonianPath, resolution: int = 64, rel_tol: float = 1e-3) -> PathLength:
    """``L = int_0^1 |d psi/dr| dr`` by composite Simpson per segment.

    The error estimate is the difference between the Simpson sums on
    ``resolution`` and ``2*resolution`` intervals per segment.
    """
    if resolution < 64 or resolution % 2:
        raise ValueError(f"resolution must be an even number >= 64, got {resolution}")
    fine = np.linspace(0.0, 1.0, 2 * resolution + 1)
    values, _ = segment_profiles(path, fine)
    ds = 1.0 / path.n_segments
    total_fine = sum(simpson(v, x=fine) for v in values) * ds
    total_coarse = sum(simpson(v[::2], x=fine[::2]) for v in values) * ds
    error = abs(total_fine - total_coarse)
    if error > rel_tol * abs(total_fine):
        raise ResolutionError(f"path length not resolved: L={total_fine:.6g}, error estimate {error:.3g}; raise resolution")
    return PathLength(float(total_fine), float(error))


def _golden_min(f, a, b, tol=1e-10, max_iter=200):
    invphi = (np.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def _refined_extremum(path, per_segment, value_at, maximize):
    """Grid search over all segments, then golden-section refinement."""
    sign = -1.0 if maximize else 1.0
    nodes = np.linspace(0.0, 1.0, per_segment + 1)
    best = None
    for l in range(1, path.n_segments + 1):
        vals = [value_at(l, s) for s in nodes]
        k = int(np.argmin(sign * np.array(vals)))
        if best is None or sign * vals[k] < sign * best[2]:
            best = (l, k, vals[k])
    l, k, val = best
    a, b = nodes[max(k - 1, 0)], nodes[min(k + 1, per_segment)]
    s_opt, f_opt = _golden_min(lambda s: sign * value_at(l, s), a, b)
    if sign * f_opt < sign * val:
        return path.to_r(l, s_opt), f_opt * sign
    return path.to_r(l, nodes[k]), val


def min_gap(path: HamiltonianPath, resolution: int = 128, with_location: bool = False):
    """Minimum tracked gap over [0, 1]: grid search plus golden-section refinement."""
    if resolution < 128:
        raise ValueError(f"resolution must be >= 128, got {resolution}")
    per_segment = max(8, int(np.ceil(resolution / path.n_segments)))

    if path.track == TRACK_CONTINUATION:
        def gap_at(l, s):
            return _state_at(path, l, s)[2]
    else:
        def gap_at(l, s):
            return _extremal(path.at(l, s), path.track == TRACK_TOP)[2]

    r, g = _refined_extremum(path, per_segment, gap_at, maximize=False)
    return (float(g), float(r)) if with_location else float(g)


def _dh_norm(path, l, s, h=1e-6):
    n = path.n_segments
    if s - h >= 0 and s + h <= 1:
        d = (path.at(l, s + h) - path.at(l, s - h)) / (2 * h)
    elif s + 2 * h <= 1:
        d = (-3 * path.at(l, s) + 4 * path.at(l, s + h) - path.at(l, s + 2 * h)) / (2 * h)
    else:
        d = (3 * path.at(l, s) - 4 * path.at(l, s - h) + path.at(l, s - 2 * h)) / (2 * h)
    return n * operator_norm(d)


def path_length_upper_bound(path: HamiltonianPath, resolution: int = 256, gap_resolution: int = 128) -> float:
    """``max_r |dH/dr| / min_r gap``, derivatives taken within segments."""
    per_segment = max(8, int(np.ceil(resolution / path.n_segments)))
    _, hdot = _refined_extremum(path, per_segment, lambda l, s: _dh_norm(path, l, s), maximize=True)
    return float(hdot / min_gap(path, gap_resolution))
