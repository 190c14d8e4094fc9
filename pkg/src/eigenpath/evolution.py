"""Schedules and schedule-driven Schrodinger integration along a path."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from scipy.integrate import cumulative_simpson

from .analysis import segment_profiles, tracked_eigenstate
from .numerics import DEFAULT_TOLERANCES, Tolerances, _propagate_unchecked, as_state, check_hermitian, fidelity, operator_norm
from .paths import HamiltonianPath

__all__ = [
    "Schedule",
    "DrivingTerm",
    "Trajectory",
    "ScheduleError",
    "IntegratorAccuracyError",
    "TargetUnreachable",
    "EnsembleError",
    "linear_schedule",
    "frozen_schedule",
    "local_adiabatic_schedule",
    "integrate_schrodinger",
    "final_fidelity",
    "time_to_fidelity",
    "ensemble_evolve",
    "worker_count",
]


class ScheduleError(ValueError):
    pass


class IntegratorAccuracyError(RuntimeError):
    pass


class TargetUnreachable(RuntimeError):
    def __init__(self, target: float, t_max: float, best: float):
        super().__init__(f"fidelity {target} not reached for T <= {t_max:g} (best {best:.6g})")
        self.target, self.t_max, self.best = target, t_max, best


class EnsembleError(RuntimeError):
    def __init__(self, failures: Mapping):
        detail = "; ".join(f"{k}: {v}" for k, v in failures.items())
        super().__init__(f"{len(failures)} ensemble member(s) failed: {detail}")
        self.failures = dict(failures)


@dataclass(frozen=True, eq=False)
class Schedule:
    """Piecewise-linear table ``t -> r(t)`` on ``[0, T]``."""

    times: np.ndarray
    rs: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        r = np.asarray(self.rs, dtype=float)
        if t.ndim != 1 or t.shape != r.shape or t.size < 2:
            raise ScheduleError("schedule table needs matching 1-d arrays with at least two samples")
        if t[0] != 0.0:
            raise ScheduleError(f"schedule must start at t=0, got {t[0]}")
        if np.any(np.diff(t) <= 0):
            raise ScheduleError("schedule times must be strictly increasing")
        if np.any(r < -1e-12) or np.any(r > 1 + 1e-12):
            raise ScheduleError("schedule values must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "rs", np.clip(r, 0.0, 1.0))

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.rs))

    def rescaled(self, T: float) -> "Schedule":
        return Schedule(self.times * (T / self.T), self.rs, self.kind)

    @property
    def prepares_state(self) -> bool:
        return abs(self.rs[0]) <= 1e-9 and abs(self.rs[-1] - 1) <= 1e-9

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.rs) >= 0))


@dataclass(frozen=True)
class DrivingTerm:
    """Input-independent extra Hamiltonian ``t -> H_D(t)``; ``None`` means zero."""

    h_d: Callable[[float], np.ndarray] | None = None

    def __call__(self, t: float):
        return None if self.h_d is None else self.h_d(t)

    @property
    def is_zero(self) -> bool:
        return self.h_d is None


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    rs: np.ndarray
    states: np.ndarray
    label: object = None
    norm_drift: float = 0.0

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, fh) -> None:
        dim = self.states.shape[1]
        writer = csv.writer(fh, lineterminator="\n")
        header = ["t", "r"]
        for k in range(dim):
            header += [f"re_amp_{k}", f"im_amp_{k}"]
        writer.writerow(header)
        for t, r, psi in zip(self.times, self.rs, self.states):
            row = [f"{t:.12g}", f"{r:.12g}"]
            for a in psi:
                row += [f"{a.real:.12g}", f"{a.imag:.12g}"]
            writer.writerow(row)

    def summary(self, path: HamiltonianPath | None = None) -> dict:
        out = {"T": self.T, "norm_drift": self.norm_drift}
        out["final_fidelity"] = final_fidelity(self, path) if path is not None else None
        return out

    def write(self, csv_path, path: HamiltonianPath | None = None) -> None:
        """Write the CSV table and a ``.json`` summary next to it."""
        with open(csv_path, "w", newline="") as fh:
            self.to_csv(fh)
        root, _ = os.path.splitext(str(csv_path))
        with open(root + ".json", "w") as fh:
            json.dump(self.summary(path), fh, indent=2)


def linear_schedule(T: float) -> Schedule:
    if not T > 0:
        raise ScheduleError(f"T must be positive, got {T}")
    return Schedule(np.array([0.0, T]), np.array([0.0, 1.0]), "linear")


def frozen_schedule(r: float, T: float) -> Schedule:
    """Hold the path at a fixed ``r`` for a time ``T``."""
    return Schedule(np.array([0.0, T]), np.array([r, r]), "custom")


@lru_cache(maxsize=64)
def _unit_local_schedule(path: HamiltonianPath, resolution: int):
    nodes = np.linspace(0.0, 1.0, resolution + 1)
    velocities, gaps = segment_profiles(path, nodes)
    n = path.n_segments
    rs, ts = [0.0], [0.0]
    for l, (v, g) in enumerate(zip(velocities, gaps), start=1):
        if np.max(v) < 1e-10:
            raise ScheduleError(f"eigenpath velocity vanishes on segment {l}")
        # dt/dr = |d psi/dr| / gap(r), with dr = ds / n
        t_seg = cumulative_simpson(v / g, x=nodes) / n
        rs.extend(path.to_r(l, s) for s in nodes[1:])
        ts.extend(ts[-1] + t_seg)
    ts = np.array(ts)
    if np.any(np.diff(ts) <= 0):
        raise ScheduleError("local schedule is not strictly increasing; eigenpath velocity vanishes somewhere")
    return ts, np.array(rs)


def local_adiabatic_schedule(path: HamiltonianPath, c: float, resolution: int = 64) -> Schedule:
    """Schedule with speed ``dr/dt = c * gap(r) / |d psi/dr|``.

    ``T = int_0^1 |d psi/dr| / (c gap(r)) dr``, accumulated per segment with
    a cumulative Simpson rule on ``resolution`` intervals.
    """
    if not c > 0:
        raise ScheduleError(f"speed constant c must be positive, got {c}")
    ts, rs = _unit_local_schedule(path, resolution)
    return Schedule(ts / c, rs, "local")


def _hamiltonian_at(path, schedule, drive, t):
    h = path(schedule(t))
    d = drive(t) if drive is not None else None
    return h if d is None else h + d


def integrate_schrodinger(
    path: HamiltonianPath,
    schedule: Schedule,
    drive: DrivingTerm | None,
    psi0,
    dt: float,
    keep: int = 1,
    backward: bool = False,
    label=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Trajectory:
    """Midpoint-exponential integration of ``i d/dt psi = (H(r(t)) + H_D(t)) psi``.

    Each step applies the exact exponential of the Hamiltonian at the step
    midpoint. The grid is ``K = ceil(T/dt)`` equal steps; states are stored
    every ``keep`` steps and at both ends. With ``backward=True`` the steps
    are undone in reverse order, starting from ``psi0`` at ``t = T``.
    """
    psi = as_state(psi0, tol)
    if keep < 1:
        raise ValueError("keep must be >= 1")
    T = schedule.T
    K = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / K
    h0 = _hamiltonian_at(path, schedule, drive, 0.5 * h)
    check_hermitian(h0, tol)
    scale = operator_norm(h0)
    if h * scale > 0.1 * (1 + 1e-9):
        raise ValueError(f"dt={h:.3g} too large for |H|={scale:.3g}; need dt <= 0.1/|H|")
    if psi.shape[0] != h0.shape[0]:
        raise ValueError(f"initial state has dim {psi.shape[0]}, path has dim {h0.shape[0]}")

    steps = range(K - 1, -1, -1) if backward else range(K)
    times, rs, states = [0.0], [schedule(T if backward else 0.0)], [psi]
    for count, k in enumerate(steps, start=1):
        t_mid = (k + 0.5) * h
        ham = _hamiltonian_at(path, schedule, drive, t_mid)
        if backward:
            psi = _propagate_unchecked(-ham, h, psi, tol)
        else:
            psi = _propagate_unchecked(ham, h, psi, tol)
        if count % keep == 0 or count == K:
            if drive is not None and not drive.is_zero:
                check_hermitian(ham, tol)
            times.append(count * h)
            rs.append(schedule(T - count * h if backward else count * h))
            states.append(psi)
    states = np.array(states)
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    if drift > tol.norm_drift:
        raise IntegratorAccuracyError(f"norm drift {drift:.3e} exceeds {tol.norm_drift:.1e}; use a smaller dt")
    return Trajectory(np.array(times), np.array(rs), states, label, drift)


def final_fidelity(traj: Trajectory, path: HamiltonianPath) -> float:
    return fidelity(traj.final_state, tracked_eigenstate(path, 1.0).state)


def _family_schedules(path, family, resolution):
    """Return ``T -> Schedule`` for a schedule family name."""
    if family == "linear":
        return linear_schedule
    if family == "local" or (isinstance(family, tuple) and family[0] == "local"):
        unit = local_adiabatic_schedule(path, 1.0, resolution)
        return unit.rescaled
    raise ValueError(f"unknown schedule family {family!r}")


def time_to_fidelity(
    path: HamiltonianPath,
    family: str,
    target: float,
    t_max: float,
    dt: float = 0.01,
    t_min: float = 1.0,
    rel_tol: float = 0.02,
    max_iter: int = 20,
    resolution: int = 64,
    psi0=None,
) -> float:
    """Smallest runtime in a schedule family reaching ``final_fidelity >= target``.

    The runtime is doubled from ``t_min`` until the target is met and then
    bisected to a relative bracket of ``rel_tol``. For the local family,
    bisecting on ``T`` is bisecting on ``1/c``.
    """
    if not target < 1:
        raise ValueError(f"target must be < 1, got {target}")
    make = _family_schedules(path, family, resolution)
    start = tracked_eigenstate(path, 0.0).state if psi0 is None else psi0
    goal = tracked_eigenstate(path, 1.0).state

    def fid(T):
        traj = integrate_schrodinger(path, make(T), None, start, dt, keep=10**9)
        return fidelity(traj.final_state, goal)

    if target <= 0:
        return float(t_min)
    T = t_min
    best = fid(T)
    if best >= target:
        return float(T)
    while True:
        lo, T = T, 2 * T
        if T > t_max:
            raise TargetUnreachable(target, t_max, best)
        f = fid(T)
        best = max(best, f)
        if f >= target:
            break
    hi = T
    for _ in range(max_iter):
        if (hi - lo) / hi <= rel_tol:
            break
        mid = 0.5 * (lo + hi)
        if fid(mid) >= target:
            hi = mid
        else:
            lo = mid
    return float(hi)


def worker_count(default: int | None = None) -> int:
    env = os.environ.get("EIGENPATH_THREADS")
    if env:
        return max(1, int(env))
    return default or os.cpu_count() or 1


def ensemble_evolve(
    paths: Mapping,
    schedule: Schedule,
    drive: DrivingTerm | None,
    psi0,
    dt: float,
    keep: int = 1,
    workers: int | None = None,
) -> dict:
    """Evolve every path with the same schedule, drive and initial state.

    Returns ``{key: Trajectory}`` in the order of ``paths``; all trajectories
    share one time grid.
    """
    keys = list(paths)
    dims = {paths[k].dim for k in keys}
    if len(dims) != 1:
        raise ValueError(f"ensemble paths have different dimensions: {sorted(dims)}")
    psi0 = np.array(psi0, dtype=np.complex128)

    def run(key):
        return integrate_schrodinger(paths[key], schedule, drive, psi0, dt, keep=keep, label=key)

    results, failures = {}, {}
    with ThreadPoolExecutor(max_workers=min(worker_count(workers), len(keys))) as pool:
        futures = {k: pool.submit(run, k) for k in keys}
        for k in keys:
            try:
                results[k] = futures[k].result()
            except Exception as exc:  # reported per input below
                failures[k] = exc
    if failures:
        raise EnsembleError(failures)
    return results
