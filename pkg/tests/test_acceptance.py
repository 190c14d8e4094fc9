"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (also repeated in the pytest terminal
summary). Run directly with ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

import eigenpath.evolution as evolution
from helpers import ACCEPTANCE_LINES, bell_circuit, clock_path, mixed_circuit
from eigenpath.adversary import (
    critical_speed_constant,
    local_condition_check,
    max_restricted_norm,
    ordered_search_adversary,
    pairwise_overlap_epsilon,
    spectral_lower_bound,
    w_rate_bound_check,
)
from eigenpath.analysis import ResolutionError, local_gap, min_gap, path_length, tracked_eigenstate
from eigenpath.evolution import (
    ensemble_evolve,
    linear_schedule,
    local_adiabatic_schedule,
    time_to_fidelity,
)
from eigenpath.numerics import basis_state, fidelity
from eigenpath.paths import (
    GapProfile,
    SecretWord,
    apply_gap_profile,
    build_grover_path,
    build_ordered_search_path,
    prefix_plus_state,
)
from eigenpath.queries import apply_Q, hamiltonian_query_equivalence, q_from_double_r

GROVER_NS = [4, 16, 64, 256]
GROVER_SCALING_NS = [4, 8, 16, 32, 64, 128, 256]
DT_LINEAR = 0.05
DT_LOCAL = 0.01
DT_ENSEMBLE = 0.01

# integrator runs recorded for the norm-drift criterion, and runtimes found
# by the scaling criterion (reused for the step-halving check)
DRIFTS = []
FOUND_T = {}


@pytest.fixture(scope="module", autouse=True)
def record_drift():
    original = evolution.integrate_schrodinger

    def recording(*args, **kwargs):
        traj = original(*args, **kwargs)
        DRIFTS.append(traj.norm_drift)
        return traj

    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(evolution, "integrate_schrodinger", recording)
        yield


def report(number, title, passed, detail):
    ACCEPTANCE_LINES.append((number, bool(passed), title, detail))
    print(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
    assert passed, detail


def grover_length(N):
    p = build_grover_path(N, 1)
    for res in (64, 128, 256, 512):
        try:
            return path_length(p, res).value
        except ResolutionError:
            continue
    raise ResolutionError("Grover path length did not converge")


def ordered_ensemble(n, schedule, dt=DT_ENSEMBLE, profile=None, delta=1.0):
    paths = {}
    for w in SecretWord.all(n):
        p = build_ordered_search_path(w, delta)
        paths[w.x] = apply_gap_profile(p, profile) if profile is not None else p
    return ensemble_evolve(paths, schedule, None, prefix_plus_state(SecretWord(n, 0), 0), dt)


def test_01_grover_gap():
    t0 = time.perf_counter()
    errors = {N: abs(min_gap(build_grover_path(N, N // 3)) - 1 / math.sqrt(N)) for N in GROVER_NS}
    elapsed = time.perf_counter() - t0
    worst = max(errors.values())
    report(1, "Grover minimum gap", worst <= 1e-6 and elapsed < 10,
           f"max |min_gap - 1/sqrt(N)| = {worst:.2e} (tol 1e-6), {elapsed:.1f}s (< 10s)")


def test_02_grover_length():
    t0 = time.perf_counter()
    lengths = [grover_length(N) for N in GROVER_NS]
    elapsed = time.perf_counter() - t0
    # L(N) = L_inf - a/sqrt(N) + O(1/N): Richardson estimates of L_inf from consecutive sizes
    h = [1 / math.sqrt(N) for N in GROVER_NS]
    limits = [(h[k] * lengths[k + 1] - h[k + 1] * lengths[k]) / (h[k] - h[k + 1]) for k in range(len(h) - 1)]
    converged = abs(limits[-1] - limits[-2]) <= 1e-2
    bounded = max(lengths) <= math.pi
    report(2, "Grover path length", bounded and converged and elapsed < 30,
           f"L = {', '.join(f'{v:.5f}' for v in lengths)} (<= pi); limit estimates "
           f"{', '.join(f'{v:.4f}' for v in limits)} (last two within 1e-2); {elapsed:.1f}s (< 30s)")


def test_03_grover_scaling():
    t0 = time.perf_counter()
    lin, loc = [], []
    for N in GROVER_SCALING_NS:
        p = build_grover_path(N, 1)
        T_lin = time_to_fidelity(p, "linear", 0.9, 1e4, dt=DT_LINEAR)
        T_loc = time_to_fidelity(p, "local", 0.9, 1e4, dt=DT_LOCAL, resolution=max(64, int(16 * math.sqrt(N))))
        FOUND_T[N] = (T_lin, T_loc)
        lin.append(T_lin)
        loc.append(T_loc)
    elapsed = time.perf_counter() - t0
    logN = np.log(GROVER_SCALING_NS)
    slope_lin = np.polyfit(logN, np.log(lin), 1)[0]
    slope_loc = np.polyfit(logN, np.log(loc), 1)[0]
    ok = abs(slope_loc - 0.5) <= 0.1 and abs(slope_lin - 1.0) <= 0.15 and elapsed < 600
    report(3, "Grover time-to-fidelity scaling", ok,
           f"slope local {slope_loc:.3f} (0.5 +- 0.1), linear {slope_lin:.3f} (1.0 +- 0.15); "
           f"{elapsed:.0f}s (< 600s)")


def test_04_ordered_search_gap():
    t0 = time.perf_counter()
    grid = np.linspace(0, 1, 512)
    worst = 0.0
    for n in range(2, 7):
        N = 2**n
        for x in sorted({0, N - 1, N // 2, (5 * N) // 7}):
            p = build_ordered_search_path(SecretWord(n, x), 1.0)
            worst = max(worst, max(abs(local_gap(p, r) - 1.0) for r in grid))
    elapsed = time.perf_counter() - t0
    report(4, "Ordered-search gap constancy", worst <= 1e-6 and elapsed < 60,
           f"max |gap - Delta| = {worst:.2e} on 512 points, n = 2..6 (tol 1e-6); {elapsed:.1f}s (< 60s)")


def test_05_path_length_proportionality():
    ns = range(2, 7)
    clock = [path_length(clock_path(mixed_circuit(n))).value / n for n in ns]
    ordered = [path_length(build_ordered_search_path(SecretWord(n, (3 * 2**n) // 5), 1.0)).value / n for n in ns]

    def spread(values):
        return (max(values) - min(values)) / np.mean(values)

    ok = (
        spread(clock) <= 1e-3 and spread(ordered) <= 1e-3
        and abs(np.mean(clock) / (math.pi / 2) - 1) <= 1e-3
        and abs(np.mean(ordered) / (math.pi / 4) - 1) <= 1e-3
    )
    report(5, "Path length proportional to n", ok,
           f"clock L/n = {np.mean(clock):.6f} (pi/2 = {math.pi / 2:.6f}, spread {spread(clock):.1e}); "
           f"ordered-search L/n = {np.mean(ordered):.6f} (pi/4 = {math.pi / 4:.6f}, spread {spread(ordered):.1e}); "
           "stated constants pi*n and pi*n/2 differ by a factor 2")


def test_06_adversary_norms():
    t0 = time.perf_counter()
    rows = [(n, ordered_search_adversary(n).norm, max_restricted_norm(n)) for n in range(1, 9)]
    elapsed = time.perf_counter() - t0
    ok = all(g >= n - 1e-12 and m <= math.pi for n, g, m in rows)
    ok &= abs(rows[0][1] - 1) <= 1e-9 and abs(rows[0][2] - 1) <= 1e-9
    report(6, "Adversary norms", ok and elapsed < 60,
           "; ".join(f"n={n}: {g:.4f}/{m:.4f}" for n, g, m in rows) + f" (|Gamma| >= n, max|Gamma^i| <= pi); {elapsed:.1f}s")


def test_07_w_endpoints_and_rate():
    t0 = time.perf_counter()
    worst_w0, worst_slack, runs = 0.0, math.inf, 0
    for n in (2, 3, 4):
        gamma = ordered_search_adversary(n)
        m = max_restricted_norm(n)
        for T in (1.0, 4.0, 16.0):
            trajs = ordered_ensemble(n, linear_schedule(T))
            rep = w_rate_bound_check(gamma, trajs, lambda t: 1.0, max_gamma_i_norm=m)
            worst_w0 = max(worst_w0, abs(rep.w[0] - gamma.norm))
            worst_slack = min(worst_slack, float(np.min(4 * 1.0 * m + 1e-3 - rep.rates)))
            runs += 1
    elapsed = time.perf_counter() - t0
    report(7, "W(t) endpoints and rate bound", worst_w0 <= 1e-8 and worst_slack >= 0 and elapsed < 300,
           f"{runs} linear-schedule ensembles: max |W(0) - |Gamma|| = {worst_w0:.1e} (tol 1e-8), "
           f"min slack of 4 Delta max|Gamma^i| + 1e-3 over |dW|/dt = {worst_slack:.3f}; {elapsed:.1f}s")


def test_08_spectral_bound_consistency():
    t0 = time.perf_counter()
    checked, violations, per_n = 0, [], {}
    for n in (2, 3, 4):
        ref = build_ordered_search_path(SecretWord(n, 0), 1.0)
        schedules = [linear_schedule(T) for T in (0.25, 0.5, 1, 2, 4, 8, 16, 32)]
        schedules += [local_adiabatic_schedule(ref, c) for c in (0.05, 0.1, 0.2, 0.5, 1, 2, 5)]
        reached = 0
        for s in schedules:
            eps = pairwise_overlap_epsilon(ordered_ensemble(n, s))
            if eps <= 0.2:
                reached += 1
                bound = spectral_lower_bound(n, 1.0, eps)
                if s.T < bound:
                    violations.append((n, s.kind, s.T, bound))
        per_n[n] = reached
        checked += reached
    elapsed = time.perf_counter() - t0
    ok = not violations and all(v > 0 for v in per_n.values()) and elapsed < 600
    report(8, "Spectral lower bound consistency", ok,
           f"{checked} schedules reached eps <= 0.2 (per n: {per_n}); violations {violations}; {elapsed:.1f}s")


def test_09_local_condition():
    t0 = time.perf_counter()
    runs, failed, eps_by_c = 0, [], {}
    for name, profile in (("q=1", GapProfile.constant(1.0)), ("q=1+r", GapProfile.linear_ramp())):
        for n in (2, 3):
            ref = apply_gap_profile(build_ordered_search_path(SecretWord(n, 0), 1.0), profile)
            for c in (0.1, 0.5, 2.0, 10.0):
                schedule = local_adiabatic_schedule(ref, c)
                eps = pairwise_overlap_epsilon(ordered_ensemble(n, schedule, profile=profile))
                rep = local_condition_check(n, eps, schedule, lambda r, q=profile: q(r))
                runs += 1
                eps_by_c[(name, n, c)] = eps
                if not rep.passed:
                    failed.append((name, n, c, rep.lhs, rep.rhs))
    crit = critical_speed_constant(0.0)
    elapsed = time.perf_counter() - t0
    ok = not failed and abs(crit - 2 * math.pi**2) <= 1e-9 and elapsed < 600
    report(9, "Local necessary condition", ok,
           f"{runs} runs, failures {failed}; critical constant at eps=0 = {crit:.9f} (2 pi^2); {elapsed:.1f}s")


def test_10_query_equivalences():
    t0 = time.perf_counter()
    mismatches, cases = 0, 0
    for n in range(1, 7):
        for x in SecretWord.all(n):
            for l in range(1, n + 1):
                for a in range(2**n):
                    cases += 1
                    mismatches += q_from_double_r(x, l, a) != apply_Q(x, l, a)
    worst, failures, checks = 1.0, 0, 0
    for n in range(1, 6):
        for x in SecretWord.all(n):
            for l in range(1, n + 1):
                rep = hamiltonian_query_equivalence(x, l)
                worst = min(worst, rep.worst_fidelity)
                failures += not rep.passed
                checks += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and failures == 0 and worst >= 1 - 1e-9 and elapsed < 120
    report(10, "Query equivalences", ok,
           f"double-R vs Q: {mismatches}/{cases} mismatches (n <= 6); Hamiltonian vs Q: {failures}/{checks} "
           f"failures, worst fidelity 1 - {1 - worst:.1e} (n <= 5); {elapsed:.1f}s")


def test_11_clock_traversal():
    t0 = time.perf_counter()
    circuit = bell_circuit()
    p = clock_path(circuit)
    traj = evolution.integrate_schrodinger(p, local_adiabatic_schedule(p, 0.05), None, p.seed, 0.01, keep=10**9)
    target = np.kron(circuit.apply(basis_state(0, 4)), basis_state(2, 3))
    fid = fidelity(traj.final_state, target)
    elapsed = time.perf_counter() - t0
    report(11, "Clock traversal of the Bell circuit", fid >= 0.99 and elapsed < 120,
           f"fidelity with (U2 U1 |00>)|2> at c = 0.05: {fid:.6f} (>= 0.99), T = {traj.T:.2f}; {elapsed:.1f}s")


def _halving(path, schedule, psi0, dt):
    a = evolution.integrate_schrodinger(path, schedule, None, psi0, dt, keep=10**9)
    b = evolution.integrate_schrodinger(path, schedule, None, psi0, dt / 2, keep=10**9)
    return float(np.linalg.norm(a.final_state - b.final_state))


def test_12_integrator_properties():
    # fall back to previously measured runtimes when run in isolation
    T16 = FOUND_T.get(16, (46.5, 12.5))
    T256 = FOUND_T.get(256, (752.0, 44.5))
    g16 = build_grover_path(16, 1)
    g256 = build_grover_path(256, 1)
    os3 = build_ordered_search_path(SecretWord(3, 5), 1.0)
    bell = clock_path(bell_circuit())
    diffs = {
        "grover N=16 linear": _halving(g16, linear_schedule(T16[0]), tracked_eigenstate(g16, 0).state, DT_LINEAR),
        "grover N=256 local": _halving(
            g256, local_adiabatic_schedule(g256, 1.0, 256).rescaled(T256[1]), tracked_eigenstate(g256, 0).state, DT_LOCAL
        ),
        "ordered-search n=3 local c=0.1": _halving(os3, local_adiabatic_schedule(os3, 0.1), prefix_plus_state(SecretWord(3, 0), 0), DT_ENSEMBLE),
        "ordered-search n=4 linear T=16": _halving(
            build_ordered_search_path(SecretWord(4, 9), 1.0), linear_schedule(16.0), prefix_plus_state(SecretWord(4, 0), 0), DT_ENSEMBLE
        ),
        "clock Bell c=0.05": _halving(bell, local_adiabatic_schedule(bell, 0.05), bell.seed, 0.01),
    }
    drift = max(DRIFTS)
    worst = max(diffs.values())
    report(12, "Integrator properties", drift <= 1e-9 and worst <= 1e-4,
           f"max norm drift over {len(DRIFTS)} runs = {drift:.1e} (<= 1e-9); dt-halving differences "
           + ", ".join(f"{k}: {v:.1e}" for k, v in diffs.items()) + " (<= 1e-4)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
