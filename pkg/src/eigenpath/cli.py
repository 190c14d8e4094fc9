"""Command-line experiment driver.

Subcommands write one table (``--format csv`` or ``json``) to ``--out``;
CSV runs also write ``<out>.summary.json``. The exit status is 1 when a
theorem check (rate bound, local condition, runtime >= spectral bound) fails.

Options can also come from ``--config FILE`` holding ``key=value`` lines
with the long option names; options on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adversary import (
    local_condition_check,
    max_restricted_norm,
    ordered_search_adversary,
    pairwise_overlap_epsilon,
    spectral_lower_bound,
    w_rate_bound_check,
)
from .analysis import ResolutionError, min_gap, path_length
from .circuits import CircuitParseError, load_circuit
from .evolution import (
    TargetUnreachable,
    ensemble_evolve,
    integrate_schrodinger,
    linear_schedule,
    local_adiabatic_schedule,
    time_to_fidelity,
)
from .numerics import basis_state, fidelity
from .paths import (
    GapProfile,
    SecretWord,
    apply_gap_profile,
    build_clock_path,
    build_grover_path,
    build_ordered_search_path,
    prefix_plus_state,
)

GROVER_COLUMNS = ["N", "min_gap", "path_length", "path_length_error", "t_linear", "t_local", "status"]
BOUND_COLUMNS = [
    "n", "gamma_norm", "max_gamma_i_norm", "schedule", "param", "T", "eps_measured",
    "w0", "wT", "max_rate", "rate_bound", "rate_slack", "t_bound", "t_ok",
]
CLOCK_COLUMNS = ["c", "T", "path_length", "L_over_n", "fidelity_tracked", "fidelity_circuit"]
LOCAL_COLUMNS = [
    "n", "profile", "c", "T", "eps_measured", "lhs", "rhs", "rhs_change_of_variables",
    "path_length", "critical_c", "critical_c_literal", "holds",
]


@dataclass
class ExperimentConfig:
    command: str
    n: list = field(default_factory=list)
    n_max: int | None = None
    delta: float = 1.0
    dt: float | None = None
    c: list = field(default_factory=list)
    T: list = field(default_factory=list)
    schedule: str = "linear"
    eps: float | None = None
    profile: str = "const"
    seed: int = 0
    circuit: str | None = None
    t_max: float = 1e4
    resolution: int = 64
    out: str | None = None
    format: str = "csv"

    def validate(self):
        if self.delta <= 0:
            raise ValueError("--delta must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("--dt must be positive")
        if any(c <= 0 for c in self.c):
            raise ValueError("--c values must be positive")
        if any(T <= 0 for T in self.T):
            raise ValueError("--T values must be positive")
        if self.eps is not None and not 0 <= self.eps < 1:
            raise ValueError("--eps must be in [0, 1)")
        if self.t_max <= 0:
            raise ValueError("--t-max must be positive")
        if self.resolution < 64 or self.resolution % 2:
            raise ValueError("--resolution must be an even number >= 64")
        limits = {"grover-scaling": (1, 8), "ordered-search-bound": (1, 6), "local-condition": (1, 6)}
        if self.command in limits:
            lo, hi = limits[self.command]
            if not self.n or any(not lo <= n <= hi for n in self.n):
                raise ValueError(f"--n values must lie in {lo}..{hi} for {self.command}")
        if self.command == "clock-traversal" and not self.circuit:
            raise ValueError("clock-traversal needs --circuit FILE")
        return self


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else f"{float(value):.12g}"
    return str(value)


def _round(obj):
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) else float(f"{v:.12g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def write_report(columns, rows, summary, config: ExperimentConfig, stream=None) -> str:
    """Serialize rows (and summary) according to ``config.format``; return the text."""
    if config.format == "json":
        text = json.dumps(_round({"columns": columns, "rows": rows, "summary": summary}), indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c, "")) for c in columns])
        text = buf.getvalue()
    if config.out:
        Path(config.out).write_text(text)
        if config.format == "csv":
            Path(config.out + ".summary.json").write_text(json.dumps(_round(summary), indent=2) + "\n")
    else:
        (stream or sys.stdout).write(text)
    return text


def loglog_slope(xs, ys) -> float:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    ok = np.isfinite(ys) & (ys > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)[0])


def resolved_path_length(path, start: int = 64, max_resolution: int = 2048):
    res = start
    while True:
        try:
            return path_length(path, res)
        except ResolutionError:
            if res >= max_resolution:
                raise
            res *= 2


def run_grover_scaling(config: ExperimentConfig):
    dt = config.dt or 0.05
    target = 1 - (0.1 if config.eps is None else config.eps)
    rng = np.random.default_rng(config.seed)
    rows = []
    for n in sorted(config.n):
        N = 2**n
        path = build_grover_path(N, int(rng.integers(N)))
        row = {"N": N, "status": "ok"}
        row["min_gap"] = min_gap(path, 128)
        length = resolved_path_length(path)
        row["path_length"], row["path_length_error"] = length.value, length.error
        schedule_resolution = max(config.resolution, int(16 * math.sqrt(N)))
        for family in ("linear", "local"):
            try:
                row[f"t_{family}"] = time_to_fidelity(
                    path, family, target, config.t_max, dt=dt, resolution=schedule_resolution
                )
            except (TargetUnreachable, RuntimeError) as exc:
                row[f"t_{family}"] = math.nan
                row["status"] = f"{family}: {exc}"
        rows.append(row)
    Ns = [r["N"] for r in rows]
    lengths = [r["path_length"] for r in rows]
    summary = {
        "target_fidelity": target,
        "dt": dt,
        "slope_linear": loglog_slope(Ns, [r["t_linear"] for r in rows]),
        "slope_local": loglog_slope(Ns, [r["t_local"] for r in rows]),
        "max_path_length": max(lengths),
        "path_length_limit_estimates": extrapolated_limits(Ns, lengths),
    }
    return GROVER_COLUMNS, rows, summary, True


def extrapolated_limits(Ns, lengths):
    """Richardson estimates of ``lim L(N)`` assuming ``L(N) = L_inf - a/sqrt(N) + ...``."""
    out = []
    for (n1, l1), (n2, l2) in zip(zip(Ns, lengths), zip(Ns[1:], lengths[1:])):
        h1, h2 = 1 / math.sqrt(n1), 1 / math.sqrt(n2)
        out.append((h1 * l2 - h2 * l1) / (h1 - h2))
    return out


def ordered_search_ensemble(n: int, delta: float, schedule, dt: float, profile: GapProfile | None = None):
    paths = {}
    for word in SecretWord.all(n):
        p = build_ordered_search_path(word, delta)
        paths[word.x] = apply_gap_profile(p, profile) if profile is not None else p
    psi0 = prefix_plus_state(SecretWord(n, 0), 0)
    return paths, ensemble_evolve(paths, schedule, None, psi0, dt)


def run_ordered_search_bound(config: ExperimentConfig):
    dt = config.dt or 0.01
    rows, adversaries, ok = [], [], True
    for n in sorted(config.n):
        gamma = ordered_search_adversary(n)
        m = max_restricted_norm(n)
        adversaries.append({
            "n": n, "gamma_norm": gamma.norm, "max_gamma_i_norm": m,
            "spectral_lower_bound": spectral_lower_bound(n, config.delta, 0.0),
        })
        reference = build_ordered_search_path(SecretWord(n, 0), config.delta)
        if config.schedule == "linear":
            runs = [(T, linear_schedule(T)) for T in (config.T or [2.0, 10.0, 40.0])]
        else:
            runs = [(c, local_adiabatic_schedule(reference, c, config.resolution)) for c in (config.c or [0.1, 0.5, 2.0])]
        for param, schedule in runs:
            _, trajs = ordered_search_ensemble(n, config.delta, schedule, dt)
            eps_meas = pairwise_overlap_epsilon(trajs)
            eps = eps_meas if config.eps is None else config.eps
            rep = w_rate_bound_check(gamma, trajs, lambda t: config.delta, max_gamma_i_norm=m)
            t_bound = spectral_lower_bound(n, config.delta, min(eps, 1 - 1e-15))
            t_ok = schedule.T >= t_bound
            ok &= rep.passed and t_ok
            stride = max(1, len(rep.times) // 200)
            rows.append({
                "n": n, "gamma_norm": gamma.norm, "max_gamma_i_norm": m,
                "schedule": config.schedule, "param": param, "T": schedule.T,
                "eps_measured": eps_meas, "w0": rep.w[0], "wT": rep.w[-1],
                "max_rate": rep.max_rate, "rate_bound": rep.bound, "rate_slack": rep.slack,
                "t_bound": t_bound, "t_ok": t_ok,
                "w_trace": [[t, w] for t, w in zip(rep.times[::stride], rep.w[::stride])],
            })
    return BOUND_COLUMNS, rows, {"dt": dt, "delta": config.delta, "adversary": adversaries, "all_checks_passed": ok}, ok


def run_clock_traversal(config: ExperimentConfig):
    dt = config.dt or 0.01
    circuit = load_circuit(config.circuit)
    if circuit.nqubits > 3 or len(circuit) > 6:
        raise ValueError(f"clock traversal supports up to 3 qubits and 6 gates, got {circuit.nqubits} and {len(circuit)}")
    seed = basis_state(0, circuit.dim)
    path = build_clock_path(circuit, config.delta, seed)
    length = resolved_path_length(path)
    n = len(circuit)
    target = np.kron(circuit.apply(seed), basis_state(n, n + 1))
    rows = []
    for c in config.c or [0.05]:
        schedule = local_adiabatic_schedule(path, c, config.resolution)
        traj = integrate_schrodinger(path, schedule, None, path.seed, dt, keep=10**9)
        rows.append({
            "c": c, "T": schedule.T, "path_length": length.value, "L_over_n": length.value / n,
            "fidelity_tracked": fidelity(traj.final_state, path.info["gammas"][-1]),
            "fidelity_circuit": fidelity(traj.final_state, target),
        })
    summary = {"gates": n, "qubits": circuit.nqubits, "dt": dt, "L_over_n_expected": math.pi / 2}
    return CLOCK_COLUMNS, rows, summary, True


def _profile(name: str) -> GapProfile:
    if name == "const":
        return GapProfile.constant(1.0)
    if name == "linear-ramp":
        return GapProfile.linear_ramp()
    raise ValueError(f"unknown profile {name!r}")


def run_local_condition(config: ExperimentConfig):
    dt = config.dt or 0.01
    profile = _profile(config.profile)
    rows, ok = [], True
    for n in sorted(config.n):
        reference = apply_gap_profile(build_ordered_search_path(SecretWord(n, 0), config.delta), profile)
        length = resolved_path_length(reference).value
        gap_of_r = lambda r: profile(r) * config.delta  # noqa: E731
        for c in config.c or [0.1, 0.5, 2.0, 10.0]:
            schedule = local_adiabatic_schedule(reference, c, config.resolution)
            qmax = max(profile(r) for r in np.linspace(0, 1, 65))
            _, trajs = ordered_search_ensemble(n, config.delta, schedule, min(dt, 0.1 / (qmax * config.delta * math.sqrt(2))), profile)
            eps_meas = pairwise_overlap_epsilon(trajs)
            eps = eps_meas if config.eps is None else config.eps
            rep = local_condition_check(n, eps, schedule, gap_of_r, path_length=length, c=c)
            ok &= rep.passed
            rows.append({
                "n": n, "profile": config.profile, "c": c, "T": schedule.T, "eps_measured": eps_meas,
                "lhs": rep.lhs, "rhs": rep.rhs, "rhs_change_of_variables": rep.rhs_change_of_variables,
                "path_length": length, "critical_c": rep.critical_c,
                "critical_c_literal": rep.critical_c_literal, "holds": rep.passed,
            })
    return LOCAL_COLUMNS, rows, {"dt": dt, "delta": config.delta, "all_checks_passed": ok}, ok


COMMANDS = {
    "grover-scaling": run_grover_scaling,
    "ordered-search-bound": run_ordered_search_bound,
    "clock-traversal": run_clock_traversal,
    "local-condition": run_local_condition,
}

DEFAULT_N = {"grover-scaling": "2,4,6,8", "ordered-search-bound": "1,2,3,4", "local-condition": "2,3"}


def _floats(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigenpath", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file with default options")
        p.add_argument("--n", type=_ints, help="comma-separated qubit counts (grover: N = 2**n)")
        p.add_argument("--n-max", type=int, help="extend --n to the range min(n)..n-max")
        p.add_argument("--delta", type=float, default=1.0)
        p.add_argument("--dt", type=float)
        p.add_argument("--c", type=_floats, default=[], help="comma-separated speed constants")
        p.add_argument("--T", type=_floats, default=[], help="comma-separated runtimes (linear schedules)")
        p.add_argument("--schedule", choices=["linear", "local"], default="linear")
        p.add_argument("--eps", type=float, help="fixed epsilon; default is the measured overlap")
        p.add_argument("--profile", choices=["const", "linear-ramp"], default="const")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--circuit")
        p.add_argument("--t-max", type=float, default=1e4)
        p.add_argument("--resolution", type=int, default=64)
        p.add_argument("--out")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def read_config_file(path) -> list[str]:
    """Turn ``key=value`` lines into ``--key value`` arguments."""
    argv = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        argv += [f"--{key.replace('_', '-')}", value]
    return argv


def parse_config(argv) -> ExperimentConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        args = parser.parse_args([argv[0]] + read_config_file(args.config) + list(argv[1:]))
    n = args.n or _ints(DEFAULT_N.get(args.command, "1"))
    if args.n_max is not None:
        n = list(range(min(n), args.n_max + 1))
    cfg = ExperimentConfig(
        command=args.command, n=n, n_max=args.n_max, delta=args.delta, dt=args.dt,
        c=args.c, T=args.T, schedule=args.schedule, eps=args.eps, profile=args.profile,
        seed=args.seed, circuit=args.circuit, t_max=args.t_max, resolution=args.resolution,
        out=args.out, format=args.format,
    )
    return cfg.validate()


def run(config: ExperimentConfig, stream=None):
    columns, rows, summary, ok = COMMANDS[config.command](config)
    summary = {"config": {k: v for k, v in asdict(config).items()}, **summary}
    write_report(columns, rows, summary, config, stream)
    return rows, summary, ok


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = parse_config(argv)
        _, _, ok = run(config)
    except (ValueError, CircuitParseError, OSError) as exc:
        print(f"eigenpath: error: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
