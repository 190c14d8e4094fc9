"""Run the standard experiment sweeps and write their tables to a directory.

    python scripts/run_experiments.py --out results/ [--only grover-scaling ...]
"""

import argparse
import sys
from pathlib import Path

from eigenpath.cli import main

HERE = Path(__file__).resolve().parent


def sweeps(out: Path):
    cfg = HERE / "configs"
    yield "grover-scaling", ["grover-scaling", "--config", str(cfg / "grover.cfg"), "--out", str(out / "grover.csv")]
    yield "ordered-search-bound", [
        "ordered-search-bound", "--config", str(cfg / "ordered_search.cfg"),
        "--format", "json", "--out", str(out / "ordered_search_linear.json"),
    ]
    yield "ordered-search-bound", [
        "ordered-search-bound", "--config", str(cfg / "ordered_search.cfg"), "--schedule", "local",
        "--c", "0.05,0.2,1", "--format", "json", "--out", str(out / "ordered_search_local.json"),
    ]
    yield "clock-traversal", [
        "clock-traversal", "--circuit", str(HERE / "bell.circuit"), "--c", "0.02,0.05,0.1,0.3",
        "--out", str(out / "clock_bell.csv"),
    ]
    for profile in ("const", "linear-ramp"):
        yield "local-condition", [
            "local-condition", "--config", str(cfg / "local_condition.cfg"), "--profile", profile,
            "--out", str(out / f"local_condition_{profile}.csv"),
        ]


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--only", nargs="*", help="subcommand names to run")
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    status = 0
    for name, cli_args in sweeps(args.out):
        if args.only and name not in args.only:
            continue
        print("eigenpath", " ".join(cli_args), flush=True)
        code = main(cli_args)
        if code:
            print(f"  exit status {code}", file=sys.stderr)
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(run())
