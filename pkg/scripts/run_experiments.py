"""Run the bundled experiment configs through the command line driver.

Usage::

    python scripts/run_experiments.py                 # everything into results/
    python scripts/run_experiments.py low_power weak_relay
    python scripts/run_experiments.py --quick         # Monte Carlo runs with 20 trials

Each experiment writes ``<name>.csv`` (and a trace file for the
convergence run) into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

from secure_twr.cli import main as cli_main

CONFIGS = Path(__file__).resolve().parent / "configs"

EXPERIMENTS = {
    "convergence": "optimize",
    "high_power_223": "sweep",
    "high_power_225": "sweep",
    "high_power_332": "sweep",
    "low_power": "sweep",
    "weak_relay": "sweep",
    "relay_power_montecarlo": "montecarlo",
    "relay_antennas_montecarlo": "montecarlo",
}


def run(name: str, out_dir: Path, quick: bool, threads: int) -> int:
    command = EXPERIMENTS[name]
    cfg = json.loads((CONFIGS / f"{name}.json").read_text())
    if quick and "trials" in cfg:
        cfg["trials"] = min(cfg["trials"], 20)
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(cfg, fh)
        cfg_path = fh.name
    argv = [command, "--config", cfg_path, "--out", str(out_dir / f"{name}.csv"),
            "--threads", str(threads)]
    if command == "optimize":
        argv += ["--trace", str(out_dir / f"{name}_trace.csv")]
    start = time.perf_counter()
    code = cli_main(argv)
    Path(cfg_path).unlink()
    print(f"{name:28s} {command:10s} exit={code} {time.perf_counter() - start:7.1f}s")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", help=f"subset of {', '.join(EXPERIMENTS)}")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--quick", action="store_true", help="cap Monte Carlo trials at 20")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    unknown = sorted(set(args.names) - set(EXPERIMENTS))
    if unknown:
        parser.error(f"unknown experiments {unknown}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    codes = [run(n, out_dir, args.quick, args.threads) for n in (args.names or EXPERIMENTS)]
    return max(codes, default=0)


if __name__ == "__main__":
    sys.exit(main())
