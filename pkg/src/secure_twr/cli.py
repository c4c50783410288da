"""Command-line driver.

Subcommands::

    eval        rates with derived beamformers and one relay search
    optimize    full alternating optimization per grid point
    sweep       wide table: one rate column per scheme plus closed-form overlays
    montecarlo  mean and standard error over random channels
    asymptote   closed-form values only
    fixture     dump the fixed channel realization as JSON

Exit codes: 0 success, 2 bad configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .channels import Dims, channels_to_dict, paper_fixture
from .errors import (
    AlignmentInfeasibleError,
    ChannelParseError,
    ConfigError,
    DimensionError,
    SecureTWRError,
)
from .experiment import (
    ExperimentConfig,
    MonteCarloRow,
    ResultRow,
    asymptote_columns,
    load_config,
    make_channel,
    monte_carlo,
    run_trials,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
TRACE_HEADER = ["scheme", "p_a_db", "p_b_db", "p_r_db", "trial", "restart", "init", "iteration",
                "secrecy_rate"]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_csv(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config: required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _trace_path(args) -> Path | None:
    if not args.trace:
        return None
    if isinstance(args.trace, str):
        return Path(args.trace)
    if args.out in (None, "-"):
        return None
    return Path(str(args.out) + ".trace.csv")


def _trace_rows(results):
    for row, out in results:
        traces = out.restart_traces or [out.trace]
        for restart, trace in enumerate(traces):
            init = out.inits[restart] if restart < len(out.inits) else ""
            for it, rate in enumerate(trace):
                yield [row.scheme, row.p_a_db, row.p_b_db, row.p_r_db, row.trial, restart, init,
                       it, rate]


def cmd_rows(args, optimize: bool) -> int:
    cfg = _load(args)
    results = run_trials(cfg, optimize, args.threads)
    with _open_out(args.out) as fh:
        _write_csv(fh, ResultRow.header(), (r.values() for r, _ in results))
    if optimize and args.trace:
        path = _trace_path(args)
        if path is None:
            _write_csv(sys.stderr, TRACE_HEADER, _trace_rows(results))
        else:
            with open(path, "w", newline="") as fh:
                _write_csv(fh, TRACE_HEADER, _trace_rows(results))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    results = run_trials(cfg, True, args.threads)
    ch = make_channel(cfg, 0)
    points = cfg.grid()
    by_key = {(r.trial, r.p_a_db, r.p_b_db, r.p_r_db, r.scheme): r for r, _ in results}
    overlay_keys = list(asymptote_columns(ch, points[0], cfg.asymptote_regime))
    header = ["trial", "p_a_db", "p_b_db", "p_r_db", *cfg.schemes, *overlay_keys]
    rows = []
    for trial in range(cfg.trials):
        ch = make_channel(cfg, trial)
        for p in points:
            over = asymptote_columns(ch, p, cfg.asymptote_regime)
            rates = [by_key[(trial, p.p_a_db, p.p_b_db, p.p_r_db, s)].secrecy_rate
                     for s in cfg.schemes]
            rows.append([trial, p.p_a_db, p.p_b_db, p.p_r_db, *rates,
                         *(over[k] for k in overlay_keys)])
    with _open_out(args.out) as fh:
        _write_csv(fh, header, rows)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    cfg = _load(args)
    rows = monte_carlo(cfg, args.threads)
    with _open_out(args.out) as fh:
        _write_csv(fh, MonteCarloRow.header(), (r.values() for r in rows))
    return EXIT_OK


def cmd_asymptote(args) -> int:
    cfg = _load(args)
    regime = cfg.asymptote_regime if cfg.asymptote_regime != "none" else "high"
    rows, header = [], None
    for trial in range(cfg.trials):
        ch = make_channel(cfg, trial)
        for p in cfg.grid():
            cols = asymptote_columns(ch, p, regime)
            header = header or ["trial", "p_a_db", "p_b_db", "p_r_db", *cols]
            rows.append([trial, p.p_a_db, p.p_b_db, p.p_r_db, *cols.values()])
    with _open_out(args.out) as fh:
        _write_csv(fh, header, rows)
    return EXIT_OK


def cmd_fixture(args) -> int:
    if args.dims:
        dims = Dims(*args.dims)
    elif args.config:
        dims = load_config(args.config).dims
    else:
        dims = Dims(3, 3, 5)
    text = json.dumps(channels_to_dict(paper_fixture(dims)), indent=1)
    with _open_out(args.out) as fh:
        fh.write(text + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int, help="override the config's master seed")
    common.add_argument("--trace", nargs="?", const=True, default=False,
                        help="write per-iteration traces (optional path)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")

    parser = argparse.ArgumentParser(prog="secure-twr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("eval", "rates with derived beamformers"),
        ("optimize", "alternating optimization"),
        ("sweep", "per-scheme curves with closed-form overlays"),
        ("montecarlo", "average over random channels"),
        ("asymptote", "closed-form values"),
        ("fixture", "dump the fixed channel realization"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "fixture":
            p.add_argument("--dims", type=int, nargs=3, metavar=("N_A", "N_B", "N_R"))
    return parser


COMMANDS = {
    "eval": lambda a: cmd_rows(a, optimize=False),
    "optimize": lambda a: cmd_rows(a, optimize=True),
    "sweep": cmd_sweep,
    "montecarlo": cmd_montecarlo,
    "asymptote": cmd_asymptote,
    "fixture": cmd_fixture,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ChannelParseError, DimensionError, AlignmentInfeasibleError,
            FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SecureTWRError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
