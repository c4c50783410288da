"""Experiment configs, result rows and the runners behind the command line.

A config is a JSON object. Powers are in dB; ``-inf`` (written ``"-inf"``
or ``-Infinity``) stands for a silent node. Example::

    {
      "schemes": ["dt", "2p", "3p"],
      "dims": [2, 2, 3],
      "channel": {"source": "fixture"},
      "powers": {"p_a_db": [0, 10, 20], "p_r_db": [40]},
      "optimizer": {"restarts": 3},
      "trials": 1,
      "seed": 0
    }

``dims`` is ``[n_a, n_b, n_r]``. ``p_b_db`` defaults to ``p_a_db`` and is
zipped with it; the resulting source points are crossed with ``p_r_db``.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .asymptotics import (
    asym_2p_high,
    asym_2p_low,
    asym_3p_high,
    asym_3p_low,
    asym_dt_high,
    asym_dt_low,
)
from .channels import (
    ChannelSet,
    Dims,
    PowerBudget,
    db_to_linear,
    load_channels,
    paper_fixture,
    sample_channels,
)
from .errors import ConfigError
from .optimize import (
    OptimizerConfig,
    algorithm1,
    algorithm2,
    aligned_2p,
    optimize_a3_barrier,
    optimize_a_barrier,
)
from .optimize.algorithms import INIT_MODES_2P, INIT_MODES_3P, init_sources_2p, init_sources_3p
from .schemes import (
    RateReport,
    RelayCombiner2P,
    RelayCombiner3P,
    SourceBeamformers,
    dt_optimal,
    rate_2p,
    rate_3p,
    rate_dt,
)

SCHEMES = ("dt", "2p", "3p", "2p-aligned")
CHANNEL_SOURCES = ("fixture", "random", "file")
ASYMPTOTE_REGIMES = ("high", "low", "none")


# --- config --------------------------------------------------------------


def _db(value, where: str) -> float:
    if isinstance(value, str) and value.strip().lower() in ("-inf", "-infinity"):
        return -math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number in dB, got {value!r}")
    v = float(value)
    if math.isnan(v) or v == math.inf:
        raise ConfigError(f"{where}: must be finite or -inf, got {value!r}")
    return v


def _db_list(raw, where: str) -> tuple[float, ...]:
    if isinstance(raw, (int, float, str)) and not isinstance(raw, bool):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where}: expected a non-empty list of dB values")
    return tuple(_db(v, f"{where}[{i}]") for i, v in enumerate(raw))


def to_linear(db: float) -> float:
    return 0.0 if db == -math.inf else db_to_linear(db)


@dataclass(frozen=True)
class GridPoint:
    p_a_db: float
    p_b_db: float
    p_r_db: float

    def budget(self) -> PowerBudget:
        return PowerBudget(to_linear(self.p_a_db), to_linear(self.p_b_db), to_linear(self.p_r_db))


@dataclass(frozen=True)
class ExperimentConfig:
    schemes: tuple[str, ...]
    dims: Dims
    channel_source: str = "fixture"
    channel_path: str | None = None
    p_a_db: tuple[float, ...] = (10.0,)
    p_b_db: tuple[float, ...] = (10.0,)
    p_r_db: tuple[float, ...] = (30.0,)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    trials: int = 1
    seed: int = 0
    init: str = "auto"
    energy_normalized: bool = False
    asymptote_regime: str = "high"
    n_r_grid: tuple[int, ...] = ()
    beamformers: SourceBeamformers | None = None

    def grid(self) -> list[GridPoint]:
        return [
            GridPoint(pa, pb, pr) for pr in self.p_r_db for pa, pb in zip(self.p_a_db, self.p_b_db)
        ]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a JSON object")
        known = {f.name for f in fields(cls)} | {"channel", "powers"}
        known -= {"channel_source", "channel_path", "p_a_db", "p_b_db", "p_r_db"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"config: unknown fields {unknown}")

        schemes = d.get("schemes")
        if isinstance(schemes, str):
            schemes = [schemes]
        if not isinstance(schemes, list) or not schemes:
            raise ConfigError("schemes: must be a non-empty list")
        for i, s in enumerate(schemes):
            if s not in SCHEMES:
                raise ConfigError(f"schemes[{i}]: unknown scheme {s!r}; choose from {SCHEMES}")
        if len(set(schemes)) != len(schemes):
            raise ConfigError("schemes: duplicate entries")

        raw_dims = d.get("dims", [2, 2, 3])
        try:
            if isinstance(raw_dims, dict):
                dims = Dims(int(raw_dims["n_a"]), int(raw_dims["n_b"]), int(raw_dims["n_r"]))
            else:
                n_a, n_b, n_r = raw_dims
                dims = Dims(n_a, n_b, n_r)
        except Exception as exc:
            raise ConfigError(f"dims: expected [n_a, n_b, n_r] of positive integers ({exc})") from exc

        channel = d.get("channel", {"source": "fixture"})
        if not isinstance(channel, dict) or channel.get("source") not in CHANNEL_SOURCES:
            raise ConfigError(f"channel.source: must be one of {CHANNEL_SOURCES}")
        path = channel.get("path")
        if channel["source"] == "file" and not isinstance(path, str):
            raise ConfigError("channel.path: required for a file channel")
        seed = d.get("seed", channel.get("seed", 0))
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed: expected a non-negative integer, got {seed!r}")

        powers = d.get("powers", {})
        if not isinstance(powers, dict):
            raise ConfigError("powers: expected an object")
        unknown = sorted(set(powers) - {"p_a_db", "p_b_db", "p_r_db"})
        if unknown:
            raise ConfigError(f"powers: unknown fields {unknown}")
        p_a = _db_list(powers.get("p_a_db", [10.0]), "powers.p_a_db")
        p_b = _db_list(powers["p_b_db"], "powers.p_b_db") if "p_b_db" in powers else p_a
        if len(p_b) != len(p_a):
            raise ConfigError("powers.p_b_db: must have the same length as powers.p_a_db")
        p_r = _db_list(powers.get("p_r_db", [30.0]), "powers.p_r_db")

        try:
            opt = OptimizerConfig.from_dict(d.get("optimizer", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"optimizer: {exc}") from exc

        trials = d.get("trials", 1)
        if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
            raise ConfigError(f"trials: expected an integer >= 1, got {trials!r}")
        init = d.get("init", "auto")
        if init not in INIT_MODES_2P + INIT_MODES_3P:
            raise ConfigError(f"init: unknown mode {init!r}")
        energy = d.get("energy_normalized", False)
        if not isinstance(energy, bool):
            raise ConfigError("energy_normalized: expected true or false")
        regime = d.get("asymptote_regime", "high")
        if regime not in ASYMPTOTE_REGIMES:
            raise ConfigError(f"asymptote_regime: must be one of {ASYMPTOTE_REGIMES}")
        n_r_grid = d.get("n_r_grid", [])
        if not isinstance(n_r_grid, list) or any(
            isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in n_r_grid
        ):
            raise ConfigError("n_r_grid: expected a list of positive integers")

        beams = None
        if "beamformers" in d:
            beams = _parse_beamformers(d["beamformers"], dims)
        return cls(
            tuple(schemes), dims, channel["source"], path, p_a, p_b, p_r, opt, trials, seed,
            init, energy, regime, tuple(n_r_grid), beams,
        )

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(**{**{f.name: getattr(self, f.name) for f in fields(self)}, "seed": seed})


def _parse_vector(raw, n: int, where: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != n:
        raise ConfigError(f"{where}: expected {n} [re, im] pairs")
    out = np.empty(n, complex)
    for i, e in enumerate(raw):
        if not (isinstance(e, list) and len(e) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in e
        )):
            raise ConfigError(f"{where}[{i}]: expected a [re, im] pair")
        out[i] = complex(e[0], e[1])
    return out


def _parse_beamformers(raw, dims: Dims) -> SourceBeamformers:
    if not isinstance(raw, dict):
        raise ConfigError("beamformers: expected an object with q_a and q_b")
    return SourceBeamformers(
        _parse_vector(raw.get("q_a"), dims.n_a, "beamformers.q_a"),
        _parse_vector(raw.get("q_b"), dims.n_b, "beamformers.q_b"),
    )


# --- rows ----------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    p_a_db: float
    p_b_db: float
    p_r_db: float
    trial: int
    secrecy_rate: float
    r_ab: float
    r_ba: float
    r_leak: float
    relay_power_used: float
    iterations: int
    wall_time_ms: float

    def __post_init__(self):
        for name in ("secrecy_rate", "r_ab", "r_ba", "r_leak"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} is negative")

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        return [getattr(self, n) for n in self.header()]


@dataclass
class SchemeOutcome:
    report: RateReport
    iterations: int
    trace: list[float]
    restart_traces: list[list[float]]
    inits: list[str]


# --- channel and seed plumbing -------------------------------------------


def trial_seed(master: int, trial: int) -> np.random.SeedSequence:
    """Seed of one trial; depends only on ``(master, trial)``."""
    return np.random.SeedSequence([master, trial])


def make_channel(cfg: ExperimentConfig, trial: int, dims: Dims | None = None) -> ChannelSet:
    dims = dims or cfg.dims
    if cfg.channel_source == "fixture":
        return paper_fixture(dims)
    if cfg.channel_source == "file":
        ch = load_channels(cfg.channel_path)
        if ch.dims != dims:
            raise ConfigError(f"channel.path: file holds {ch.dims}, config asks for {dims}")
        return ch
    return sample_channels(dims, trial_seed(cfg.seed, trial))


def _optimizer_for(cfg: ExperimentConfig, trial: int) -> OptimizerConfig:
    seed = int(trial_seed(cfg.seed, trial).spawn(1)[0].generate_state(1)[0])
    return cfg.optimizer.replace(seed=seed)


def _budget_3p(cfg: ExperimentConfig, budget: PowerBudget) -> PowerBudget:
    return budget.energy_normalized_3p() if cfg.energy_normalized else budget


# --- scheme evaluation ---------------------------------------------------


def _zero_relay_2p(n_r: int) -> RelayCombiner2P:
    return RelayCombiner2P(np.zeros((n_r, n_r), complex))


def evaluate_scheme(
    scheme: str, ch: ChannelSet, budget: PowerBudget, cfg: ExperimentConfig, opt: OptimizerConfig
) -> SchemeOutcome:
    """Rates with derived sources and a single relay search (no alternation)."""
    n_r = ch.dims.n_r
    if scheme == "dt":
        if cfg.beamformers is not None:
            rep = rate_dt(ch, cfg.beamformers)
        else:
            rep = dt_optimal(ch, budget)[1]
        return SchemeOutcome(rep, 0, [rep.r_secrecy], [], [])
    if scheme == "2p-aligned":
        res = aligned_2p(ch, budget, opt)
        return SchemeOutcome(res.report, 0, res.trace, [], [res.init])
    if scheme == "2p":
        if cfg.beamformers is not None:
            src = cfg.beamformers
        elif min(budget.p_a, budget.p_b) > 0:
            d = ch.dims
            mode = "align" if d.n_a + d.n_b > d.n_r else "lowpower"
            src = init_sources_2p(ch, budget, mode, None)
        else:
            src = SourceBeamformers(np.zeros(ch.dims.n_a), np.zeros(ch.dims.n_b))
        if budget.p_r > 0 and np.any(ch.h_a @ src.q_a) and np.any(ch.h_b @ src.q_b):
            _, rep = optimize_a_barrier(ch, src, budget.p_r, opt)
        else:
            rep = rate_2p(ch, src, _zero_relay_2p(n_r))
        return SchemeOutcome(rep, 0, [rep.r_secrecy], [], [])
    if scheme == "3p":
        b3 = _budget_3p(cfg, budget)
        if cfg.beamformers is not None:
            src = cfg.beamformers
        elif min(b3.p_a, b3.p_b) > 0:
            src = init_sources_3p(ch, b3, "highrelay", None)
        else:
            src = SourceBeamformers(np.zeros(ch.dims.n_a), np.zeros(ch.dims.n_b))
        if b3.p_r > 0 and np.any(ch.h_a @ src.q_a) and np.any(ch.h_b @ src.q_b):
            _, _, rep = optimize_a3_barrier(ch, src, b3.p_r, opt)
        else:
            zero = np.zeros((n_r, n_r), complex)
            rep = rate_3p(ch, src, RelayCombiner3P(zero, zero))
        return SchemeOutcome(rep, 0, [rep.r_secrecy], [], [])
    raise ConfigError(f"schemes: unknown scheme {scheme!r}")


def optimize_scheme(
    scheme: str, ch: ChannelSet, budget: PowerBudget, cfg: ExperimentConfig, opt: OptimizerConfig
) -> SchemeOutcome:
    """Full alternating optimization of one scheme."""
    if scheme == "dt":
        return evaluate_scheme("dt", ch, budget, cfg, opt)
    if scheme == "2p-aligned":
        res = aligned_2p(ch, budget, opt)
    elif scheme == "2p":
        res = algorithm1(ch, budget, opt, init=cfg.init if cfg.init in INIT_MODES_2P else "auto")
    elif scheme == "3p":
        res = algorithm2(ch, _budget_3p(cfg, budget), opt,
                         init=cfg.init if cfg.init in INIT_MODES_3P else "auto")
    else:
        raise ConfigError(f"schemes: unknown scheme {scheme!r}")
    return SchemeOutcome(res.report, res.iterations, res.trace, res.restart_traces,
                         res.restart_inits or [res.init])


def _row(scheme, point: GridPoint, trial, out: SchemeOutcome, ms) -> ResultRow:
    r = out.report
    return ResultRow(scheme, point.p_a_db, point.p_b_db, point.p_r_db, trial, r.r_secrecy,
                     r.r_ab, r.r_ba, r.r_leak, r.relay_power_used, out.iterations, ms)


def run_points(
    cfg: ExperimentConfig, trial: int, optimize: bool, dims: Dims | None = None
) -> list[tuple[ResultRow, SchemeOutcome]]:
    """All (grid point, scheme) results of one trial, in grid order."""
    ch = make_channel(cfg, trial, dims)
    opt = _optimizer_for(cfg, trial)
    solve = optimize_scheme if optimize else evaluate_scheme
    out = []
    for point in cfg.grid():
        budget = point.budget()
        for scheme in cfg.schemes:
            t0 = time.perf_counter()
            res = solve(scheme, ch, budget, cfg, opt)
            ms = 1e3 * (time.perf_counter() - t0)
            out.append((_row(scheme, point, trial, res, ms), res))
    return out


def _map(fn, args: list, threads: int) -> list:
    if threads <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, *zip(*args)))


def run_trials(
    cfg: ExperimentConfig, optimize: bool, threads: int = 1, dims: Dims | None = None
) -> list[tuple[ResultRow, SchemeOutcome]]:
    """Every trial of ``cfg``; results come back in (trial, grid, scheme) order."""
    per_trial = _map(run_points, [(cfg, t, optimize, dims) for t in range(cfg.trials)], threads)
    return [item for chunk in per_trial for item in chunk]


# --- asymptotes and aggregates -------------------------------------------


def asymptote_columns(ch: ChannelSet, point: GridPoint, regime: str) -> dict[str, float]:
    """Closed-form overlay values for one grid point."""
    if regime == "none":
        return {}
    b = point.budget()
    if regime == "high":
        dt, two, three = (asym_dt_high(ch, b.p_a, b.p_b), asym_2p_high(ch, b.p_a, b.p_b),
                          asym_3p_high(ch, b.p_a, b.p_b))
    else:
        dt, three = asym_dt_low(ch, b.p_a, b.p_b), asym_3p_low(ch, b.p_a, b.p_b)
        two = asym_2p_low(ch, b.p_a, b.p_b)[1]
    return {
        "dt_asym": dt.value,
        "2p_asym": two.value,
        "3p_asym": three.value,
        "3p_lower": three.lower,
        "3p_upper": three.upper,
    }


@dataclass(frozen=True)
class MonteCarloRow:
    scheme: str
    p_a_db: float
    p_b_db: float
    p_r_db: float
    n_a: int
    n_b: int
    n_r: int
    trials: int
    mean_secrecy_rate: float
    stderr: float

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        return list(asdict(self).values())


def mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def monte_carlo(cfg: ExperimentConfig, threads: int = 1, optimize: bool = True) -> list[MonteCarloRow]:
    """Mean and standard error of the secrecy rate over ``cfg.trials`` random channels.

    Each trial draws one channel and reuses it across the power grid, so a
    scheme that ignores the relay power yields identical per-trial values
    along a relay sweep. ``n_r_grid`` repeats the run for each relay size.
    """
    if cfg.channel_source != "random":
        raise ConfigError("channel.source: montecarlo needs random channels")
    relay_sizes = cfg.n_r_grid or (cfg.dims.n_r,)
    rows = []
    for n_r in relay_sizes:
        dims = Dims(cfg.dims.n_a, cfg.dims.n_b, n_r)
        results = run_trials(cfg, optimize, threads, dims)
        for point in cfg.grid():
            for scheme in cfg.schemes:
                vals = [
                    r.secrecy_rate for r, _ in results
                    if r.scheme == scheme
                    and (r.p_a_db, r.p_b_db, r.p_r_db) == (point.p_a_db, point.p_b_db, point.p_r_db)
                ]
                mean, se = mean_stderr(vals)
                rows.append(MonteCarloRow(scheme, point.p_a_db, point.p_b_db, point.p_r_db,
                                          dims.n_a, dims.n_b, n_r, len(vals), mean, se))
    return rows


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return ExperimentConfig.from_dict(raw)
