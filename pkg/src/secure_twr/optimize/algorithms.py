"""Alternating beamformer design for the two- and three-phase schemes.

Each round updates the relay parameters with the barrier search, then
``q_B`` and ``q_A`` with the fractional solver. Every step starts from the
current point and can only raise the secrecy sum rate, so the per-round
trace is non-decreasing. The best of several initializations is kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channels import ChannelSet, PowerBudget
from ..errors import AlignmentInfeasibleError, InfeasibleBudgetError, ZeroBeamformerError
from ..matkit import max_eig_hermitian, max_gen_eig
from ..schemes import (
    RateReport,
    RelayCombiner2P,
    RelayCombiner3P,
    SourceBeamformers,
    rate_2p,
    rate_3p,
)
from .alignment import signal_align
from .barrier import optimize_a3_barrier, optimize_a_barrier
from .config import OptimizerConfig
from .fractional import optimize_qb_fractional, optimize_qb_fractional_3p
from .structure import assemble_f_2p, assemble_f_3p, project_2p, structure_2p, structure_3p

INIT_MODES_2P = ("auto", "align", "lowpower", "random")
INIT_MODES_3P = ("auto", "highrelay", "dt", "random")


@dataclass
class AlgorithmResult:
    """Outcome of an alternating run; unpacks as ``(sources, relay, report, trace)``."""

    sources: SourceBeamformers
    relay: RelayCombiner2P | RelayCombiner3P
    report: RateReport
    trace: list[float]
    init: str = ""
    restart_traces: list[list[float]] = field(default_factory=list)
    restart_inits: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return max(len(self.trace) - 1, 0)

    def __iter__(self):
        return iter((self.sources, self.relay, self.report, self.trace))


def _full_power(v: np.ndarray, p: float) -> np.ndarray:
    n = np.linalg.norm(v)
    return np.sqrt(p) * v / n if n > 0 else v


def _random_dir(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _zero_result(ch: ChannelSet, three_phase: bool) -> AlgorithmResult:
    d = ch.dims
    src = SourceBeamformers(np.zeros(d.n_a), np.zeros(d.n_b))
    zero = np.zeros((d.n_r, d.n_r), complex)
    if three_phase:
        relay = RelayCombiner3P(zero, zero)
        rep = rate_3p(ch, src, relay)
    else:
        relay = RelayCombiner2P(zero)
        rep = rate_2p(ch, src, relay)
    return AlgorithmResult(src, relay, rep, [rep.r_secrecy], "zero-budget", [[rep.r_secrecy]])


def _schedule(init: str, modes: tuple[str, ...], restarts: int, preferred: list[str]) -> list[str]:
    if init not in modes:
        raise ValueError(f"unknown init {init!r}; expected one of {modes}")
    if init != "auto":
        return [init] * restarts
    return (preferred + ["random"] * restarts)[:restarts]


# --- two-phase -----------------------------------------------------------


def init_sources_2p(ch: ChannelSet, budget: PowerBudget, mode: str, rng) -> SourceBeamformers:
    """Starting source beamformers at full power."""
    if mode == "align":
        src, _, _ = signal_align(ch, budget.p_a, budget.p_b)
        return src
    if mode == "lowpower":
        # directions maximizing |q_B^H H_B^H H_A q_A|^2
        cross = ch.h_a.conj().T @ ch.h_b
        q_a = max_eig_hermitian(cross @ cross.conj().T).vector
        q_b = max_eig_hermitian(cross.conj().T @ cross).vector
        return SourceBeamformers(_full_power(q_a, budget.p_a), _full_power(q_b, budget.p_b))
    return SourceBeamformers(
        _full_power(_random_dir(rng, ch.dims.n_a), budget.p_a),
        _full_power(_random_dir(rng, ch.dims.n_b), budget.p_b),
    )


def _run_2p(ch, budget, cfg, src, rng) -> tuple[AlgorithmResult, list[float]]:
    a, rep = optimize_a_barrier(ch, src, budget.p_r, cfg, rng=rng)
    trace = [rep.r_secrecy]
    f = assemble_f_2p(structure_2p(ch, src), a)
    for _ in range(cfg.max_outer_iters):
        q_b = optimize_qb_fractional(ch, f, src.q_a, budget.p_b, budget.p_r, q_init=src.q_b)
        q_a = optimize_qb_fractional(
            ch.swapped(), f, q_b, budget.p_a, budget.p_r, q_init=src.q_a
        )
        src = SourceBeamformers(q_a, q_b)
        try:
            basis = structure_2p(ch, src)
        except ZeroBeamformerError:
            rep = rate_2p(ch, src, f)
            trace.append(rep.r_secrecy)
            break
        a, rep = optimize_a_barrier(ch, src, budget.p_r, cfg, a0=project_2p(basis, f.f), rng=rng)
        f = assemble_f_2p(basis, a)
        trace.append(rep.r_secrecy)
        if trace[-1] - trace[-2] < cfg.rate_tol:
            break
    return AlgorithmResult(src, f, rep, trace), trace


def _best_of(runs: list[AlgorithmResult], traces: list[list[float]]) -> AlgorithmResult:
    best = max(runs, key=lambda r: r.report.r_secrecy)
    best.restart_traces = traces
    best.restart_inits = [r.init for r in runs]
    return best


def algorithm1(
    ch: ChannelSet,
    budget: PowerBudget,
    cfg: OptimizerConfig = OptimizerConfig(),
    init: str = "auto",
) -> AlgorithmResult:
    """Alternating design of ``(q_A, q_B, F)`` for the two-phase scheme.

    ``init="auto"`` starts from aligned beamformers when the antenna counts
    allow it, then from the low-power closed-form directions, then from
    random directions. Other values force one kind for every restart.
    """
    if min(budget.p_a, budget.p_b, budget.p_r) <= 0:
        return _zero_result(ch, False)
    d = ch.dims
    preferred = (["align"] if d.n_a + d.n_b > d.n_r else []) + ["lowpower"]
    runs, traces = [], []
    for k, mode in enumerate(_schedule(init, INIT_MODES_2P, cfg.restarts, preferred)):
        rng = np.random.default_rng([cfg.seed, k])
        try:
            src = init_sources_2p(ch, budget, mode, rng)
            res, trace = _run_2p(ch, budget, cfg, src, rng)
        except (AlignmentInfeasibleError, ZeroBeamformerError, InfeasibleBudgetError):
            continue
        res.init = mode
        runs.append(res)
        traces.append(trace)
    if not runs:
        raise InfeasibleBudgetError("no initialization produced a feasible design")
    return _best_of(runs, traces)


def aligned_2p(
    ch: ChannelSet, budget: PowerBudget, cfg: OptimizerConfig = OptimizerConfig()
) -> AlgorithmResult:
    """Two-phase design with sources fixed to full-power aligned beamformers.

    Only the relay is optimized, from ``cfg.restarts`` random starts.
    """
    if min(budget.p_a, budget.p_b, budget.p_r) <= 0:
        return _zero_result(ch, False)
    src, _, _ = signal_align(ch, budget.p_a, budget.p_b)
    basis = structure_2p(ch, src)
    best = None
    for k in range(cfg.restarts):
        a, rep = optimize_a_barrier(ch, src, budget.p_r, cfg, rng=np.random.default_rng([cfg.seed, k]))
        if best is None or rep.r_secrecy > best[1].r_secrecy:
            best = (a, rep)
    a, rep = best
    return AlgorithmResult(src, assemble_f_2p(basis, a), rep, [rep.r_secrecy], "align",
                           [[rep.r_secrecy]])


# --- three-phase ---------------------------------------------------------


def init_sources_3p(ch: ChannelSet, budget: PowerBudget, mode: str, rng) -> SourceBeamformers:
    """Starting source beamformers at full power.

    ``"highrelay"`` maximizes ``(1 + q^H (T^H T + H^H H / 2) q) / (1 + q^H H^H H q)``,
    the per-direction figure of merit when the relay has ample power.
    ``"dt"`` uses the direct-link secrecy beamformers.
    """
    qs = []
    for t, h, p in ((ch.t_a, ch.h_a, budget.p_a), (ch.t_b, ch.h_b, budget.p_b)):
        n = t.shape[1]
        if mode == "random":
            qs.append(_full_power(_random_dir(rng, n), p))
            continue
        eye = np.eye(n)
        hh = h.conj().T @ h
        top = t.conj().T @ t + (0.5 * hh if mode == "highrelay" else 0.0)
        qs.append(_full_power(max_gen_eig(eye + p * top, eye + p * hh).vector, p))
    return SourceBeamformers(*qs)


def _slot_relay(v: np.ndarray, a: np.ndarray, received: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(received)
    if norm == 0:
        return np.zeros((v.shape[0], v.shape[0]), complex)
    return np.outer(v @ a, received.conj() / norm)


def _rate_3p_structured(ch, src, a1, a2):
    basis = structure_3p(ch, src)
    relay = assemble_f_3p(basis, a1, a2)
    return basis, relay, rate_3p(ch, src, relay)


def _run_3p(ch, budget, cfg, src, rng) -> tuple[AlgorithmResult, list[float]]:
    a1, a2, rep = optimize_a3_barrier(ch, src, budget.p_r, cfg, rng=rng)
    basis, relay, _ = _rate_3p_structured(ch, src, a1, a2)
    trace = [rep.r_secrecy]
    for _ in range(cfg.max_outer_iters):
        q_b = optimize_qb_fractional_3p(
            ch, basis, a1, a2, src.q_a, budget.p_b, budget.p_r, q_init=src.q_b
        )
        q_a = optimize_qb_fractional_3p(
            ch.swapped(), basis, a2, a1, q_b, budget.p_a, budget.p_r, q_init=src.q_a
        )
        src = SourceBeamformers(q_a, q_b)
        try:
            basis = structure_3p(ch, src)
        except ZeroBeamformerError:
            # a silent source leaves nothing to forward in its slot
            relay = RelayCombiner3P(
                _slot_relay(basis.v, a1, ch.h_a @ q_a), _slot_relay(basis.v, a2, ch.h_b @ q_b)
            )
            rep = rate_3p(ch, src, relay)
            trace.append(rep.r_secrecy)
            break
        a1, a2, rep = optimize_a3_barrier(ch, src, budget.p_r, cfg, a0=(a1, a2), rng=rng)
        relay = assemble_f_3p(basis, a1, a2)
        trace.append(rep.r_secrecy)
        if trace[-1] - trace[-2] < cfg.rate_tol:
            break
    return AlgorithmResult(src, relay, rep, trace), trace


def algorithm2(
    ch: ChannelSet,
    budget: PowerBudget,
    cfg: OptimizerConfig = OptimizerConfig(),
    init: str = "auto",
) -> AlgorithmResult:
    """Alternating design of ``(q_A, q_B, F_A, F_B)`` for the three-phase scheme."""
    if min(budget.p_a, budget.p_b) <= 0:
        return _zero_result(ch, True)
    if budget.p_r <= 0:
        # no relaying: the scheme falls back to direct links with a 1/3 prefactor
        src = init_sources_3p(ch, budget, "dt", None)
        zero = np.zeros((ch.dims.n_r, ch.dims.n_r), complex)
        relay = RelayCombiner3P(zero, zero)
        rep = rate_3p(ch, src, relay)
        return AlgorithmResult(src, relay, rep, [rep.r_secrecy], "dt", [[rep.r_secrecy]])
    runs, traces = [], []
    for k, mode in enumerate(_schedule(init, INIT_MODES_3P, cfg.restarts, ["highrelay", "dt"])):
        rng = np.random.default_rng([cfg.seed, k])
        try:
            src = init_sources_3p(ch, budget, mode, rng)
            res, trace = _run_3p(ch, budget, cfg, src, rng)
        except (ZeroBeamformerError, InfeasibleBudgetError):
            continue
        res.init = mode
        runs.append(res)
        traces.append(trace)
    if not runs:
        raise InfeasibleBudgetError("no initialization produced a feasible design")
    return _best_of(runs, traces)
