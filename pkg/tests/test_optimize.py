from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secure_twr.channels import ChannelSet, Dims, PowerBudget, paper_fixture, sample_channels
from secure_twr.errors import (
    AlignmentInfeasibleError,
    ConfigError,
    DimensionError,
    InfeasibleBudgetError,
    ZeroBeamformerError,
)
from secure_twr.optimize import (
    OptimizerConfig,
    RatioProblem,
    ThreePhaseObjective,
    TwoPhaseObjective,
    algorithm1,
    algorithm2,
    aligned_2p,
    aligned_rate_bits,
    assemble_f_2p,
    assemble_f_3p,
    dual_bound,
    max_quadratic_form,
    maximize_ratio,
    optimize_a3_barrier,
    optimize_a_barrier,
    optimize_qb_fractional,
    optimize_qb_fractional_3p,
    project_2p,
    project_3p,
    ratio_problem_2p,
    ratio_problem_3p,
    reduced_power_2p,
    reduced_power_3p,
    signal_align,
    structure_2p,
    structure_3p,
)
from secure_twr.schemes import (
    RelayCombiner2P,
    RelayCombiner3P,
    SourceBeamformers,
    rate_2p,
    rate_3p,
    relay_power_2p,
    relay_power_3p,
)

from .conftest import cn, random_sources, seeds
from .oracles import fd_gradient, random_relay, ratio_sampling_oracle, real_gradient, rel_err

FAST = OptimizerConfig(restarts=1, max_outer_iters=10)
dims_3p = st.builds(Dims, n_a=st.integers(1, 3), n_b=st.integers(1, 3), n_r=st.integers(1, 4))


def orthonormal(m: np.ndarray) -> bool:
    return np.allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=1e-12)


def relayed_sum(rep) -> float:
    return rep.r_ab + rep.r_ba


class TestOptimizerConfig:
    def test_defaults(self):
        cfg = OptimizerConfig()
        assert 0 < cfg.barrier_shrink < 1 and cfg.restarts >= 1

    @pytest.mark.parametrize("field,value", [
        ("barrier_shrink", 1.0), ("barrier_mu0", 0.0), ("restarts", 0), ("direction", "newton"),
    ])
    def test_rejects(self, field, value):
        with pytest.raises(ConfigError):
            OptimizerConfig().replace(**{field: value})

    def test_from_dict_unknown_field(self):
        with pytest.raises(ConfigError, match="bogus"):
            OptimizerConfig.from_dict({"bogus": 1})


class TestStructure2P:
    def test_full_span_square(self, rng):
        ch = sample_channels(Dims(2, 2, 2), 3)
        basis = structure_2p(ch, random_sources(rng, ch.dims))
        assert basis.u.shape == (2, 2) and orthonormal(basis.u)
        assert np.allclose(basis.u @ basis.u.conj().T, np.eye(2), atol=1e-12)
        assert not basis.degenerate

    def test_fixture_shapes(self, fixture_223, rng):
        basis = structure_2p(fixture_223, random_sources(rng, fixture_223.dims))
        assert basis.v.shape == (3, 3) and basis.u.shape == (3, 2)
        assert orthonormal(basis.v) and orthonormal(basis.u)

    def test_degenerate_alignment(self, fixture_223):
        src, _, _ = signal_align(fixture_223, 1.0, 1.0)
        basis = structure_2p(fixture_223, src)
        assert basis.degenerate
        assert orthonormal(basis.u)

    def test_zero_beamformer(self, fixture_223):
        with pytest.raises(ZeroBeamformerError):
            structure_2p(fixture_223, SourceBeamformers(np.zeros(2), np.ones(2)))

    def test_assemble_zero_and_rank(self, fixture_223, rng):
        basis = structure_2p(fixture_223, random_sources(rng, fixture_223.dims))
        assert np.all(assemble_f_2p(basis, np.zeros(basis.a_shape)).f == 0)
        padded = np.eye(*basis.a_shape)
        assert np.linalg.matrix_rank(assemble_f_2p(basis, padded).f) <= 2

    def test_assemble_shape_check(self, fixture_223, rng):
        basis = structure_2p(fixture_223, random_sources(rng, fixture_223.dims))
        with pytest.raises(DimensionError):
            assemble_f_2p(basis, np.zeros((2, 2)))

    @given(seed=seeds)
    def test_power_identity(self, seed):
        rng = np.random.default_rng(seed)
        ch = sample_channels(Dims(2, 2, 3), seed)
        src = random_sources(rng, ch.dims, 4.0, 9.0)
        basis = structure_2p(ch, src)
        a = cn(rng, *basis.a_shape)
        full = relay_power_2p(ch, src, assemble_f_2p(basis, a).f)
        assert reduced_power_2p(basis, ch, src, a) == pytest.approx(full, rel=1e-10)

    @given(seed=seeds, n_r=st.integers(1, 5))
    def test_projection_keeps_rate_and_saves_power(self, seed, n_r):
        rng = np.random.default_rng(seed)
        ch = sample_channels(Dims(2, 2, n_r), seed)
        src = random_sources(rng, ch.dims, 10.0, 10.0)
        f = 3 * cn(rng, n_r, n_r)
        basis = structure_2p(ch, src)
        proj = assemble_f_2p(basis, project_2p(basis, f))
        before = rate_2p(ch, src, RelayCombiner2P(f))
        after = rate_2p(ch, src, proj)
        assert relayed_sum(after) >= relayed_sum(before) - 1e-9
        assert after.relay_power_used <= before.relay_power_used + 1e-9


class TestStructure3P:
    def test_unit_vectors(self, fixture_223, rng):
        basis = structure_3p(fixture_223, random_sources(rng, fixture_223.dims, 5.0, 2.0))
        assert np.linalg.norm(basis.u_a) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(basis.u_b) == pytest.approx(1.0, abs=1e-12)

    def test_zero_parameters_give_direct_rates(self, fixture_223, rng):
        ch = fixture_223
        src = random_sources(rng, ch.dims, 3.0, 3.0)
        basis = structure_3p(ch, src)
        rep = rate_3p(ch, src, assemble_f_3p(basis, np.zeros(3), np.zeros(3)))
        assert rep.r_ab == pytest.approx(np.log2(1 + np.linalg.norm(ch.t_a @ src.q_a) ** 2) / 3)
        assert rep.r_ba == pytest.approx(np.log2(1 + np.linalg.norm(ch.t_b @ src.q_b) ** 2) / 3)

    @given(seed=seeds)
    def test_power_identity(self, seed):
        rng = np.random.default_rng(seed)
        ch = sample_channels(Dims(2, 3, 3), seed)
        src = random_sources(rng, ch.dims, 4.0, 9.0)
        basis = structure_3p(ch, src)
        a1, a2 = cn(rng, basis.a_len), cn(rng, basis.a_len)
        relay = assemble_f_3p(basis, a1, a2)
        full = relay_power_3p(ch, src, relay.f_a, relay.f_b)
        assert reduced_power_3p(ch, src, a1, a2) == pytest.approx(full, rel=1e-10)

    @given(seed=seeds, dims=dims_3p)
    def test_projection_keeps_rate_and_saves_power(self, seed, dims):
        rng = np.random.default_rng(seed)
        ch = sample_channels(dims, seed)
        src = random_sources(rng, dims, 10.0, 10.0)
        f_a, f_b = 3 * cn(rng, dims.n_r, dims.n_r), 3 * cn(rng, dims.n_r, dims.n_r)
        basis = structure_3p(ch, src)
        proj = assemble_f_3p(basis, *project_3p(basis, f_a, f_b))
        before = rate_3p(ch, src, RelayCombiner3P(f_a, f_b))
        after = rate_3p(ch, src, proj)
        assert relayed_sum(after) >= relayed_sum(before) - 1e-9
        assert after.relay_power_used <= before.relay_power_used + 1e-9


class TestGradients:
    @given(seed=seeds, n_r=st.integers(1, 4))
    @settings(max_examples=25)
    def test_two_phase_rate(self, seed, n_r):
        rng = np.random.default_rng(seed)
        ch = sample_channels(Dims(2, 2, n_r), seed)
        src = random_sources(rng, ch.dims, 3.0, 3.0)
        obj = TwoPhaseObjective(ch, src, structure_2p(ch, src))
        a = cn(rng, *obj.basis.a_shape)
        assert rel_err(real_gradient(obj.rate_grad(a)), fd_gradient(obj.rate, a)) < 1e-5
        assert rel_err(real_gradient(obj.power_grad(a)), fd_gradient(obj.power, a)) < 1e-5

    @given(seed=seeds, dims=dims_3p)
    @settings(max_examples=25)
    def test_three_phase_rate(self, seed, dims):
        rng = np.random.default_rng(seed)
        ch = sample_channels(dims, seed)
        src = random_sources(rng, dims, 3.0, 3.0)
        obj = ThreePhaseObjective(ch, src, structure_3p(ch, src))
        z = cn(rng, 2 * obj.n)
        assert rel_err(real_gradient(obj.rate_grad(z)), fd_gradient(obj.rate, z)) < 1e-5
        assert rel_err(real_gradient(obj.power_grad(z)), fd_gradient(obj.power, z)) < 1e-5

    def test_objective_matches_rate_2p(self, fixture_223, rng):
        src = random_sources(rng, fixture_223.dims)
        basis = structure_2p(fixture_223, src)
        obj = TwoPhaseObjective(fixture_223, src, basis)
        a = cn(rng, *basis.a_shape)
        rep = rate_2p(fixture_223, src, assemble_f_2p(basis, a))
        assert obj.rate(a) == pytest.approx(rep.r_ab + rep.r_ba, abs=1e-12)


class TestBarrier:
    def test_ascent_and_feasibility(self, fixture_223):
        src, _, _ = signal_align(fixture_223, 10.0, 10.0)
        basis = structure_2p(fixture_223, src)
        a0 = 1e-4 * cn(np.random.default_rng(1), *basis.a_shape)
        start = rate_2p(fixture_223, src, assemble_f_2p(basis, a0))
        a, rep = optimize_a_barrier(fixture_223, src, 100.0, a0=a0)
        assert rep.r_secrecy >= start.r_secrecy
        assert rep.relay_power_used <= 100.0 * (1 + 1e-6)
        assert rep.r_secrecy > 0

    def test_three_phase_feasibility(self, fixture_223, rng):
        src = random_sources(rng, fixture_223.dims, 10.0, 10.0)
        a1, a2, rep = optimize_a3_barrier(fixture_223, src, 100.0)
        assert rep.relay_power_used <= 100.0 * (1 + 1e-6)
        assert rep.relay_power_used == pytest.approx(reduced_power_3p(fixture_223, src, a1, a2))

    @pytest.mark.parametrize("p_r", [0.0, -1.0])
    def test_rejects_empty_budget(self, fixture_223, rng, p_r):
        src = random_sources(rng, fixture_223.dims)
        with pytest.raises(InfeasibleBudgetError):
            optimize_a_barrier(fixture_223, src, p_r)
        with pytest.raises(InfeasibleBudgetError):
            optimize_a3_barrier(fixture_223, src, p_r)

    def test_warm_start_never_loses(self, fixture_223, rng):
        src = random_sources(rng, fixture_223.dims, 10.0, 10.0)
        a, rep = optimize_a_barrier(fixture_223, src, 100.0)
        _, again = optimize_a_barrier(fixture_223, src, 100.0, a0=a)
        assert again.r_secrecy >= rep.r_secrecy - 1e-9

    def test_gradient_direction_option(self, fixture_223, rng):
        src = random_sources(rng, fixture_223.dims, 10.0, 10.0)
        _, rep = optimize_a_barrier(fixture_223, src, 100.0, OptimizerConfig(direction="gradient"))
        assert rep.relay_power_used <= 100.0 * (1 + 1e-6)
        assert relayed_sum(rep) > 0


class TestQuadraticForm:
    @given(seed=seeds, dim=st.integers(1, 4), p=st.floats(0.1, 10.0), s=st.floats(1e-3, 10.0))
    def test_matches_dual_bound(self, seed, dim, p, s):
        rng = np.random.default_rng(seed)
        q = cn(rng, dim, dim)
        q = q + q.conj().T
        e = cn(rng, dim, 2)
        e = e @ e.conj().T
        val, vec = max_quadratic_form(q, e, p, s)
        assert np.vdot(vec, vec).real <= p * (1 + 1e-9)
        assert np.vdot(vec, e @ vec).real <= s * (1 + 1e-9) + 1e-12
        assert val == pytest.approx(np.vdot(vec, q @ vec).real, abs=1e-9)
        bound = dual_bound(q, e, p, s)
        assert val <= bound + 1e-8 * max(1.0, abs(bound))
        assert val >= bound - 1e-6 * max(1.0, abs(bound))

    def test_zero_slack_uses_null_space(self):
        e = np.diag([1.0, 0.0])
        val, vec = max_quadratic_form(np.diag([5.0, 2.0]), e, 3.0, 0.0)
        assert val == pytest.approx(6.0)
        assert abs(vec[0]) == 0.0

    def test_negative_definite_gives_zero(self):
        val, vec = max_quadratic_form(-np.eye(2), np.eye(2), 1.0, 1.0)
        assert val == 0.0 and not np.any(vec)


class TestFractional:
    def test_zero_relay_returns_zero(self, fixture_223, rng):
        src = random_sources(rng, fixture_223.dims)
        q_b = optimize_qb_fractional(fixture_223, np.zeros((3, 3)), src.q_a, 1.0, 10.0, q_init=src.q_b)
        assert not np.any(q_b)

    def test_accepts_combiner(self, fixture_223, rng):
        src = random_sources(rng, fixture_223.dims)
        f = random_relay(rng, fixture_223, src, 50.0)
        a = optimize_qb_fractional(fixture_223, f, src.q_a, 2.0, 100.0)
        b = optimize_qb_fractional(fixture_223, RelayCombiner2P(f), src.q_a, 2.0, 100.0)
        np.testing.assert_allclose(a, b)

    def test_over_budget_relay(self, fixture_223, rng):
        src = random_sources(rng, fixture_223.dims)
        f = random_relay(rng, fixture_223, src, 200.0)
        with pytest.raises(InfeasibleBudgetError):
            optimize_qb_fractional(fixture_223, f, src.q_a, 1.0, 10.0)

    def test_ratio_tracks_secrecy_rate(self, fixture_223, rng):
        ch = fixture_223
        src = random_sources(rng, ch.dims, 5.0, 5.0)
        f = random_relay(rng, ch, src, 50.0)
        prob = ratio_problem_2p(ch, f, src.q_a, 5.0, 100.0)
        q1, q2 = src.q_b, 0.5 * src.q_b[::-1]

        def raw(q):
            rep = rate_2p(ch, SourceBeamformers(src.q_a, q), RelayCombiner2P(f))
            return rep.r_ab + rep.r_ba - rep.r_leak

        assert raw(q1) - raw(q2) == pytest.approx(0.5 * np.log2(prob.ratio(q1) / prob.ratio(q2)), abs=1e-10)

    def test_scalar_grid(self, rng):
        ch = sample_channels(Dims(2, 1, 3), 21)
        src = random_sources(rng, ch.dims, 3.0, 3.0)
        f = random_relay(rng, ch, src, 20.0)
        p_b, p_r = 3.0, 60.0
        prob = ratio_problem_2p(ch, f, src.q_a, p_b, p_r)
        q_b = optimize_qb_fractional(ch, f, src.q_a, p_b, p_r)
        m, n, e = prob.m[0, 0].real, prob.n[0, 0].real, prob.e[0, 0].real
        t = np.linspace(0.0, min(p_b, prob.s / e), 1_000_001)
        grid = ((prob.n0 + m * t) / (prob.d0 + n * t)).max()
        assert prob.ratio(q_b) == pytest.approx(grid, rel=1e-6)
        assert prob.ratio(q_b) >= grid * (1 - 1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_beats_sampling_oracle(self, fixture_223, seed):
        rng = np.random.default_rng(seed)
        ch = fixture_223
        src = random_sources(rng, ch.dims, 10.0, 10.0)
        f = random_relay(rng, ch, src, rng.uniform(20.0, 90.0))
        prob = ratio_problem_2p(ch, f, src.q_a, 10.0, 100.0)
        q_b = optimize_qb_fractional(ch, f, src.q_a, 10.0, 100.0)
        assert prob.feasible(q_b)
        gap = 0.5 * np.log2(prob.ratio(q_b) / ratio_sampling_oracle(prob, rng))
        assert gap >= -1e-3

    def test_three_phase_feasible_and_improving(self, fixture_223, rng):
        ch = fixture_223
        src = random_sources(rng, ch.dims, 10.0, 10.0)
        basis = structure_3p(ch, src)
        a1, a2, rep = optimize_a3_barrier(ch, src, 100.0)
        q_b = optimize_qb_fractional_3p(ch, basis, a1, a2, src.q_a, 10.0, 100.0, q_init=src.q_b)
        prob = ratio_problem_3p(ch, basis.v, a1, a2, src.q_a, 10.0, 100.0)
        assert prob.feasible(q_b)
        assert prob.ratio(q_b) >= prob.ratio(src.q_b) * (1 - 1e-12)

    def test_dinkelbach_respects_start(self):
        prob = RatioProblem(np.eye(2), np.zeros((2, 2)), 1.0, 1.0, np.zeros((2, 2)), 2.0, 0.0)
        q = maximize_ratio(prob)
        assert prob.ratio(q) == pytest.approx(3.0)


class TestAlignment:
    def test_fixture_unique_direction(self, fixture_223):
        src, beta, residual = signal_align(fixture_223, 10.0, 10.0)
        assert residual < 1e-10 and beta > 0
        assert np.linalg.norm(src.q_a) ** 2 == pytest.approx(10.0)
        assert np.linalg.norm(src.q_b) ** 2 == pytest.approx(10.0)

    def test_infeasible_dims(self):
        ch = sample_channels(Dims(2, 5, 7), 0)
        with pytest.raises(AlignmentInfeasibleError):
            signal_align(ch, 1.0, 1.0)

    def test_identical_channels(self, rng):
        h = cn(rng, 2, 2)
        ch = ChannelSet.from_forward(h, h, cn(rng, 2, 2))
        src, beta, residual = signal_align(ch, 4.0, 1.0)
        assert residual < 1e-12
        assert beta == pytest.approx(np.sqrt(1.0 / 4.0))

    @given(seed=seeds)
    def test_multi_dim_null_space_is_optimal(self, seed):
        ch = sample_channels(Dims(3, 3, 3), seed)
        src, _, residual = signal_align(ch, 2.0, 5.0)
        assert residual < 1e-8
        best = aligned_rate_bits(np.linalg.norm(ch.h_a @ src.q_a) ** 2,
                                 np.linalg.norm(ch.h_b @ src.q_b) ** 2)
        # any other aligned pair from the null space does no better
        rng = np.random.default_rng(seed)
        stacked = np.hstack([ch.h_a, -ch.h_b])
        null = np.linalg.svd(stacked)[2][3:].conj().T
        for _ in range(200):
            z = null @ cn(rng, null.shape[1])
            za, zb = z[:3], z[3:]
            a2 = 2.0 * np.linalg.norm(ch.h_a @ za) ** 2 / np.linalg.norm(za) ** 2
            b2 = 5.0 * np.linalg.norm(ch.h_b @ zb) ** 2 / np.linalg.norm(zb) ** 2
            assert aligned_rate_bits(a2, b2) <= best + 1e-9

    def test_zero_power(self, fixture_223):
        src, beta, _ = signal_align(fixture_223, 0.0, 1.0)
        assert not np.any(src.q_a) and beta == 0.0

    def test_aligned_rate_bits_edges(self):
        assert aligned_rate_bits(0.0, 1.0) == -np.inf
        assert aligned_rate_bits(2.0, 2.0) == pytest.approx(0.0)


def monotone(trace, tol=1e-8) -> bool:
    return all(b >= a - tol for a, b in zip(trace, trace[1:]))


@pytest.fixture(scope="module")
def reference_setup():
    return paper_fixture(Dims(2, 2, 3)), PowerBudget.from_db(10, 10, 30)


class TestAlgorithms:
    def test_algorithm1_monotone_and_feasible(self, reference_setup):
        ch, budget = reference_setup
        res = algorithm1(ch, budget, OptimizerConfig(restarts=3))
        for trace in res.restart_traces:
            assert monotone(trace)
        assert res.sources.within(budget, 1e-6)
        assert res.report.relay_power_used <= budget.p_r * (1 + 1e-6)
        assert res.report.r_secrecy == pytest.approx(max(t[-1] for t in res.restart_traces))
        assert res.restart_inits[:2] == ["align", "lowpower"]

    def test_algorithm1_unpacks(self, reference_setup):
        ch, budget = reference_setup
        src, relay, rep, trace = algorithm1(ch, budget, FAST)
        assert isinstance(relay, RelayCombiner2P) and rep.r_secrecy == trace[-1]

    def test_zero_budget(self, fixture_223):
        res = algorithm1(fixture_223, PowerBudget(0.0, 0.0, 0.0))
        assert res.report.r_secrecy == 0.0 and res.iterations == 0
        res = algorithm2(fixture_223, PowerBudget(0.0, 0.0, 0.0))
        assert res.report.r_secrecy == 0.0 and res.iterations == 0

    def test_algorithm2_without_relay_is_direct(self, fixture_223):
        res = algorithm2(fixture_223, PowerBudget(10.0, 10.0, 0.0))
        assert res.report.relay_power_used == 0.0
        assert res.report.r_secrecy >= 0.0

    def test_algorithm2_monotone_and_feasible(self, reference_setup):
        ch, budget = reference_setup
        res = algorithm2(ch, budget, OptimizerConfig(restarts=3))
        for trace in res.restart_traces:
            assert monotone(trace)
        assert res.sources.within(budget, 1e-6)
        assert res.report.relay_power_used <= budget.p_r * (1 + 1e-6)
        assert isinstance(res.relay, RelayCombiner3P)

    def test_unknown_init(self, reference_setup):
        with pytest.raises(ValueError):
            algorithm1(*reference_setup, FAST, init="magic")

    def test_deterministic(self, reference_setup):
        a = algorithm1(*reference_setup, FAST)
        b = algorithm1(*reference_setup, FAST)
        assert a.report == b.report and a.trace == b.trace

    def test_aligned_2p_keeps_sources(self, reference_setup):
        ch, budget = reference_setup
        res = aligned_2p(ch, budget, FAST.replace(restarts=2))
        src, _, _ = signal_align(ch, budget.p_a, budget.p_b)
        np.testing.assert_allclose(res.sources.q_a, src.q_a)
        assert res.report.relay_power_used <= budget.p_r * (1 + 1e-6)

    def test_alignment_init_converges_no_slower(self, reference_setup):
        ch, budget = reference_setup
        aligned, random = [], []
        for seed in range(20):
            cfg = OptimizerConfig(restarts=1, seed=seed)
            aligned.append(algorithm1(ch, budget, cfg, init="align").iterations)
            random.append(algorithm1(ch, budget, cfg, init="random").iterations)
        assert np.median(aligned) <= np.median(random)
