"""Log-barrier search over the reduced relay parameters.

The relay-power limit ``p(A) <= P_R`` is folded into the objective

    B(A, mu) = -(R_AB + R_BA) - mu * ln(P_R - p(A))

and ``B`` is minimized for a decreasing sequence of ``mu``. The leak term
does not depend on the relay matrix, so it is left out of ``B``. Gradients
are Wirtinger derivatives with respect to the conjugate parameter; the
real gradient over ``(Re A, Im A)`` is ``2 (Re g, Im g)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..channels import ChannelSet
from ..errors import InfeasibleBudgetError
from ..schemes import LOG2E, RateReport, SourceBeamformers, rate_2p, rate_3p
from .config import OptimizerConfig
from .structure import (
    StructureBasis2P,
    StructureBasis3P,
    assemble_f_2p,
    assemble_f_3p,
    structure_2p,
    structure_3p,
)

# the returned point is pulled to this fraction of P_R; scaling up never hurts the sum rate
BOUNDARY_FRACTION = 1.0 - 1e-12
# an inner barrier stage ends once a step lowers B by less than this (relative)
INNER_RTOL = 1e-9


@dataclass
class _Problem:
    """A smooth rate ``rate(z)``, its conjugate gradient and a quadratic power ``power(z)``."""

    rate: Callable[[np.ndarray], float]
    rate_grad: Callable[[np.ndarray], np.ndarray]
    power: Callable[[np.ndarray], float]
    power_grad: Callable[[np.ndarray], np.ndarray]
    p_max: float

    def barrier(self, z: np.ndarray, mu: float) -> float:
        slack = self.p_max - self.power(z)
        if not slack > 0:
            return np.inf
        return -self.rate(z) - mu * np.log(slack)

    def barrier_grad(self, z: np.ndarray, mu: float) -> np.ndarray:
        slack = self.p_max - self.power(z)
        return -self.rate_grad(z) + mu * self.power_grad(z) / slack


# --- two-phase -----------------------------------------------------------


class TwoPhaseObjective:
    """Sum rate and power of ``F = V A U^H`` for fixed sources."""

    def __init__(self, ch: ChannelSet, src: SourceBeamformers, basis: StructureBasis2P):
        self.basis = basis
        self.v = basis.v
        self.uh = basis.u.conj().T
        self.h_a = ch.h_a @ src.q_a
        self.h_b = ch.h_b @ src.q_b
        self.g_a = ch.g_a
        self.g_b = ch.g_b
        c_a = self.uh @ self.h_a
        c_b = self.uh @ self.h_b
        self.m = np.outer(c_a, c_a.conj()) + np.outer(c_b, c_b.conj()) + np.eye(len(c_a))

    def f(self, a: np.ndarray) -> np.ndarray:
        return self.v @ a @ self.uh

    def _terms(self, f: np.ndarray):
        # (signal through G_other, G_other, source signal) for A->B then B->A
        for g, h in ((self.g_b, self.h_a), (self.g_a, self.h_b)):
            gf = g @ f
            k = gf @ gf.conj().T + np.eye(g.shape[0])
            yield g, h, gf, k

    def rate(self, a: np.ndarray) -> float:
        total = 0.0
        for _, h, gf, k in self._terms(self.f(a)):
            s = gf @ h
            x = np.vdot(s, np.linalg.solve(k, s)).real
            total += 0.5 * np.log2(1.0 + max(x, 0.0))
        return total

    def rate_grad(self, a: np.ndarray) -> np.ndarray:
        """Conjugate gradient of R_AB + R_BA in the full-matrix form.

        For each direction with signal ``h`` received through ``G``:
        dx/dF^* = G^H K^{-1} G F h h^H - G^H K^{-1} G F h h^H F^H G^H K^{-1} G F,
        mapped to ``A`` as ``V^H (dx/dF^*) U``.
        """
        f = self.f(a)
        grad = np.zeros_like(a)
        for g, h, gf, k in self._terms(f):
            kinv = np.linalg.inv(k)
            gkg = g.conj().T @ kinv @ g
            fh = f @ h
            x = np.vdot(fh, gkg @ fh).real
            hh = np.outer(h, h.conj())
            dxdf = gkg @ f @ hh - gkg @ f @ hh @ f.conj().T @ gkg @ f
            grad += 0.5 * LOG2E / (1.0 + x) * (self.v.conj().T @ dxdf @ self.uh.conj().T)
        return grad

    def power(self, a: np.ndarray) -> float:
        return float(np.trace(a @ self.m @ a.conj().T).real)

    def power_grad(self, a: np.ndarray) -> np.ndarray:
        return a @ self.m


# --- three-phase ---------------------------------------------------------


class ThreePhaseObjective:
    """Sum rate and power of ``F_i = V a_i u_i^H`` for fixed sources.

    The parameter vector stacks ``(a_1, a_2)``. With ``W = G V``,
    ``w = W a_s`` and ``K = W (a_1 a_1^H + a_2 a_2^H) W^H + I`` the relayed
    term of one direction is ``x = beta^2 w^H K^{-1} w`` and

        dx/da_s^* =  beta^2 W^H K^{-1} w (1 - w^H K^{-1} w)
        dx/da_o^* = -beta^2 (w^H K^{-1} W a_o) W^H K^{-1} w

    where ``a_s`` carries the signal and ``a_o`` the other source.
    """

    def __init__(self, ch: ChannelSet, src: SourceBeamformers, basis: StructureBasis3P):
        self.basis = basis
        self.n = basis.a_len
        self.w_a = ch.g_a @ basis.v
        self.w_b = ch.g_b @ basis.v
        self.beta2_a = float(np.linalg.norm(ch.h_a @ src.q_a) ** 2)
        self.beta2_b = float(np.linalg.norm(ch.h_b @ src.q_b) ** 2)
        self.d_ab = float(np.linalg.norm(ch.t_a @ src.q_a) ** 2)
        self.d_ba = float(np.linalg.norm(ch.t_b @ src.q_b) ** 2)
        self.weights = np.concatenate(
            [np.full(self.n, 1.0 + self.beta2_a), np.full(self.n, 1.0 + self.beta2_b)]
        )

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[: self.n], z[self.n :]

    def _directions(self, z: np.ndarray):
        a1, a2 = self.split(z)
        # (W seen by receiver, beta^2, direct gain, signal index)
        yield self.w_b, self.beta2_a, self.d_ab, 0, a1, a2
        yield self.w_a, self.beta2_b, self.d_ba, 1, a2, a1

    @staticmethod
    def _kinv_w(w_mat, a_s, a_o):
        w = w_mat @ a_s
        wo = w_mat @ a_o
        k = np.outer(w, w.conj()) + np.outer(wo, wo.conj()) + np.eye(w_mat.shape[0])
        kinv = np.linalg.inv(k)
        return w, wo, kinv

    def rate(self, z: np.ndarray) -> float:
        total = 0.0
        for w_mat, b2, d, _, a_s, a_o in self._directions(z):
            w, _, kinv = self._kinv_w(w_mat, a_s, a_o)
            x = b2 * np.vdot(w, kinv @ w).real
            total += np.log2(1.0 + d + x) / 3.0
        return total

    def rate_grad(self, z: np.ndarray) -> np.ndarray:
        grad = np.zeros(2 * self.n, dtype=complex)
        for w_mat, b2, d, idx, a_s, a_o in self._directions(z):
            w, wo, kinv = self._kinv_w(w_mat, a_s, a_o)
            kw = kinv @ w
            wkw = np.vdot(w, kw).real
            x = b2 * wkw
            scale = LOG2E / (3.0 * (1.0 + d + x))
            base = w_mat.conj().T @ kw
            g_s = b2 * base * (1.0 - wkw)
            g_o = -b2 * np.vdot(kw, wo) * base
            s_slice = slice(0, self.n) if idx == 0 else slice(self.n, 2 * self.n)
            o_slice = slice(self.n, 2 * self.n) if idx == 0 else slice(0, self.n)
            grad[s_slice] += scale * g_s
            grad[o_slice] += scale * g_o
        return grad

    def power(self, z: np.ndarray) -> float:
        return float(np.sum(self.weights * np.abs(z) ** 2))

    def power_grad(self, z: np.ndarray) -> np.ndarray:
        return self.weights * z


# --- descent -------------------------------------------------------------


def _as_real(z: np.ndarray) -> np.ndarray:
    flat = z.reshape(-1)
    return np.concatenate([flat.real, flat.imag])


def _as_complex(x: np.ndarray, shape) -> np.ndarray:
    n = x.size // 2
    return (x[:n] + 1j * x[n:]).reshape(shape)


def barrier_descent(
    prob: _Problem, z0: np.ndarray, cfg: OptimizerConfig, mu0: float | None = None
) -> tuple[np.ndarray, int]:
    """Minimize the barrier for a shrinking ``mu``; return the best-rate iterate.

    ``z0`` must satisfy ``power(z0) < p_max``. The returned point has a rate
    no lower than that of ``z0``.
    """
    shape = z0.shape
    x = _as_real(z0)
    best, best_rate = z0.copy(), prob.rate(z0)
    mu = cfg.barrier_mu0 if mu0 is None else mu0
    steps = 0

    def value(xr):
        return prob.barrier(_as_complex(xr, shape), mu)

    def gradient(xr):
        g = prob.barrier_grad(_as_complex(xr, shape), mu)
        return 2.0 * _as_real(g)

    while mu >= cfg.barrier_mu_min:
        h_inv = None
        fx = value(x)
        gx = gradient(x)
        for _ in range(cfg.max_inner_iters):
            gnorm = np.linalg.norm(gx)
            if gnorm == 0 or not np.isfinite(gnorm):
                break
            if cfg.direction == "bfgs" and h_inv is not None:
                d = -h_inv @ gx
                if d @ gx >= 0:
                    h_inv, d = None, -gx
            else:
                d = -gx
            t = 1.0 if h_inv is not None else cfg.step_init * (1.0 + np.linalg.norm(x)) / gnorm
            slope = d @ gx
            accepted = False
            for _ in range(60):
                xn = x + t * d
                fn = value(xn)
                if fn <= fx + cfg.armijo_c * t * slope:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break
            gn = gradient(xn)
            s, y = xn - x, gn - gx
            decrease = fx - fn
            x, fx, gx = xn, fn, gn
            steps += 1
            if cfg.direction == "bfgs":
                sy = s @ y
                if sy > 1e-16 * np.linalg.norm(s) * np.linalg.norm(y):
                    if h_inv is None:
                        h_inv = np.eye(x.size) * (sy / (y @ y))
                    rho = 1.0 / sy
                    hy = h_inv @ y
                    h_inv = (
                        h_inv
                        - rho * (np.outer(s, hy) + np.outer(hy, s))
                        + (rho * rho * (y @ hy) + rho) * np.outer(s, s)
                    )
            z = _as_complex(x, shape)
            r = prob.rate(z)
            if r > best_rate:
                best, best_rate = z.copy(), r
            if decrease <= INNER_RTOL * (1.0 + abs(fx)):
                break
        mu *= cfg.barrier_shrink
    return best, steps


def _interior_start(z0: np.ndarray, prob: _Problem, frac: float = 0.5) -> np.ndarray:
    p = prob.power(z0)
    if p < prob.p_max * (1 - 1e-3):
        return z0
    return z0 * np.sqrt(frac * prob.p_max / p)


def _to_boundary(z: np.ndarray, prob: _Problem) -> np.ndarray:
    p = prob.power(z)
    if p <= 0:
        return z
    return z * np.sqrt(BOUNDARY_FRACTION * prob.p_max / p)


def _random_start(shape, prob: _Problem, rng: np.random.Generator, frac: float) -> np.ndarray:
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    p = prob.power(z)
    return z * np.sqrt(frac * prob.p_max / p)


def _run(prob: _Problem, z0, shape, cfg: OptimizerConfig, mu0, rng) -> tuple[np.ndarray, int]:
    if z0 is not None:
        z0 = np.asarray(z0, dtype=complex).reshape(shape)
    if z0 is None or prob.power(z0) == 0:
        # the origin is a stationary point of the rate, so it is never a useful start
        z0 = _random_start(shape, prob, rng, 1e-3)
    # the unscaled start competes too when it is already feasible
    candidates = []
    p0 = prob.power(z0)
    if p0 <= prob.p_max:
        candidates.append(z0)
    elif p0 <= prob.p_max * (1 + 1e-9):
        # round-off from the source updates; pulling back onto the boundary costs nothing
        candidates.append(_to_boundary(z0, prob))
    start = _interior_start(z0, prob)
    z, steps = barrier_descent(prob, start, cfg, mu0)
    candidates.append(z)
    best = max(candidates, key=prob.rate)
    return _to_boundary(best, prob), steps


def optimize_a_barrier(
    ch: ChannelSet,
    src: SourceBeamformers,
    p_r: float,
    cfg: OptimizerConfig = OptimizerConfig(),
    a0: np.ndarray | None = None,
    mu0: float | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, RateReport]:
    """Relay parameter ``A`` for fixed sources in the two-phase scheme.

    Parameters
    ----------
    a0 : optional start; scaled into the interior when needed.
    mu0 : optional first barrier weight overriding ``cfg.barrier_mu0``.
    """
    if not p_r > 0:
        raise InfeasibleBudgetError(f"relay power must be positive, got {p_r}")
    basis = structure_2p(ch, src)
    obj = TwoPhaseObjective(ch, src, basis)
    prob = _Problem(obj.rate, obj.rate_grad, obj.power, obj.power_grad, p_r)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    a, _ = _run(prob, a0, basis.a_shape, cfg, mu0, rng)
    return a, rate_2p(ch, src, assemble_f_2p(basis, a))


def optimize_a3_barrier(
    ch: ChannelSet,
    src: SourceBeamformers,
    p_r: float,
    cfg: OptimizerConfig = OptimizerConfig(),
    a0: tuple[np.ndarray, np.ndarray] | None = None,
    mu0: float | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray, RateReport]:
    """Relay parameters ``(a_1, a_2)`` for fixed sources in the three-phase scheme."""
    if not p_r > 0:
        raise InfeasibleBudgetError(f"relay power must be positive, got {p_r}")
    basis = structure_3p(ch, src)
    obj = ThreePhaseObjective(ch, src, basis)
    prob = _Problem(obj.rate, obj.rate_grad, obj.power, obj.power_grad, p_r)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    z0 = None if a0 is None else np.concatenate([np.ravel(a0[0]), np.ravel(a0[1])])
    z, _ = _run(prob, z0, (2 * basis.a_len,), cfg, mu0, rng)
    a1, a2 = obj.split(z)
    return a1, a2, rate_3p(ch, src, assemble_f_3p(basis, a1, a2))
