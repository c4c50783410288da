"""Source-beamformer step: a ratio of quadratics under two quadratic limits.

Every source update in both alternating algorithms reduces to

    maximize   (n0 + q^H M q) / (d0 + q^H N q)
    subject to q^H q <= P,   q^H E q <= s

with Hermitian ``M``, ``N``, ``E`` (``E`` and ``d0 I + N`` positive
semidefinite / definite). The ratio is handled by Dinkelbach iterations on
the level ``tau``; each level asks for the maximum of the homogeneous form
``q^H (M - tau N) q`` over the same constraints. That inner problem has an
exact convex dual in two multipliers,

    phi(y) = P [lambda_max(Q - y E)]^+ + s y,

which is minimized by bisection on ``y``. A rank-one primal point with the
dual value is rebuilt from the eigenvectors at the ends of the bracket.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.optimize import minimize_scalar

from ..channels import ChannelSet
from ..errors import InfeasibleBudgetError
from ..matkit import hermitian_part
from ..schemes import _sq
from .structure import StructureBasis3P

RATIO_RTOL = 1e-13


@dataclass(frozen=True)
class RatioProblem:
    m: np.ndarray
    n: np.ndarray
    n0: float
    d0: float
    e: np.ndarray
    p: float
    s: float

    def ratio(self, q: np.ndarray) -> float:
        num = self.n0 + np.vdot(q, self.m @ q).real
        den = self.d0 + np.vdot(q, self.n @ q).real
        return num / den

    def feasible(self, q: np.ndarray, rtol: float = 1e-8) -> bool:
        return _sq(q) <= self.p * (1 + rtol) + 1e-300 and np.vdot(q, self.e @ q).real <= (
            self.s * (1 + rtol) + rtol * 1e-12
        )


def _top(q_mat: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(q_mat)
    return float(w[-1]), v[:, -1]


def _clip_to_feasible(q: np.ndarray, e: np.ndarray, p: float, s: float) -> np.ndarray:
    scale = 1.0
    nq = _sq(q)
    if nq > p:
        scale = min(scale, np.sqrt(p / nq))
    eq = np.vdot(q, e @ q).real
    if eq > s:
        scale = min(scale, np.sqrt(max(s, 0.0) / eq))
    return q * scale


def max_quadratic_form(
    q_mat: np.ndarray, e: np.ndarray, p: float, s: float, iters: int = 200
) -> tuple[float, np.ndarray]:
    """Maximize ``q^H Q q`` subject to ``q^H q <= p`` and ``q^H E q <= s``.

    Returns the value and a feasible maximizer. ``q = 0`` is returned when
    no direction gives a positive value.
    """
    q_mat = hermitian_part(np.asarray(q_mat, dtype=complex))
    e = hermitian_part(np.asarray(e, dtype=complex))
    dim = q_mat.shape[0]
    zero = np.zeros(dim, complex)
    if p <= 0:
        return 0.0, zero
    lam0, v0 = _top(q_mat)
    if lam0 <= 0:
        return 0.0, zero
    if p * np.vdot(v0, e @ v0).real <= s:
        return p * lam0, np.sqrt(p) * v0
    if s <= 0:
        # only directions in the null space of E remain feasible
        w, vecs = np.linalg.eigh(e)
        tol = dim * np.finfo(float).eps * max(abs(w[-1]), 1.0)
        basis = vecs[:, w <= tol]
        if basis.shape[1] == 0:
            return 0.0, zero
        lam, y = _top(basis.conj().T @ q_mat @ basis)
        if lam <= 0:
            return 0.0, zero
        return p * lam, np.sqrt(p) * (basis @ y)

    def probe(y):
        lam, v = _top(q_mat - y * e)
        return lam, v, p * np.vdot(v, e @ v).real

    lo, hi = 0.0, p * lam0 / s
    v_lo = v0
    lam_hi, v_hi, _ = probe(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lam, v, pe = probe(mid)
        # subgradient of phi at mid: s - P v^H E v when lam > 0, else s
        if lam > 0 and pe > s:
            lo, v_lo = mid, v
        else:
            hi, lam_hi, v_hi = mid, lam, v
        if hi - lo <= 1e-15 * hi:
            break

    candidates = []
    # slack power limit: scale the low-end vector onto the E boundary
    e_lo = np.vdot(v_lo, e @ v_lo).real
    if e_lo > 0:
        candidates.append(_clip_to_feasible(np.sqrt(s / e_lo) * v_lo, e, p, s))
    if lam_hi > 0:
        # both limits tight: rotate between the two ends until q^H E q = s
        ph = np.vdot(v_lo, v_hi)
        v_hi_al = v_hi * (np.conj(ph) / abs(ph) if abs(ph) > 0 else 1.0)

        def excess(theta):
            u = np.cos(theta) * v_lo + np.sin(theta) * v_hi_al
            u = u / np.linalg.norm(u)
            return p * np.vdot(u, e @ u).real - s, u

        a, b = 0.0, np.pi / 2
        if excess(b)[0] <= 0:
            for _ in range(100):
                c = 0.5 * (a + b)
                if excess(c)[0] > 0:
                    a = c
                else:
                    b = c
            candidates.append(_clip_to_feasible(np.sqrt(p) * excess(b)[1], e, p, s))
        candidates.append(_clip_to_feasible(np.sqrt(p) * v_hi, e, p, s))
    candidates.append(_clip_to_feasible(np.sqrt(p) * v0, e, p, s))
    values = [np.vdot(c, q_mat @ c).real for c in candidates]
    k = int(np.argmax(values))
    best_val = values[k]
    if best_val <= 0:
        return 0.0, zero
    return float(best_val), candidates[k]


def dual_bound(q_mat: np.ndarray, e: np.ndarray, p: float, s: float) -> float:
    """Upper bound on :func:`max_quadratic_form` from a 1-D convex dual."""
    q_mat = hermitian_part(np.asarray(q_mat, dtype=complex))
    e = hermitian_part(np.asarray(e, dtype=complex))
    lam0 = sla.eigvalsh(q_mat)[-1]
    if lam0 <= 0 or p <= 0:
        return 0.0
    if s <= 0:
        return np.inf
    phi = lambda y: p * max(sla.eigvalsh(q_mat - y * e)[-1], 0.0) + s * y  # noqa: E731
    res = minimize_scalar(phi, bounds=(0.0, p * lam0 / s), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, phi(0.0)))


def maximize_ratio(prob: RatioProblem, q_init: np.ndarray | None = None,
                   max_iters: int = 100) -> np.ndarray:
    """Dinkelbach iterations for :class:`RatioProblem`.

    The result is feasible and its ratio is at least that of ``q_init``
    (when feasible) and of ``q = 0``; ties go to ``q = 0``.
    """
    dim = prob.m.shape[0]
    best = np.zeros(dim, complex)
    tau = prob.ratio(best)
    if q_init is not None:
        q_init = np.asarray(q_init, dtype=complex).reshape(-1)
        if prob.feasible(q_init):
            q_init = _clip_to_feasible(q_init, prob.e, prob.p, max(prob.s, 0.0))
            r = prob.ratio(q_init)
            if r > tau * (1 + RATIO_RTOL):
                best, tau = q_init, r
    for _ in range(max_iters):
        val, q = max_quadratic_form(prob.m - tau * prob.n, prob.e, prob.p, prob.s)
        gain = prob.n0 - tau * prob.d0 + val
        if gain <= RATIO_RTOL * abs(tau * prob.d0):
            break
        r = prob.ratio(q)
        if r <= tau * (1 + RATIO_RTOL):
            break
        best, tau = q, r
    return best


# --- problem builders ----------------------------------------------------


def ratio_problem_2p(
    ch: ChannelSet, f: np.ndarray, q_a: np.ndarray, p_b: float, p_r: float
) -> RatioProblem:
    """Two-phase secrecy objective in ``q_B`` with ``F`` and ``q_A`` fixed.

    Up to terms constant in ``q_B`` the secrecy sum rate is half the log of

        (1 + q^H H_B^H F^H G_A^H K_A^{-1} G_A F H_B q)
        / (1 + a + q^H H_B^H ((1 + a) I - h_A h_A^H) H_B q),

    with ``h_A = H_A q_A``, ``a = |h_A|^2`` and ``K_A = G_A F F^H G_A^H + I``.
    """
    f = np.asarray(f, dtype=complex)
    h_a = ch.h_a @ q_a
    a = _sq(h_a)
    gaf = ch.g_a @ f
    k_a = gaf @ gaf.conj().T + np.eye(ch.dims.n_a)
    s_mat = gaf @ ch.h_b
    m = s_mat.conj().T @ np.linalg.solve(k_a, s_mat)
    n = ch.h_b.conj().T @ ((1 + a) * np.eye(ch.dims.n_r) - np.outer(h_a, h_a.conj())) @ ch.h_b
    fh = f @ ch.h_b
    e = fh.conj().T @ fh
    s = p_r - float(np.sum(np.abs(f) ** 2)) - _sq(f @ h_a)
    return RatioProblem(hermitian_part(m), hermitian_part(n), 1.0, 1.0 + a, hermitian_part(e), p_b, s)


def _checked_slack(s: float, p_r: float) -> float:
    if s < -1e-9 * max(p_r, 1.0):
        raise InfeasibleBudgetError(
            f"relay budget exhausted by the fixed terms (slack {s:.3g}); shrink q_a or F"
        )
    return max(s, 0.0)


def optimize_qb_fractional(
    ch: ChannelSet,
    f,
    q_a: np.ndarray,
    p_b: float,
    p_r: float,
    q_init: np.ndarray | None = None,
) -> np.ndarray:
    """Best ``q_B`` for the two-phase secrecy sum rate with ``F`` and ``q_A`` fixed.

    ``f`` is a relay matrix or anything with an ``f`` attribute. Swap the
    channel set to update ``q_A`` instead.

    Raises
    ------
    InfeasibleBudgetError
        If ``F`` and ``q_A`` alone exceed the relay budget.
    """
    f = np.asarray(getattr(f, "f", f), dtype=complex)
    q_a = np.asarray(q_a, dtype=complex).reshape(-1)
    prob = ratio_problem_2p(ch, f, q_a, p_b, p_r)
    prob = RatioProblem(prob.m, prob.n, prob.n0, prob.d0, prob.e, prob.p, _checked_slack(prob.s, p_r))
    return maximize_ratio(prob, q_init)


def ratio_problem_3p(
    ch: ChannelSet,
    basis_v: np.ndarray,
    a1: np.ndarray,
    a2: np.ndarray,
    q_a: np.ndarray,
    p_b: float,
    p_r: float,
) -> RatioProblem:
    """Three-phase secrecy objective in ``q_B`` with ``a_1``, ``a_2`` and ``q_A`` fixed.

    With ``w_2 = G_A V a_2`` and ``kappa = w_2^H K_A^{-1} w_2`` the terms
    that move with ``q_B`` are a third of the log of

        (1 + q^H (T_B^H T_B + kappa H_B^H H_B) q) / (1 + q^H H_B^H H_B q),

    and the relay budget reads ``|a_2|^2 q^H H_B^H H_B q <= P_R - (1 + beta_A^2)|a_1|^2 - |a_2|^2``.
    """
    w_a = ch.g_a @ basis_v
    w1, w2 = w_a @ a1, w_a @ a2
    k_a = np.outer(w1, w1.conj()) + np.outer(w2, w2.conj()) + np.eye(ch.dims.n_a)
    kappa = np.vdot(w2, np.linalg.solve(k_a, w2)).real
    hbh = ch.h_b.conj().T @ ch.h_b
    m = ch.t_b.conj().T @ ch.t_b + kappa * hbh
    beta2_a = _sq(ch.h_a @ q_a)
    s = p_r - (1 + beta2_a) * _sq(a1) - _sq(a2)
    return RatioProblem(hermitian_part(m), hermitian_part(hbh), 1.0, 1.0, _sq(a2) * hermitian_part(hbh), p_b, s)


def optimize_qb_fractional_3p(
    ch: ChannelSet,
    basis: StructureBasis3P,
    a1: np.ndarray,
    a2: np.ndarray,
    q_a: np.ndarray,
    p_b: float,
    p_r: float,
    q_init: np.ndarray | None = None,
) -> np.ndarray:
    """Three-phase analogue of :func:`optimize_qb_fractional` with ``a_1``, ``a_2`` fixed.

    ``u_B`` is re-derived from the new ``q_B``, so ``F_B = V a_2 u_B^H``
    follows the source.
    """
    prob = ratio_problem_3p(ch, basis.v, a1, a2, np.asarray(q_a, complex).reshape(-1), p_b, p_r)
    prob = RatioProblem(prob.m, prob.n, prob.n0, prob.d0, prob.e, prob.p, _checked_slack(prob.s, p_r))
    return maximize_ratio(prob, q_init)
