"""Closed-form secrecy sum rates in limiting power regimes, and a scheme recommender.

"High" results take the relay power to infinity. Branches that keep
growing with the source powers are evaluated at the supplied finite powers
and flagged ``diverges=True``. "Low" results are first-order expansions in
small source power.

Three-phase formulas take the energy-normalized power ``P_i``: the
three-phase scheme itself transmits ``3/2 P_i`` so that every scheme spends
the same energy per exchanged message pair (see
:meth:`PowerBudget.energy_normalized_3p`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, Dims
from .errors import ConfigError, UncoveredRegimeError
from .matkit import max_eig_hermitian, max_gen_eig, max_singular, null_space_projector, qr_orthonormal
from .optimize.alignment import aligned_rate_bits, signal_align
from .schemes import SourceBeamformers

__all__ = [
    "AsymptoteResult",
    "RegimeSpec",
    "Recommendation",
    "asym_2p_high",
    "asym_3p_high",
    "asym_dt_high",
    "asym_2p_low",
    "asym_3p_low",
    "asym_dt_low",
    "dt_rate_closed_form",
    "recommend_scheme",
]

LN2 = math.log(2.0)
REGIMES = ("high", "low", "finite")


@dataclass(frozen=True)
class AsymptoteResult:
    scheme: str
    value: float
    lower: float
    upper: float
    diverges: bool = False
    notes: str = ""

    def __post_init__(self):
        if self.scheme not in ("dt", "2p", "3p"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        finite = all(np.isfinite(x) for x in (self.lower, self.value, self.upper))
        if finite and not self.lower - 1e-12 <= self.value <= self.upper + 1e-12:
            raise ValueError("value lies outside [lower, upper]")
        if not finite and not self.diverges:
            raise ValueError("infinite bounds require diverges=True")

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol


def _point(scheme: str, value: float, diverges: bool = False, notes: str = "") -> AsymptoteResult:
    return AsymptoteResult(scheme, value, value, value, diverges, notes)


def _directions(ch: ChannelSet, p_a: float, p_b: float):
    yield ch.t_a, ch.h_a, p_a
    yield ch.t_b, ch.h_b, p_b


def _pencil_max(t: np.ndarray, h: np.ndarray) -> float:
    """``lambda_max(T^H T, H^H H)``; needs ``H`` with full column rank."""
    return max_gen_eig(t.conj().T @ t, h.conj().T @ h).value


def _null_gain(t: np.ndarray, h: np.ndarray) -> float:
    """``lambda_max(P T^H T P)`` with ``P`` the projector onto null(H)."""
    proj = null_space_projector(h)
    return max(max_eig_hermitian(proj @ t.conj().T @ t @ proj).value, 0.0)


def _log2_pos(x: float) -> float:
    return max(0.0, math.log2(x)) if x > 0 else 0.0


# --- relay power -> infinity ---------------------------------------------


def asym_2p_high(ch: ChannelSet, p_a: float, p_b: float) -> AsymptoteResult:
    """Two-phase limit.

    With more source antennas than relay antennas the signals can be
    aligned and the rate grows without bound; otherwise it saturates at
    ``1/2 log2(1 / (1 - sigma^2))`` with ``sigma`` the cosine of the
    smallest principal angle between the column spaces of ``H_A``, ``H_B``.
    """
    d = ch.dims
    if d.n_a + d.n_b > d.n_r:
        src, _, _ = signal_align(ch, p_a, p_b)
        a2 = float(np.linalg.norm(ch.h_a @ src.q_a) ** 2)
        b2 = float(np.linalg.norm(ch.h_b @ src.q_b) ** 2)
        value = aligned_rate_bits(a2, b2) if a2 > 0 and b2 > 0 else 0.0
        return _point("2p", max(value, 0.0), True, "aligned sources; grows with source power")
    u_a, _ = qr_orthonormal(ch.h_a)
    u_b, _ = qr_orthonormal(ch.h_b)
    sigma = min(max_singular(u_a.conj().T @ u_b), 1.0)
    value = 0.5 * math.log2(1.0 / (1.0 - sigma**2)) if sigma < 1 else math.inf
    return AsymptoteResult("2p", value, value, value, not np.isfinite(value),
                           f"sigma_max={sigma:.6g}")


def asym_3p_high(ch: ChannelSet, p_a: float, p_b: float) -> AsymptoteResult:
    """Three-phase limit as an interval ``[sum lower_i, sum upper_i]``.

    A source with no more antennas than the relay gets a bracket from
    ``lambda = lambda_max(T^H T, H^H H)``: ``[1/3 log2(1/2 + lambda)]^+`` to
    ``[1/3 log2(1 + lambda)]^+``. A source with more antennas zero-forces
    the relay and contributes ``1/3 [log2(3/2 P) + log2 lambda_max(P_N T^H T P_N)]``.
    """
    lo = hi = 0.0
    diverges = False
    for t, h, p in _directions(ch, p_a, p_b):
        if h.shape[1] <= h.shape[0]:
            lam = _pencil_max(t, h)
            lo += _log2_pos(0.5 + lam) / 3.0
            hi += _log2_pos(1.0 + lam) / 3.0
        else:
            diverges = True
            gain = _null_gain(t, h)
            theta = (math.log2(1.5 * p) + math.log2(gain)) / 3.0 if gain > 0 and p > 0 else 0.0
            lo += theta
            hi += theta
    return AsymptoteResult("3p", 0.5 * (lo + hi), lo, hi, diverges, "interval midpoint")


def asym_dt_high(ch: ChannelSet, p_a: float, p_b: float) -> AsymptoteResult:
    """Direct-transmission limit ``sum_i Omega_i``; the relay power plays no role."""
    total = 0.0
    diverges = False
    for t, h, p in _directions(ch, p_a, p_b):
        if h.shape[1] <= h.shape[0]:
            total += 0.5 * _log2_pos(_pencil_max(t, h))
        else:
            diverges = True
            gain = _null_gain(t, h)
            if gain > 0 and p > 0:
                total += 0.5 * (math.log2(p) + math.log2(gain))
    return _point("dt", total, diverges)


def dt_rate_closed_form(
    ch: ChannelSet, p_a: float, p_b: float, prefactor: float = 0.5
) -> float:
    """Optimal direct-transmission secrecy sum rate at finite power.

    ``sum_i prefactor * [log2 lambda_max(I + P_i T_i^H T_i, I + P_i H_i^H H_i)]^+``.
    """
    total = 0.0
    for t, h, p in _directions(ch, p_a, p_b):
        if p <= 0:
            continue
        eye = np.eye(t.shape[1])
        lam = max_gen_eig(eye + p * t.conj().T @ t, eye + p * h.conj().T @ h).value
        total += prefactor * _log2_pos(lam)
    return total


# --- small source power --------------------------------------------------


def asym_2p_low(ch: ChannelSet, p_a: float, p_b: float) -> tuple[SourceBeamformers, AsymptoteResult]:
    """Two-phase rate to leading order, ``P_A P_B lambda_max(H_A^H H_B H_B^H H_A) / (2 ln 2)``."""
    cross = ch.h_a.conj().T @ ch.h_b
    top_a = max_eig_hermitian(cross @ cross.conj().T)
    top_b = max_eig_hermitian(cross.conj().T @ cross)
    src = SourceBeamformers(
        math.sqrt(max(p_a, 0.0)) * top_a.vector, math.sqrt(max(p_b, 0.0)) * top_b.vector
    )
    value = p_a * p_b * max(top_a.value, 0.0) / (2.0 * LN2)
    return src, _point("2p", value, False, "second order in source power")


def asym_3p_low(ch: ChannelSet, p_a: float, p_b: float) -> AsymptoteResult:
    """Three-phase rate bracket to first order in source power."""
    lo = hi = 0.0
    for t, h, p in _directions(ch, p_a, p_b):
        tt = t.conj().T @ t
        hh = h.conj().T @ h
        lo += max(p * max_eig_hermitian(tt - 0.5 * hh).value, 0.0)
        hi += p * max_eig_hermitian(tt).value
    lo /= 2.0 * LN2
    hi /= 2.0 * LN2
    return AsymptoteResult("3p", 0.5 * (lo + hi), lo, hi, False, "interval midpoint")


def asym_dt_low(ch: ChannelSet, p_a: float, p_b: float) -> AsymptoteResult:
    """Direct-transmission rate to first order, ``sum [P_i lambda_max(T^H T - H^H H)]^+ / (2 ln 2)``."""
    total = 0.0
    for t, h, p in _directions(ch, p_a, p_b):
        total += max(p * max_eig_hermitian(t.conj().T @ t - h.conj().T @ h).value, 0.0)
    return _point("dt", total / (2.0 * LN2))


# --- recommender ---------------------------------------------------------


@dataclass(frozen=True)
class RegimeSpec:
    relay_power_regime: str
    source_power_regime: str

    def __post_init__(self):
        for name in ("relay_power_regime", "source_power_regime"):
            v = getattr(self, name)
            if v not in REGIMES:
                raise ConfigError(f"{name} must be one of {REGIMES}, got {v!r}")


@dataclass(frozen=True)
class Recommendation:
    ordering: str
    best: str | None
    reason: str

    def __str__(self) -> str:
        return self.ordering


def recommend_scheme(dims: Dims, regime: RegimeSpec) -> Recommendation:
    """Scheme ordering by maximum secrecy sum rate in a limiting regime.

    Raises
    ------
    UncoveredRegimeError
        For finite regimes, which have no closed-form ordering.
    """
    relay, source = regime.relay_power_regime, regime.source_power_regime
    if relay == "low":
        return Recommendation("DT > 3P > 2P", "dt", "relay power vanishes")
    if relay == "high" and source == "low":
        return Recommendation("3P > DT > 2P", "3p", "2P rate is second order in source power")
    if relay == "high" and source == "high":
        n_a, n_b, n_r = dims.n_a, dims.n_b, dims.n_r
        if n_a + n_b > n_r and n_a <= n_r and n_b <= n_r:
            return Recommendation("2P best", "2p", "alignment makes 2P grow while 3P and DT saturate")
        if n_a > n_r and n_b > n_r:
            return Recommendation("DT > 3P", "dt", "both schemes grow; DT has the larger slope")
        return Recommendation(
            "channel-dependent", None, "no closed-form ordering; run the optimizers"
        )
    raise UncoveredRegimeError(f"no ordering is known for relay={relay}, source={source}")
