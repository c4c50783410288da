"""Secrecy-rate and relay-power accounting for fixed beamformers.

Three schemes are covered:

* ``2p``: both sources transmit at once, the relay forwards ``F y_R``.
* ``3p``: sources transmit in turn, the relay forwards ``F_A y_R1 + F_B y_R2``.
* ``dt``: direct transmission; the relay only listens.

All rates are in bits per channel use. Each source sends a single stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, PowerBudget
from .errors import DimensionError
from .matkit import max_gen_eig

__all__ = [
    "SourceBeamformers",
    "RelayCombiner2P",
    "RelayCombiner3P",
    "RateReport",
    "rate_2p",
    "rate_3p",
    "rate_dt",
    "dt_optimal",
    "dt_direction_optimal",
    "leak_2p_det",
    "leak_2p_expanded",
    "relay_power_2p",
    "relay_power_3p",
]

LOG2E = 1.0 / np.log(2.0)


@dataclass(frozen=True)
class SourceBeamformers:
    q_a: np.ndarray
    q_b: np.ndarray

    def __post_init__(self):
        for name in ("q_a", "q_b"):
            v = np.asarray(getattr(self, name), dtype=complex).reshape(-1)
            if not np.all(np.isfinite(v)):
                raise DimensionError(f"{name} has non-finite entries")
            object.__setattr__(self, name, v)

    def swapped(self) -> "SourceBeamformers":
        return SourceBeamformers(self.q_b, self.q_a)

    def within(self, budget: PowerBudget, rtol: float = 1e-9) -> bool:
        pa, pb = _sq(self.q_a), _sq(self.q_b)
        return pa <= budget.p_a * (1 + rtol) + 1e-300 and pb <= budget.p_b * (1 + rtol) + 1e-300


@dataclass(frozen=True)
class RelayCombiner2P:
    f: np.ndarray


@dataclass(frozen=True)
class RelayCombiner3P:
    f_a: np.ndarray
    f_b: np.ndarray

    def swapped(self) -> "RelayCombiner3P":
        return RelayCombiner3P(self.f_b, self.f_a)


@dataclass(frozen=True)
class RateReport:
    r_ab: float
    r_ba: float
    r_leak: float
    r_secrecy: float
    relay_power_used: float
    scheme: str = "2p"

    def __post_init__(self):
        for name in ("r_ab", "r_ba", "r_leak", "r_secrecy"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} is negative: {getattr(self, name)}")
        # dt clips each direction separately, so only relayed schemes obey the sum clip
        if self.scheme != "dt":
            expected = max(0.0, self.r_ab + self.r_ba - self.r_leak)
            if abs(self.r_secrecy - expected) > 1e-12:
                raise ValueError("r_secrecy does not equal [r_ab + r_ba - r_leak]^+")

    @property
    def r_sum(self) -> float:
        return self.r_ab + self.r_ba

    def swapped(self) -> "RateReport":
        return RateReport(
            self.r_ba, self.r_ab, self.r_leak, self.r_secrecy, self.relay_power_used, self.scheme
        )


def _sq(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def _check_shapes(ch: ChannelSet, src: SourceBeamformers, *relay: np.ndarray) -> None:
    d = ch.dims
    if src.q_a.shape != (d.n_a,) or src.q_b.shape != (d.n_b,):
        raise DimensionError(
            f"beamformers {src.q_a.shape}, {src.q_b.shape} do not match {d}"
        )
    for f in relay:
        if np.shape(f) != (d.n_r, d.n_r):
            raise DimensionError(f"relay matrix has shape {np.shape(f)}, expected ({d.n_r}, {d.n_r})")


def _relayed_gain(g: np.ndarray, w: np.ndarray, cov: np.ndarray) -> float:
    """``w^H G^H (G cov G^H + I)^{-1} G w`` for a signal ``w`` seen through ``G``."""
    k = g @ cov @ g.conj().T + np.eye(g.shape[0])
    gw = g @ w
    return max(0.0, float(np.vdot(gw, np.linalg.solve(k, gw)).real))


def leak_2p_expanded(ha_qa: np.ndarray, hb_qb: np.ndarray) -> float:
    """Rate the relay decodes in the two-phase MAC, scalar expansion."""
    a = _sq(ha_qa)
    b = _sq(hb_qb)
    c = abs(np.vdot(hb_qb, ha_qa)) ** 2
    return 0.5 * np.log2(1.0 + a + b + a * b - c)


def leak_2p_det(ha_qa: np.ndarray, hb_qb: np.ndarray) -> float:
    """Same leak as :func:`leak_2p_expanded` through ``log det(I + M M^H)``."""
    m = np.column_stack([ha_qa, hb_qb])
    _, logdet = np.linalg.slogdet(np.eye(m.shape[0]) + m @ m.conj().T)
    return 0.5 * logdet * LOG2E


def _report(r_ab: float, r_ba: float, r_leak: float, power: float, scheme: str) -> RateReport:
    r_ab, r_ba, r_leak = max(float(r_ab), 0.0), max(float(r_ba), 0.0), max(float(r_leak), 0.0)
    return RateReport(r_ab, r_ba, r_leak, max(0.0, r_ab + r_ba - r_leak), float(power), scheme)


def relay_power_2p(ch: ChannelSet, src: SourceBeamformers, f: np.ndarray) -> float:
    fa = f @ (ch.h_a @ src.q_a)
    fb = f @ (ch.h_b @ src.q_b)
    return _sq(fa) + _sq(fb) + float(np.sum(np.abs(f) ** 2))


def rate_2p(ch: ChannelSet, src: SourceBeamformers, relay: RelayCombiner2P) -> RateReport:
    f = np.asarray(relay.f, dtype=complex)
    _check_shapes(ch, src, f)
    ha_qa = ch.h_a @ src.q_a
    hb_qb = ch.h_b @ src.q_b
    x_ab = _relayed_gain(ch.g_b @ f, ha_qa, np.eye(ch.dims.n_r)) if _sq(ha_qa) else 0.0
    x_ba = _relayed_gain(ch.g_a @ f, hb_qb, np.eye(ch.dims.n_r)) if _sq(hb_qb) else 0.0
    return _report(
        0.5 * np.log2(1.0 + x_ab),
        0.5 * np.log2(1.0 + x_ba),
        leak_2p_expanded(ha_qa, hb_qb),
        relay_power_2p(ch, src, f),
        "2p",
    )


def relay_power_3p(ch: ChannelSet, src: SourceBeamformers, f_a: np.ndarray, f_b: np.ndarray) -> float:
    return (
        _sq(f_a @ (ch.h_a @ src.q_a))
        + _sq(f_b @ (ch.h_b @ src.q_b))
        + float(np.sum(np.abs(f_a) ** 2) + np.sum(np.abs(f_b) ** 2))
    )


def rate_3p(ch: ChannelSet, src: SourceBeamformers, relay: RelayCombiner3P) -> RateReport:
    f_a = np.asarray(relay.f_a, dtype=complex)
    f_b = np.asarray(relay.f_b, dtype=complex)
    _check_shapes(ch, src, f_a, f_b)
    ha_qa = ch.h_a @ src.q_a
    hb_qb = ch.h_b @ src.q_b
    noise = f_a @ f_a.conj().T + f_b @ f_b.conj().T
    # relayed terms: signal F_i H_i q_i seen through G_{other}, noise G (F_A F_A^H + F_B F_B^H) G^H + I
    x_ba = _relayed_gain(ch.g_a, f_b @ hb_qb, noise)
    x_ab = _relayed_gain(ch.g_b, f_a @ ha_qa, noise)
    d_ba = _sq(ch.t_b @ src.q_b)
    d_ab = _sq(ch.t_a @ src.q_a)
    leak = np.log2((1.0 + _sq(ha_qa)) * (1.0 + _sq(hb_qb))) / 3.0
    return _report(
        np.log2(1.0 + d_ab + x_ab) / 3.0,
        np.log2(1.0 + d_ba + x_ba) / 3.0,
        leak,
        relay_power_3p(ch, src, f_a, f_b),
        "3p",
    )


def _dt_direction(t: np.ndarray, h: np.ndarray, q: np.ndarray) -> tuple[float, float]:
    num = 1.0 + _sq(t @ q)
    den = 1.0 + _sq(h @ q)
    return 0.5 * max(0.0, np.log2(num / den)), 0.5 * np.log2(den)


def rate_dt(ch: ChannelSet, src: SourceBeamformers) -> RateReport:
    """Direct transmission; each direction's secrecy term is clipped at zero.

    ``r_leak`` is diagnostic only: ``r_secrecy`` is the sum of the clipped
    per-direction terms, not ``r_ab + r_ba - r_leak``.
    """
    _check_shapes(ch, src)
    s_ab, l_a = _dt_direction(ch.t_a, ch.h_a, src.q_a)
    s_ba, l_b = _dt_direction(ch.t_b, ch.h_b, src.q_b)
    return RateReport(float(s_ab), float(s_ba), float(l_a + l_b), float(s_ab + s_ba), 0.0, "dt")


def dt_direction_optimal(t: np.ndarray, h: np.ndarray, p: float) -> tuple[np.ndarray, float]:
    """Optimal direct-link beamformer for one direction and its secrecy rate."""
    n = t.shape[1]
    if p <= 0:
        return np.zeros(n, complex), 0.0
    eye = np.eye(n)
    pair = max_gen_eig(eye + p * t.conj().T @ t, eye + p * h.conj().T @ h)
    q = np.sqrt(p) * pair.vector / np.linalg.norm(pair.vector)
    return q, 0.5 * max(0.0, np.log2(pair.value))


def dt_optimal(ch: ChannelSet, budget: PowerBudget) -> tuple[SourceBeamformers, RateReport]:
    """Closed-form optimum of the direct-transmission secrecy sum rate."""
    q_a, _ = dt_direction_optimal(ch.t_a, ch.h_a, budget.p_a)
    q_b, _ = dt_direction_optimal(ch.t_b, ch.h_b, budget.p_b)
    src = SourceBeamformers(q_a, q_b)
    return src, rate_dt(ch, src)
