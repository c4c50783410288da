"""Source beamformers that make both signals arrive along one relay direction."""

from __future__ import annotations

import numpy as np

from ..channels import ChannelSet
from ..errors import AlignmentInfeasibleError
from ..matkit import max_gen_eig
from ..schemes import SourceBeamformers


def aligned_rate_bits(a2: float, b2: float) -> float:
    """``1/2 log2(a^2 b^2 / (a^2 + b^2))`` for received energies ``a^2``, ``b^2``."""
    if a2 <= 0 or b2 <= 0:
        return -np.inf
    return float(0.5 * np.log2(a2 * b2 / (a2 + b2)))


def signal_align(
    ch: ChannelSet, p_a: float, p_b: float
) -> tuple[SourceBeamformers, float, float]:
    """Full-power beamformers with ``beta H_A q_A = H_B q_B`` and ``beta > 0``.

    Every ``z = (z_A; z_B)`` in the null space of ``[H_A, -H_B]`` aligns the
    two signals on ``y = H_A z_A``. With ``q_i`` at full power the figure of
    merit ``a^2 b^2 / (a^2 + b^2)`` equals ``|y|^2 / (|z_A|^2/p_a + |z_B|^2/p_b)``,
    a Rayleigh ratio over the null-space coordinates, so the best direction
    is a generalized eigenvector even when the null space has several
    dimensions.

    Returns
    -------
    src, beta, residual
        ``residual = |beta H_A q_A - H_B q_B| / |H_B q_B|``.
    """
    d = ch.dims
    if d.n_a + d.n_b <= d.n_r:
        raise AlignmentInfeasibleError(
            f"alignment needs n_a + n_b > n_r, got {d.n_a} + {d.n_b} <= {d.n_r}"
        )
    if p_a <= 0 or p_b <= 0:
        return SourceBeamformers(np.zeros(d.n_a), np.zeros(d.n_b)), 0.0, 0.0
    stacked = np.hstack([ch.h_a, -ch.h_b])
    _, s, vh = np.linalg.svd(stacked)
    tol = max(stacked.shape) * np.finfo(float).eps * s[0]
    rank = int(np.sum(s > tol))
    z = vh[rank:].conj().T
    z_a, z_b = z[: d.n_a], z[d.n_a :]
    y = ch.h_a @ z_a
    num = y.conj().T @ y
    den = z_a.conj().T @ z_a / p_a + z_b.conj().T @ z_b / p_b
    pair = max_gen_eig(num, den)
    if pair.value <= 1e-14 * max(np.abs(num).max(), 1e-300):
        raise AlignmentInfeasibleError("no null-space direction reaches the relay")
    w = pair.vector
    za, zb = z_a @ w, z_b @ w
    za, zb = za / np.linalg.norm(za), zb / np.linalg.norm(zb)
    q_a = np.sqrt(p_a) * za
    q_b = np.sqrt(p_b) * zb
    ha, hb = ch.h_a @ q_a, ch.h_b @ q_b
    # z_A and z_B come from one null vector, so beta is real and positive
    beta = float(np.linalg.norm(hb) / np.linalg.norm(ha))
    residual = float(np.linalg.norm(beta * ha - hb) / np.linalg.norm(hb))
    return SourceBeamformers(q_a, q_b), beta, residual
