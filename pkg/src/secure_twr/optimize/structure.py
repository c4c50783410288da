"""Low-dimensional relay parameterizations.

Two-phase:   F   = V A U^H
Three-phase: F_A = V a_1 u_A^H,  F_B = V a_2 u_B^H

``V`` spans the columns of ``[G_A^H, G_B^H]``; ``U`` spans the received
signals ``[H_A q_A, H_B q_B]`` and ``u_i`` is ``H_i q_i`` normalized.
Projecting an arbitrary relay onto these forms keeps every useful signal
term, shrinks the forwarded noise and never raises relay power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channels import ChannelSet
from ..errors import DimensionError, ZeroBeamformerError
from ..matkit import qr_orthonormal
from ..schemes import RelayCombiner2P, RelayCombiner3P, SourceBeamformers

DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class StructureBasis2P:
    v: np.ndarray
    u: np.ndarray
    # set when H_A q_A and H_B q_B are collinear and u's second column is a filler
    degenerate: bool = False

    @property
    def a_shape(self) -> tuple[int, int]:
        return self.v.shape[1], self.u.shape[1]


@dataclass(frozen=True)
class StructureBasis3P:
    v: np.ndarray
    u_a: np.ndarray
    u_b: np.ndarray

    @property
    def a_len(self) -> int:
        return self.v.shape[1]


def relay_side_basis(ch: ChannelSet) -> np.ndarray:
    """Orthonormal basis of span([G_A^H, G_B^H]) with min(N_A+N_B, N_R) columns."""
    v, _ = qr_orthonormal(np.hstack([ch.g_a.conj().T, ch.g_b.conj().T]))
    return v


def _received(ch: ChannelSet, src: SourceBeamformers) -> tuple[np.ndarray, np.ndarray]:
    ha = ch.h_a @ src.q_a
    hb = ch.h_b @ src.q_b
    if not np.any(ha) or not np.any(hb):
        raise ZeroBeamformerError("H_i q_i vanishes for at least one source")
    return ha, hb


def structure_2p(ch: ChannelSet, src: SourceBeamformers) -> StructureBasis2P:
    ha, hb = _received(ch, src)
    v = relay_side_basis(ch)
    u, r = qr_orthonormal(np.column_stack([ha, hb]))
    degenerate = False
    if u.shape[1] == 2 and abs(r[1, 1]) <= DEGENERATE_TOL * np.linalg.norm(r):
        degenerate = True
        full, _ = np.linalg.qr(u[:, :1], mode="complete")
        u = np.column_stack([u[:, 0], full[:, 1]])
    return StructureBasis2P(v, u, degenerate)


def assemble_f_2p(basis: StructureBasis2P, a: np.ndarray) -> RelayCombiner2P:
    a = np.asarray(a, dtype=complex)
    if a.shape != basis.a_shape:
        raise DimensionError(f"A has shape {a.shape}, expected {basis.a_shape}")
    return RelayCombiner2P(basis.v @ a @ basis.u.conj().T)


def project_2p(basis: StructureBasis2P, f: np.ndarray) -> np.ndarray:
    """Reduced parameter of the structured projection V V^H F U U^H."""
    return basis.v.conj().T @ f @ basis.u


def reduced_power_2p(
    basis: StructureBasis2P, ch: ChannelSet, src: SourceBeamformers, a: np.ndarray
) -> float:
    """Relay power of ``V A U^H`` evaluated in the reduced space."""
    ca = basis.u.conj().T @ (ch.h_a @ src.q_a)
    cb = basis.u.conj().T @ (ch.h_b @ src.q_b)
    m = np.outer(ca, ca.conj()) + np.outer(cb, cb.conj()) + np.eye(len(ca))
    return float(np.trace(a @ m @ a.conj().T).real)


def structure_3p(ch: ChannelSet, src: SourceBeamformers) -> StructureBasis3P:
    ha, hb = _received(ch, src)
    return StructureBasis3P(
        relay_side_basis(ch), ha / np.linalg.norm(ha), hb / np.linalg.norm(hb)
    )


def assemble_f_3p(basis: StructureBasis3P, a1: np.ndarray, a2: np.ndarray) -> RelayCombiner3P:
    a1 = np.asarray(a1, dtype=complex).reshape(-1)
    a2 = np.asarray(a2, dtype=complex).reshape(-1)
    if a1.shape != (basis.a_len,) or a2.shape != (basis.a_len,):
        raise DimensionError(f"a_1/a_2 must have length {basis.a_len}")
    return RelayCombiner3P(
        np.outer(basis.v @ a1, basis.u_a.conj()), np.outer(basis.v @ a2, basis.u_b.conj())
    )


def project_3p(basis: StructureBasis3P, f_a: np.ndarray, f_b: np.ndarray):
    """Reduced parameters of V V^H F_i u_i u_i^H."""
    vh = basis.v.conj().T
    return vh @ f_a @ basis.u_a, vh @ f_b @ basis.u_b


def reduced_power_3p(
    ch: ChannelSet, src: SourceBeamformers, a1: np.ndarray, a2: np.ndarray
) -> float:
    beta_a = np.linalg.norm(ch.h_a @ src.q_a) ** 2
    beta_b = np.linalg.norm(ch.h_b @ src.q_b) ** 2
    return float((1 + beta_a) * np.vdot(a1, a1).real + (1 + beta_b) * np.vdot(a2, a2).real)
