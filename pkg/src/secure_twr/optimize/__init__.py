"""Beamformer design: structured relays, barrier search, fractional source updates."""

from .alignment import aligned_rate_bits, signal_align
from .algorithms import AlgorithmResult, algorithm1, algorithm2, aligned_2p
from .barrier import ThreePhaseObjective, TwoPhaseObjective, optimize_a3_barrier, optimize_a_barrier
from .config import OptimizerConfig
from .fractional import (
    RatioProblem,
    dual_bound,
    max_quadratic_form,
    maximize_ratio,
    optimize_qb_fractional,
    optimize_qb_fractional_3p,
    ratio_problem_2p,
    ratio_problem_3p,
)
from .structure import (
    StructureBasis2P,
    StructureBasis3P,
    assemble_f_2p,
    assemble_f_3p,
    project_2p,
    project_3p,
    reduced_power_2p,
    reduced_power_3p,
    structure_2p,
    structure_3p,
)

__all__ = [
    "AlgorithmResult",
    "OptimizerConfig",
    "RatioProblem",
    "StructureBasis2P",
    "StructureBasis3P",
    "ThreePhaseObjective",
    "TwoPhaseObjective",
    "algorithm1",
    "algorithm2",
    "aligned_2p",
    "aligned_rate_bits",
    "assemble_f_2p",
    "assemble_f_3p",
    "dual_bound",
    "max_quadratic_form",
    "maximize_ratio",
    "optimize_a3_barrier",
    "optimize_a_barrier",
    "optimize_qb_fractional",
    "optimize_qb_fractional_3p",
    "project_2p",
    "project_3p",
    "ratio_problem_2p",
    "ratio_problem_3p",
    "reduced_power_2p",
    "reduced_power_3p",
    "signal_align",
    "structure_2p",
    "structure_3p",
]
