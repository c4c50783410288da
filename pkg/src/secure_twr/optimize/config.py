from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..errors import ConfigError


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for the barrier relay search and the alternating algorithms.

    ``direction`` selects the descent direction used inside each barrier
    stage: ``"bfgs"`` (quasi-Newton scaled gradient) or ``"gradient"``
    (plain steepest descent). Both use Armijo backtracking with step halving.
    """

    barrier_mu0: float = 1.0
    barrier_shrink: float = 0.1
    barrier_mu_min: float = 1e-6
    step_init: float = 1.0
    armijo_c: float = 1e-4
    max_inner_iters: int = 200
    max_outer_iters: int = 50
    rate_tol: float = 1e-4
    restarts: int = 5
    seed: int = 0
    direction: str = "bfgs"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("seed", "direction"):
                continue
            if not v > 0:
                raise ConfigError(f"{f.name} must be positive, got {v!r}")
        if not self.barrier_shrink < 1:
            raise ConfigError("barrier_shrink must be < 1")
        if self.direction not in ("bfgs", "gradient"):
            raise ConfigError(f"unknown direction {self.direction!r}")

    def replace(self, **changes) -> "OptimizerConfig":
        return OptimizerConfig(**{**asdict(self), **changes})

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown optimizer fields: {sorted(unknown)}")
        return cls(**d)
