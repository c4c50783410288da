"""Exception hierarchy shared by all modules."""


class SecureTWRError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SecureTWRError, ValueError):
    """Matrix or vector shapes are inconsistent."""


class SingularMatrixError(SecureTWRError, ValueError):
    """A matrix that must be positive definite is not."""


class NotHermitianError(SecureTWRError, ValueError):
    """A matrix that must be Hermitian is not."""


class ChannelParseError(SecureTWRError, ValueError):
    """A channel file could not be parsed."""


class InfeasibleBudgetError(SecureTWRError, ValueError):
    """A power budget leaves no strictly feasible point."""


class AlignmentInfeasibleError(SecureTWRError, ValueError):
    """Signal alignment needs N_A + N_B > N_R."""


class ZeroBeamformerError(SecureTWRError, ValueError):
    """A beamformer maps to the zero vector at the relay."""


class UncoveredRegimeError(SecureTWRError, ValueError):
    """The requested power regime is not covered by the comparison table."""


class ConfigError(SecureTWRError, ValueError):
    """An experiment configuration is invalid."""
