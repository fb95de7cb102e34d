"""Exception hierarchy shared by all koopgen modules."""


class KoopgenError(Exception):
    """Base class for every error raised by koopgen."""


class NumericalFailure(KoopgenError):
    """A dense linear-algebra kernel or integrator failed to produce finite output."""


class DefectiveMatrixError(NumericalFailure):
    """Eigenvector basis is too ill-conditioned for an eigendecomposition-based function."""


class BranchCutError(NumericalFailure):
    """An eigenvalue sits on (or too close to) the branch cut of the principal logarithm."""


class StiffnessError(NumericalFailure):
    """Adaptive step size underflowed."""


class DegenerateDataError(KoopgenError):
    """The snapshot data do not determine the requested quantity (empty or rank-collapsed)."""


class MissingCoordinateError(KoopgenError, KeyError):
    """A dictionary lacks the coordinate observable x_j."""


class ConfigError(KoopgenError, ValueError):
    """Invalid configuration or parameters."""


class EmptyRegionError(KoopgenError):
    """The equilibrium is not inside the requested sublevel set."""


class EquilibriumNotFoundError(NumericalFailure):
    """Newton iteration for a fixed point of the identified field diverged."""
