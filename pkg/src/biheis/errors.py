"""Exception types shared across the package."""


class BiHeisError(Exception):
    """Base class for all package errors."""


class InvalidParametersError(BiHeisError):
    """Structure parameters outside the admissible set (e.g. both zero)."""


class InvalidArgumentError(BiHeisError, ValueError):
    """A scalar argument violates a precondition."""


class DegenerateProjectionError(BiHeisError):
    """Projected trajectory is a line, not a circle (w=0, alpha_i=0 or r_i=0)."""


class UnsupportedCaseError(BiHeisError):
    """Operation not defined for this structure case (e.g. abnormals present)."""


class NoCutPointError(BiHeisError):
    """Geodesic has infinite cut time (w=0), no cut endpoint exists."""


class UndefinedCoefficientError(BiHeisError):
    """K / Psi are only defined in the non-isotropic contact case."""


class DiagonalPointError(BiHeisError):
    """Query point coincides with the base point."""


class WrongStratumError(BiHeisError):
    """Closed form queried outside its stratum (e.g. z != 0)."""


class WrongCaseError(BiHeisError):
    """Kernel variant queried with incompatible parameters."""


class SolverNoConvergenceError(BiHeisError):
    """Inverse-exponential solver failed on all starts.

    Carries the best residual seen so failures are never silently wrong.
    """

    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class CoverageError(BiHeisError):
    """Brute-force grid too coarse to reach the residual bound."""


class DegeneracyError(BiHeisError):
    """Complementary Hessian not positive definite (fiber dimension underestimated)."""


class PoorAsymptoticRegimeError(BiHeisError):
    """Laplace fit residual too large; t-list not in the asymptotic regime."""


class AccuracyError(BiHeisError):
    """Requested precision unreachable; carries the achieved estimate."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved


class InvalidSampleError(BiHeisError):
    """Non-positive kernel sample passed to a log-domain fit."""
