"""Exception and warning types shared across the package."""


class SpikedCovError(Exception):
    """Base class for all package errors."""


class DataError(SpikedCovError):
    """Malformed or unusable input data (CSV parse errors, bad shapes)."""


class NumericalError(SpikedCovError):
    """A numerical procedure failed or its preconditions do not hold."""


class NotPositiveDefiniteError(NumericalError):
    """Cholesky factorization hit a non-positive pivot."""


class EigenSolverError(NumericalError):
    """The symmetric eigensolver failed to converge."""


class InvalidDegreesOfFreedomError(NumericalError):
    """Degrees of freedom outside the valid range for the requested draw."""


class InvalidConfigurationError(NumericalError):
    """Inconsistent posterior or experiment configuration."""


class SpikeNotSeparableError(NumericalError):
    """n*lambda_k(S) <= c_hat*p: the spike cannot be separated from the bulk."""


class CalibrationInfeasibleError(NumericalError):
    """The calibrated degrees of freedom fell outside the admissible range."""


class CorrectionInfeasibleError(NumericalError):
    """A multiplicative correction factor is nonpositive at some spike index."""

    def __init__(self, message, bad_indices=None):
        super().__init__(message)
        self.bad_indices = tuple(bad_indices or ())


class RankDeficiencyError(NumericalError):
    """Eigenvalues required by a criterion are zero or negative."""


class DegenerateDirectionError(NumericalError):
    """Averaged eigenvector draws cancelled to (numerically) zero."""


class MeanUndefinedWarning(UserWarning):
    """The requested inverse-Wishart distribution has no finite mean."""


class ExtrapolatedRegimeWarning(UserWarning):
    """The fast top-K sampler is being used outside the p > n regime it targets."""


class DegenerateBulkWarning(UserWarning):
    """The estimated bulk level is zero (exactly rank-deficient input)."""
