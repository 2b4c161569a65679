"""Exception and warning types raised across the package."""


class KernelDRError(Exception):
    """Base class for all package errors."""


# numerics
class NonSymmetric(KernelDRError, ValueError):
    pass


class NotPositiveDefinite(KernelDRError, ValueError):
    pass


class ConvergenceFailure(KernelDRError, RuntimeError):
    pass


# shapes
class DimensionMismatch(KernelDRError, ValueError):
    pass


class SizeMismatch(KernelDRError, ValueError):
    pass


class LengthMismatch(KernelDRError, ValueError):
    pass


# kernels / hsic
class AlreadyCentered(KernelDRError, ValueError):
    pass


class MissingFeatures(KernelDRError, ValueError):
    pass


class DegenerateSample(KernelDRError, ValueError):
    pass


# dimred
class TooFewClasses(KernelDRError, ValueError):
    pass


class SingularWithin(KernelDRError, RuntimeError):
    pass


# classify
class SingleClass(KernelDRError, ValueError):
    pass


class NonConvergence(KernelDRError, RuntimeError):
    pass


# pipeline
class MissingSubjectIds(KernelDRError, ValueError):
    pass


class SingleClassFold(KernelDRError, ValueError):
    pass


class SchemaError(KernelDRError, ValueError):
    """Input file does not conform to the expected format."""


class DimensionReduced(UserWarning):
    """Fewer components than requested carry nonzero variance."""


class RankDeficient(UserWarning):
    """Fewer than ``d`` generalized eigenvalues exceed the rank cutoff."""


class DimensionClamped(UserWarning):
    """Requested dimension exceeded what the method can provide."""
