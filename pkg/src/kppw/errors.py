"""Exception types shared across the package.

The CLI maps `ConfigError` subclasses (and bad usage) to exit code 1 and
every other `KppwError` raised at run time to exit code 2.
"""


class KppwError(Exception):
    """Base class for all package-specific errors."""


# --- spectral -------------------------------------------------------------

class NotIrreducibleError(KppwError, ValueError):
    """Matrix is not essentially nonnegative and irreducible."""


class NonConvergenceError(KppwError, RuntimeError):
    """Power iteration hit its iteration cap without meeting the residual."""


# --- dispersion -----------------------------------------------------------

class BracketFailureError(KppwError, RuntimeError):
    """No interior minimum of the speed curve found inside the search window."""


class DispersionConsistencyError(KppwError, RuntimeError):
    """Golden-section minimum disagrees with the cross-check grid scan."""


class NoRealRootsError(KppwError, ValueError):
    """Requested speed lies below the minimal wave speed."""


# --- kinetics -------------------------------------------------------------

class SingularCError(KppwError, ValueError):
    """Competition matrix is numerically singular."""


class NonPositiveLambdaAError(KppwError, ValueError):
    """No positive constant state: the weighted growth eigenvalue is <= 0."""


class HypothesisViolatedError(KppwError, ValueError):
    """A structural hypothesis required by the requested quantity fails."""


class StepTooLargeError(KppwError, RuntimeError):
    """Time integration undershot below the admissible negativity floor."""


# --- pde ------------------------------------------------------------------

class IntervalOutOfRangeError(KppwError, ValueError):
    """Initial-data interval does not fit inside the grid."""


class StepFailureError(KppwError, RuntimeError):
    """Explicit step kept producing negative values after 6 halvings."""


class CapExceededError(KppwError, RuntimeError):
    """Field exceeded the blow-up guard value."""


# --- diagnostics ----------------------------------------------------------

class EdgeWindowEmptyError(KppwError, ValueError):
    """No grid nodes fall inside the edge-fit amplitude window."""


class InsufficientSamplesError(KppwError, ValueError):
    """Too few track samples inside the regression window."""


# --- scenarios / config / cli ----------------------------------------------

class UnknownPresetError(KppwError, ValueError):
    """Requested preset name does not exist."""


class ConfigError(KppwError, ValueError):
    """Base class for configuration problems (CLI exit code 1)."""


class ConfigParseError(ConfigError):
    """Malformed config text; message carries the line number."""


class ConfigValidationError(ConfigError):
    """Config parsed but the resulting system fails validation."""
