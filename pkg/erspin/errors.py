class ErspinError(Exception):
    """Base class for every error raised by erspin."""
    exit_code = 1


# ---------------- CONFIG ----------------

class ConfigError(ErspinError):
    """Raised when a run configuration cannot be used."""
    exit_code = 2


class ConfigParseError(ConfigError):
    """Raised when the config file is not valid structured text."""

    def __init__(self, message: str, line: int = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ConfigValidationError(ConfigError):
    """Raised when a config value is missing, unknown or out of range."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


# ---------------- INPUT DATA ----------------

class InputDataError(ErspinError):
    """Raised when an input data file does not follow its schema."""
    exit_code = 3


class TraceFormatError(InputDataError):
    """Raised when a decay trace or run table is malformed."""


class SequenceTableError(InputDataError):
    """Raised when a pulse sequence table cannot be parsed."""


# ---------------- SEQUENCES ----------------

class SequenceError(ErspinError):
    """Raised when a pulse sequence cannot be built or analysed."""
    exit_code = 4


class SpacingViolationError(SequenceError):
    """Raised when pulses are closer than the minimum pulse separation."""


class InfeasibleBudgetError(SequenceError):
    """Raised when a requested sequence cannot be realised within the pulse budget."""


class UnsupportedPulseError(SequenceError):
    """Raised when a pulse angle is not a supported rotation."""


# ---------------- FITTING ----------------

class FitError(ErspinError):
    """Raised when a least-squares fit fails."""
    exit_code = 5


class NoConvergenceError(FitError):
    """Raised when the fit stops without meeting its convergence criteria."""


class SingularJacobianError(FitError):
    """Raised when parameters are not identifiable at the optimum."""


class BoundViolationError(FitError):
    """Raised when initial parameters lie outside their bounds."""


# ---------------- SPIN MODEL ----------------

class SpinModelError(ErspinError):
    """Raised for invalid spin systems or Hamiltonians."""
    exit_code = 6


class InvalidSpinError(SpinModelError):
    """Raised when a spin quantum number is not a non-negative half-integer."""


class NonHermitianError(SpinModelError):
    """Raised when a matrix expected to be Hermitian is not."""


class GroupNotFoundError(SpinModelError):
    """Raised when no transition belongs to the requested g group."""
