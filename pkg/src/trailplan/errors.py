"""Exception types shared across the package."""


class TrailplanError(Exception):
    """Base class for all trailplan errors."""


class OutOfDomainError(TrailplanError):
    """A query point lies outside the field's bounding box."""


class ValidationError(TrailplanError):
    """Ill-formed parameters or configuration values."""


class GridFormatError(TrailplanError):
    """Malformed ESRI ASCII grid content."""


class NumericalBlowupError(TrailplanError):
    """Non-finite values appeared during time stepping."""


class LinearSolveError(TrailplanError):
    """The implicit diffusion solve failed to reach the required residual."""


class MemoryBudgetError(TrailplanError):
    """The requested value-function history exceeds the configured cap."""


class BracketError(TrailplanError):
    """A bisection bracket whose endpoints do not straddle the outcome."""


class ScenarioError(TrailplanError):
    """Invalid CLI scenario configuration."""
