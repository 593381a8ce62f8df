"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes; library users catch them
like any ValueError/RuntimeError subclass.
"""


class ConfigurationError(ValueError):
    """Bad run configuration: unparseable file, unknown family, bad budget."""


class SolverBracketError(RuntimeError):
    """Root bracket for the dimension equation is violated.

    Carries the endpoint values so callers can report which moment
    contract broke.
    """

    def __init__(self, message: str, g_low: float, g_high: float):
        super().__init__(message)
        self.g_low = g_low
        self.g_high = g_high


class ResourceLimitError(RuntimeError):
    """A node/word/cell budget would be exceeded; raised before allocation."""


class FitError(RuntimeError):
    """Too few usable scales (or a degenerate design) for a regression fit."""


class InsufficientDepthError(RuntimeError):
    """A realization is too shallow for the requested analysis depth."""

    def __init__(self, message: str, required_depth: int):
        super().__init__(message)
        self.required_depth = required_depth


class ContractViolationError(RuntimeError):
    """An internal invariant failed (continuity, identity residual, ...)."""
