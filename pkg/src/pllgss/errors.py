"""Exception hierarchy.

Each error class carries the CLI exit code it maps to.
"""


class GssError(Exception):
    exit_code = 1


class ParameterError(GssError, ValueError):
    """Invalid physical or dimensionless parameter values."""

    exit_code = 2


class ModelValidityError(GssError, ValueError):
    """The reduced model degenerates (for example ``gamma*h >= 1``)."""

    exit_code = 2


class NoSEPError(GssError):
    """No stable equilibrium exists; ``clause`` names the failed condition."""

    exit_code = 3

    def __init__(self, message: str, clause: str):
        super().__init__(message)
        self.clause = clause


class CriterionInapplicable(GssError):
    exit_code = 3


class ScenarioError(GssError):
    exit_code = 4


class NumericalError(GssError):
    """Root bracketing, contour extraction or integration failure."""

    exit_code = 5

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StiffnessError(NumericalError):
    pass
