"""Exception hierarchy shared by all solver modules."""


class SolverError(RuntimeError):
    """Base class for failures raised by the solver."""


class NonphysicalState(SolverError):
    """A cell reached non-positive density or temperature.

    ``cell`` is the (i, j) index when the failure is tied to one cell and
    ``level`` the multigrid level (finest = highest) when known.
    """

    def __init__(self, message, cell=None, level=None):
        if cell is not None:
            message = f"{message} at cell {tuple(int(c) for c in cell)}"
        if level is not None:
            message = f"[level {level}] {message}"
        super().__init__(message)
        self.cell = cell
        self.level = level


class GradConstraintError(SolverError):
    """Coefficients violate f_{e_d} = 0 or sum_d f_{2e_d} = 0."""


class NonSPDError(SolverError):
    """The ES-BGK covariance matrix is not symmetric positive definite."""

    def __init__(self, message, eigenvalue=None, cell=None):
        if eigenvalue is not None:
            message = f"{message} (smallest eigenvalue {eigenvalue:.6g})"
        if cell is not None:
            message = f"{message} at cell {tuple(int(c) for c in cell)}"
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.cell = cell


class NonConvergence(SolverError):
    """The outer iteration hit its cap or diverged; ``report`` holds the history."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(ValueError):
    """Invalid or unparsable scenario configuration."""
