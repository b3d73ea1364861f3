"""Exception and warning types shared across the package."""


class DimensionError(ValueError):
    """Matrices or assignments of incompatible shape."""


class StructureError(ValueError):
    """A matrix fails a structural precondition (hermiticity, unitarity, ...)."""


class BudgetExceededError(RuntimeError):
    """A construction would exceed its configured size budget."""


class BranchCutWarning(UserWarning):
    """A unitary has an eigenvalue on the branch cut of the principal logarithm."""


class ConvergenceWarning(UserWarning):
    """The Magnus convergence criterion is violated for the requested horizon."""
