"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A physical or numerical parameter is out of its admissible range."""


class SingularCompositionError(ValueError):
    """A composition sits on the simplex boundary where the algebra degenerates."""


class DomainError(ValueError):
    """An input lies outside the domain of a pointwise state mapping."""


class InvalidScenarioError(ValueError):
    """A scenario document failed validation."""


class SolverError(RuntimeError):
    """A linear solve failed; carries factorization diagnostics."""


class NonConvergenceError(RuntimeError):
    """The inner iteration of a time step did not reach its tolerance."""
