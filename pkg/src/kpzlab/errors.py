class DomainError(ValueError):
    """Argument outside the domain where a formula or operation is defined."""


class DegenerateInputError(ValueError):
    """Input violates a non-degeneracy assumption (ties, empty support)."""


class GridAlignmentError(ValueError):
    """A requested abscissa does not fall on a grid point."""


class RejectionBudgetError(RuntimeError):
    """A rejection sampler ran out of proposals."""

    def __init__(self, attempts, message=None):
        self.attempts = int(attempts)
        super().__init__(message or f"rejection budget exhausted after {self.attempts} attempts")


class ParameterError(ValueError):
    """Invalid experiment or construction parameters."""
