"""Exception hierarchy shared across the toolkit."""


class KanEdgeError(Exception):
    """Base class for all toolkit-specific failures."""


class ConfigError(KanEdgeError):
    """Inconsistent or unparseable configuration."""


class InfeasibleError(KanEdgeError):
    """A hardware constraint cannot be met at all (distinct from a bound
    that is merely exceeded, which feasibility checks report as False)."""


class SingularFitError(KanEdgeError):
    """Least-squares fit is rank deficient; carries the basis indices whose
    supports the samples failed to cover."""

    def __init__(self, message: str, basis_indices=()):
        super().__init__(message)
        self.basis_indices = tuple(basis_indices)


class TrainingDivergedError(KanEdgeError):
    """Loss became non-finite during training."""


class NoFeasibleStartError(KanEdgeError):
    """No candidate configuration passes the feasibility screen."""
