"""Exception types shared across the package."""


class HyperresError(Exception):
    """Base class for all package errors."""


class ValidationError(HyperresError):
    """Bad input or run configuration.  CLI exit code 2."""


class NumericalBudgetError(HyperresError):
    """A tolerance or refinement budget could not be met.  CLI exit code 3."""


class InternalConsistencyError(HyperresError):
    """Two internal routes disagree (e.g. winding count vs polished roots).
    CLI exit code 4."""


class PoleError(HyperresError):
    """Evaluation requested at a pole of the function."""


class NonConvergenceError(NumericalBudgetError):
    """A series or transformation failed to reach the requested tolerance."""


class QuadratureError(NumericalBudgetError):
    """Adaptive quadrature did not converge."""


class StiffnessError(NumericalBudgetError):
    """ODE integrator failed to meet tolerance."""


class NearSingularWronskianError(NumericalBudgetError):
    """Matching system close to singular; reports distance to the exceptional
    spectral-parameter set."""

    def __init__(self, message, distance=None):
        super().__init__(message)
        self.distance = distance


class UnwrapError(NumericalBudgetError):
    """Phase step between adjacent grid samples too large for unambiguous
    unwrapping; carries the offending interval."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class CapSensitivityError(NumericalBudgetError):
    """Discretization eigenvalue moved too much under a cap change."""
