"""Exception hierarchy shared by all ionsynth modules."""
from __future__ import annotations


class IonSynthError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(IonSynthError, ValueError):
    """Malformed input: bad sizes, non-unitary matrices, unnormalized states."""


class UnsupportedGateError(ValidationError):
    """A gate cannot be lowered to the trapped-ion pulse vocabulary."""


class SynthesisError(IonSynthError):
    """The synthesized network missed its target state.

    This signals an implementation bug rather than a user error, so both
    states are kept on the exception for inspection.
    """

    def __init__(self, message: str, target=None, achieved=None, fidelity: float | None = None):
        super().__init__(message)
        self.target = target
        self.achieved = achieved
        self.fidelity = fidelity


class SimulationError(IonSynthError):
    """Ion-level simulation left the modelled subspace."""


class LeakageError(SimulationError):
    """A sideband pulse would drive population out of the {0, 1} phonon manifold."""


class ResidualPopulationError(SimulationError):
    """Population remains outside the computational {g, e} x |0> subspace."""


class ConvergenceError(IonSynthError, ArithmeticError):
    """An iterative solver did not converge."""
