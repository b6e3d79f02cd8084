"""Exception hierarchy shared by all modules."""


class HopfRenormError(Exception):
    """Base class for every error raised by this package."""


class GraphInvariantError(HopfRenormError, ValueError):
    """A graph violates the phi^3 Feynman-graph invariants."""


class DomainError(HopfRenormError, ValueError):
    """An argument is outside the domain of the operation."""


class UnknownGeneratorError(HopfRenormError, KeyError):
    """A polynomial or character refers to an unregistered generator."""


class ClosureError(HopfRenormError):
    """A recursion needs a generator that the caller did not supply."""

    def __init__(self, message, label=None):
        super().__init__(message)
        self.label = label


class IncompleteUniverseError(ClosureError):
    """The explicit graph universe is not closed under the coproduct."""


class ResourceError(HopfRenormError):
    """A configured enumeration or summation bound would be exceeded."""


class PoleError(HopfRenormError, ValueError):
    """A Laurent series with a pole was evaluated at z = 0."""

    def __init__(self, message, pole_order):
        super().__init__(message)
        self.pole_order = pole_order


class AlignmentError(HopfRenormError, ValueError):
    """Operands carry different truncation orders."""


class ConvergenceError(HopfRenormError):
    """A truncated mode sum is not stable under cutoff doubling."""


class UnsupportedBackendError(HopfRenormError):
    """The operation is not available for this spectral backend or graph."""


class CapabilityError(HopfRenormError):
    """The requested expansion order exceeds what is available."""


class PoleInstabilityError(HopfRenormError):
    """The asymptotic subtraction depth is too small for the requested expansion."""


class LocalityError(HopfRenormError):
    """Counterterms depend on the renormalization scale; beta is undefined."""

    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class SpectrumError(HopfRenormError, ValueError):
    """An operator that must be positive has a non-positive eigenvalue."""


class DivergenceWarning(UserWarning):
    """A coincident-point Green's function sum does not converge at this z."""
