"""Exception hierarchy shared by every toolkit module."""


class NonGaussianityError(Exception):
    """Base class for all toolkit failures"""


class InvalidArgumentError(NonGaussianityError, ValueError):
    """An argument is outside its documented domain"""


class TruncationOverflowError(NonGaussianityError):
    """Population leaked past the Fock cutoff"""

    def __init__(self, leakage, required_dim, message=None):
        self.leakage = float(leakage)
        self.required_dim = int(required_dim)
        if message is None:
            message = (f"truncation leakage {self.leakage:.3e} exceeds budget; "
                       f"retry with dim >= {self.required_dim}")
        super().__init__(message)


class ZeroProbabilityError(NonGaussianityError):
    """Conditioning window has (numerically) zero probability"""

    def __init__(self, probability, floor):
        self.probability = float(probability)
        self.floor = float(floor)
        super().__init__(f"success probability {self.probability:.3e} below floor {self.floor:.1e}")


class ConvergenceFailure(NonGaussianityError):
    """An adaptive procedure ran out of refinements"""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(f"{message} {self.diagnostics}" if self.diagnostics else message)


class NumericalInconsistencyError(NonGaussianityError):
    pass


class InvalidStateError(NonGaussianityError):
    pass


class UndefinedStateError(NonGaussianityError):
    """State normalization vanishes for the requested parameters"""


class DomainTooSmallError(NonGaussianityError):
    """Outcome integration domain captures too little probability"""

    def __init__(self, coverage, required):
        self.coverage = float(coverage)
        super().__init__(f"outcome domain captures {self.coverage:.8f} < {required} of probability")


STATE_GRAMMAR = ("fock:n | coherent:re,im | squeezed:r[,psi] | cubic:gamma,r | sub:alpha,r | "
                 "add:alpha,r | cat:alpha,phi,theta | lossy1:beta | pair:beta | thermal:nbar")


class StateSpecParseError(NonGaussianityError, ValueError):
    def __init__(self, text, reason):
        self.text = text
        super().__init__(f"cannot parse state '{text}': {reason}. Expected {STATE_GRAMMAR}")
