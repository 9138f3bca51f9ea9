from typing import Optional, Tuple


class BaseCustomError(Exception):
    """Base class for custom errors"""
    def __init__(self, message: str, status_code: int):
        self.message = message
        self.status_code = status_code
        super().__init__(self.message)

    def __reduce__(self):
        # rebuilt from attributes so errors survive worker processes
        return (_restore_error, (type(self), dict(self.__dict__)))


def _restore_error(cls, state):
    error = cls.__new__(cls)
    Exception.__init__(error, state.get("message"))
    error.__dict__.update(state)
    return error

# -------------------------------------------------------------------------------- Numerical Domain Errors

class DomainViolationError(BaseCustomError):
    """Raised when a point lies outside the domain of a basis or operator"""
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message, status_code)

class ParityError(BaseCustomError):
    """Raised when a Zernike degree and order have different parity"""
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message, status_code)

class PreconditionError(BaseCustomError):
    """Raised when an operation is called outside its preconditions"""
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message, status_code)

class OverflowGuardError(BaseCustomError):
    """Raised when an inverse singular value produces a non-finite coefficient"""
    def __init__(self, message: str, status_code: int = 500):
        super().__init__(message, status_code)

class UnsupportedOperatorError(BaseCustomError):
    """Raised when an operator kind does not support the requested evaluation"""
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message, status_code)

class NonPositiveDensityError(BaseCustomError):
    """Raised when a density is zero or negative on the quadrature grid"""
    def __init__(self, message: str, status_code: int = 422):
        super().__init__(message, status_code)

class EnvelopeError(BaseCustomError):
    """Raised when rejection sampling meets a density value above its envelope"""
    def __init__(self, message: str, status_code: int = 500):
        super().__init__(message, status_code)

# -------------------------------------------------------------------------------- Construction Errors

class InfeasiblePackingError(BaseCustomError):
    """Raised when a packing cannot be placed inside the ellipsoid"""
    def __init__(self, message: str, feasible_range: Tuple[float, float], status_code: int = 422):
        self.feasible_range = feasible_range
        super().__init__(message, status_code)

class NetCardinalityError(BaseCustomError):
    """Raised when a net is too large to enumerate"""
    def __init__(self, message: str, count: int, status_code: int = 422):
        self.count = count
        super().__init__(message, status_code)

class BoxMismatchError(BaseCustomError):
    """Raised when observation and net are indexed over different boxes"""
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message, status_code)

class ComponentDeclarationError(BaseCustomError):
    """Raised when additive components are not mean-zero or overlap"""
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message, status_code)

# -------------------------------------------------------------------------------- Solver Errors

class BisectionError(BaseCustomError):
    """Raised when a root cannot be bracketed"""
    def __init__(self, message: str, status_code: int = 500):
        super().__init__(message, status_code)

class DivergentIntegralError(BaseCustomError):
    """Raised when the entropy integral diverges at zero"""
    def __init__(self, message: str, status_code: int = 422):
        super().__init__(message, status_code)

class AdmissibilityError(BaseCustomError):
    """Raised when the oracle-inequality constant xi falls outside its admissible interval"""
    def __init__(self, message: str, interval: Tuple[float, float], status_code: int = 400):
        self.interval = interval
        super().__init__(message, status_code)

# -------------------------------------------------------------------------------- Configuration and Harness Errors

class ConfigError(BaseCustomError):
    """Raised when an experiment configuration is invalid"""
    def __init__(self, message: str, key: Optional[str] = None, status_code: int = 400):
        self.key = key
        super().__init__(message, status_code)

class HarnessError(BaseCustomError):
    """Raised when there's an error running an experiment"""
    def __init__(self, message: str, status_code: int = 500):
        super().__init__(message, status_code)

class OutputExistsError(BaseCustomError):
    """Raised when an output directory already holds results"""
    def __init__(self, message: str, status_code: int = 409):
        super().__init__(message, status_code)
