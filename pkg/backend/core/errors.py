"""
Exception hierarchy for estimation, weight solving and simulation
"""
from typing import Optional


class EstimationError(Exception):
    """Base class for every error raised by the estimation core"""


class DomainError(EstimationError):
    """Inputs violate a documented invariant"""


class DegenerateAttributeError(DomainError):
    """The auxiliary attribute is constant, so S_phi = 0 and the correlation is undefined"""


class ZeroDenominatorError(DomainError):
    """An estimator or shape-constant denominator vanished"""

    def __init__(self, term: str, message: Optional[str] = None):
        self.term = term
        super().__init__(message or f"Zero denominator in {term}")


class MissingFirstPhaseError(DomainError):
    """A two-phase quantity was requested without a first-phase proportion or size"""


class MissingWeightsError(DomainError):
    """A combined estimator was requested without its weight vector"""


class SingularSystemError(EstimationError):
    """The weight system has no unique solution"""

    def __init__(self, determinant: float, reason: str):
        self.determinant = determinant
        self.reason = reason
        super().__init__(f"Singular weight system ({reason}), determinant={determinant:.3e}")


class InfeasibleSystemError(EstimationError):
    """No weight choice attains the optimum slope"""


class InfeasibleTargetError(DomainError):
    """A synthetic population cannot reach the requested summary parameters"""

    def __init__(self, message: str, bound: float):
        self.bound = bound
        super().__init__(f"{message} (attainable bound: {bound})")


class UnknownTableError(DomainError):
    """The requested table id is not shipped"""

    def __init__(self, table_id: str):
        self.table_id = table_id
        super().__init__(f"Unknown table id: {table_id}")


class DataFileError(EstimationError):
    """A data file could not be read or is malformed"""
