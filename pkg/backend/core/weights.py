"""
Bias-cancelling, MSE-minimizing weights for the combined estimators
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from backend.core.errors import (
    DomainError,
    InfeasibleSystemError,
    MissingFirstPhaseError,
    SingularSystemError,
)
from backend.core.estimators import DesignConstants, EstimatorSpec
from backend.core.moments import (
    bracket_a1,
    bracket_a2,
    bracket_n1,
    bracket_n2,
    slope_1d,
    slope_2d,
    slope_s1,
    slope_s2,
)
from backend.core.population import PopulationSummary, derive_constants

logger = logging.getLogger(__name__)

SOLVER_TOLERANCE = 1e-10
PUBLISHED_TOLERANCE = 1e-5
SINGULARITY_THRESHOLD = 1e-12


@dataclass(frozen=True)
class WeightVector:
    """
    Weights of the three basis estimators (w's single-phase, h's two-phase)

    The weights must sum to one within ``tolerance``; printed weights are
    rounded and are checked with PUBLISHED_TOLERANCE.
    """
    w0: float
    w1: float
    w2: float
    role: str = 'w'
    tolerance: float = SOLVER_TOLERANCE
    residual: Optional[float] = None

    def __post_init__(self):
        if self.role not in ('w', 'h'):
            raise DomainError(f"Weight role must be 'w' or 'h', got {self.role}")
        total = self.w0 + self.w1 + self.w2
        if abs(total - 1) > self.tolerance:
            raise DomainError(f"Weights must sum to 1, got {total!r}")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.w0, self.w1, self.w2)

    def to_dict(self) -> Dict:
        data = {f"{self.role}{i}": value for i, value in enumerate(self.as_tuple())}
        if self.residual is not None:
            data['residual'] = self.residual
        return data


@dataclass(frozen=True)
class WeightSystem:
    """
    The constraint system M w = rhs

    Rows: weights sum to one, combined slope equals K_p, weighted first-order
    bias vanishes. The bias row carries the brackets with the common factor
    divided out.
    """
    row_sum: Tuple[float, float, float]
    row_slope: Tuple[float, float, float]
    row_bias: Tuple[float, float, float]
    rhs: Tuple[float, float, float]
    role: str = 'w'

    @property
    def matrix(self) -> np.ndarray:
        return np.array([self.row_sum, self.row_slope, self.row_bias], dtype=float)

    @property
    def determinant(self) -> float:
        """Determinant of the lower-right 2x2 block"""
        return self.row_slope[1] * self.row_bias[2] - self.row_slope[2] * self.row_bias[1]

    @property
    def condition_number(self) -> float:
        if self.is_singular:
            return math.inf
        return float(np.linalg.cond(self.matrix))

    @property
    def is_singular(self) -> bool:
        slope_norm = math.hypot(self.row_slope[1], self.row_slope[2])
        bias_norm = math.hypot(self.row_bias[1], self.row_bias[2])
        return abs(self.determinant) <= SINGULARITY_THRESHOLD * slope_norm * bias_norm

    @property
    def degeneracy(self) -> Optional[str]:
        if not self.is_singular:
            return None
        if self.row_slope[1] == 0 and self.row_slope[2] == 0:
            return 'zero slopes'
        return 'collinear estimators'

    def to_dict(self) -> Dict:
        return {
            'role': self.role,
            'matrix': [list(self.row_sum), list(self.row_slope), list(self.row_bias)],
            'rhs': list(self.rhs),
            'determinant': self.determinant,
            'condition_number': self.condition_number,
            'singular': self.is_singular,
        }


def build_system_single(pop: PopulationSummary, dc: DesignConstants) -> WeightSystem:
    """
    Constraint system for the single-phase weights w

    Args:
        pop: Population summary
        dc: Design constants shared by the basis estimators

    Returns:
        WeightSystem with slope row (0, alpha V1, beta - lambda V2/2) and bias row (0, A1, A2)
    """
    k_p = derive_constants(pop).K_p
    return WeightSystem(
        row_sum=(1.0, 1.0, 1.0),
        row_slope=(0.0, slope_s1(pop, dc), slope_s2(pop, dc)),
        row_bias=(0.0, bracket_a1(pop, dc), bracket_a2(pop, dc)),
        rhs=(1.0, k_p, 0.0),
        role='w',
    )


def build_system_two_phase(
    pop: PopulationSummary,
    dc: DesignConstants,
    paper_literal: bool = False,
) -> WeightSystem:
    """
    Constraint system for the two-phase weights h

    Args:
        pop: Population summary with n_prime
        dc: Design constants (m, q, gamma take the roles of alpha, beta, lambda)
        paper_literal: Use the printed two-phase bias forms in the bias row

    Returns:
        WeightSystem with slope row (0, m R1, q - gamma R2) and bias row (0, N1, N2)
    """
    if pop.n_prime is None:
        raise MissingFirstPhaseError("Two-phase weights need the first-phase size n_prime")
    k_p = derive_constants(pop).K_p
    return WeightSystem(
        row_sum=(1.0, 1.0, 1.0),
        row_slope=(0.0, slope_1d(pop, dc), slope_2d(pop, dc)),
        row_bias=(0.0, bracket_n1(pop, dc, paper_literal), bracket_n2(pop, dc, paper_literal)),
        rhs=(1.0, k_p, 0.0),
        role='h',
    )


def solve_weights(system: WeightSystem) -> WeightVector:
    """
    Solve the constraint system with LU partial pivoting

    Args:
        system: Weight system

    Returns:
        WeightVector carrying the max-norm residual of M w - rhs
    """
    if system.row_slope[1] == 0 and system.row_slope[2] == 0 and system.rhs[1] != 0:
        raise InfeasibleSystemError(
            f"Both basis slopes are zero but K_p = {system.rhs[1]}; the optimum is unreachable"
        )
    if system.is_singular:
        raise SingularSystemError(system.determinant, system.degeneracy)

    matrix = system.matrix
    rhs = np.array(system.rhs, dtype=float)
    solution = lu_solve(lu_factor(matrix), rhs)
    residual = float(np.max(np.abs(matrix @ solution - rhs)))

    if residual >= SOLVER_TOLERANCE * float(np.max(np.abs(rhs))):
        logger.warning(f"Weight system residual {residual:.3e} exceeds tolerance")
    logger.info(
        f"Solved {system.role}-weights {solution.tolist()} "
        f"(condition number {system.condition_number:.3e}, residual {residual:.3e})"
    )

    scale = max(1.0, float(np.max(np.abs(solution))))
    return WeightVector(
        float(solution[0]),
        float(solution[1]),
        float(solution[2]),
        role=system.role,
        tolerance=SOLVER_TOLERANCE * scale,
        residual=residual,
    )


def optimum_weights(pop: PopulationSummary, dc: DesignConstants, two_phase: bool = False,
                    paper_literal: bool = False) -> WeightVector:
    """Build and solve the system for a population and design in one step"""
    if two_phase:
        return solve_weights(build_system_two_phase(pop, dc, paper_literal))
    return solve_weights(build_system_single(pop, dc))


def parse_spec(data: Dict, pop: PopulationSummary, paper_literal: bool = False) -> EstimatorSpec:
    """
    Parse a spec dict, solving for the weights when they are given as "optimum"

    Args:
        data: Flat spec form accepted by EstimatorSpec.from_dict
        pop: Population the optimum weights are solved on
        paper_literal: Use the printed two-phase bias forms in the system

    Returns:
        EstimatorSpec
    """
    fields = dict(data)
    if fields.get('weights') != 'optimum':
        return EstimatorSpec.from_dict(fields)
    fields.pop('weights')
    spec = EstimatorSpec.from_dict(fields)
    if not spec.kind.is_combined:
        raise DomainError(f"Optimum weights only apply to combined estimators, not {spec.kind.value}")
    return spec.with_weights(optimum_weights(pop, spec.constants, spec.kind.is_two_phase, paper_literal))
