"""
First-order bias, MSE and PRE of every estimator class

All expressions are exact to first order in 1/n. Two-phase expressions use
E(e_phi'^2) = E(e_phi e_phi') = f2 C_p^2 and E(e_y e_phi') = f2 K_p C_p^2.
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import TYPE_CHECKING, Dict, Optional

import numpy as np

from backend.core.errors import MissingFirstPhaseError, MissingWeightsError
from backend.core.estimators import (
    DesignConstants,
    EstimatorKind,
    EstimatorSpec,
    shape_v1,
    shape_v2,
)
from backend.core.population import PopulationSummary, derive_constants

if TYPE_CHECKING:
    from backend.core.weights import WeightVector

logger = logging.getLogger(__name__)

NG_RATIO_CONSTANTS = DesignConstants(K1=1.0, K2=1, K3=0.0, alpha=1.0)
NG_PRODUCT_CONSTANTS = DesignConstants(K1=1.0, K2=1, K3=0.0, alpha=-1.0)


@dataclass(frozen=True)
class MomentReport:
    """Closed-form bias, MSE and PRE (percent, relative to Var(y_bar))"""
    bias: float
    mse: float
    pre: float

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class CombinedSlope:
    """Linear slopes of the combined estimators; the MSE is minimal when they equal K_p"""
    Q: Optional[float] = None
    L1: Optional[float] = None
    L2: Optional[float] = None


def var_mean(pop: PopulationSummary) -> float:
    """Exact Var(y_bar) = f1 S_y^2 under SRSWOR"""
    return derive_constants(pop).var_ybar


def pre(report_mse: float, pop: PopulationSummary) -> float:
    """
    Percent relative efficiency with respect to the sample mean

    A census (zero variance and zero MSE) is reported as 100.
    """
    variance = var_mean(pop)
    if report_mse == 0:
        return 100.0 if variance == 0 else math.inf
    return 100 * variance / report_mse


def _report(bias: float, mse: float, pop: PopulationSummary) -> MomentReport:
    return MomentReport(bias=bias, mse=mse, pre=pre(mse, pop))


def _require_two_phase(pop: PopulationSummary):
    if pop.n_prime is None:
        raise MissingFirstPhaseError("Two-phase moments need the first-phase size n_prime")


# Single-phase brackets

def bracket_a1(pop: PopulationSummary, dc: DesignConstants) -> float:
    """A1 = alpha(alpha+1)V1^2/2 - alpha V1 K_p"""
    v1 = shape_v1(pop, dc)
    k_p = derive_constants(pop).K_p
    return dc.alpha * (dc.alpha + 1) * v1 * v1 / 2 - dc.alpha * v1 * k_p


def bracket_a2(pop: PopulationSummary, dc: DesignConstants) -> float:
    """Five-term bias bracket of the exponential class"""
    v2 = shape_v2(pop, dc)
    k_p = derive_constants(pop).K_p
    beta, lam = dc.beta, dc.lam
    return (
        lam * v2 * beta / 2
        - beta * (beta - 1) / 2
        - lam * (lam + 2) * v2 * v2 / 8
        - beta * k_p
        + lam * v2 * k_p / 2
    )


def slope_s1(pop: PopulationSummary, dc: DesignConstants) -> float:
    return dc.alpha * shape_v1(pop, dc)


def slope_s2(pop: PopulationSummary, dc: DesignConstants) -> float:
    return dc.beta - dc.lam * shape_v2(pop, dc) / 2


def bias_s1(pop: PopulationSummary, dc: DesignConstants) -> float:
    derived = derive_constants(pop)
    return pop.y_mean * derived.f1 * pop.C_p ** 2 * bracket_a1(pop, dc)


def mse_s1(pop: PopulationSummary, dc: DesignConstants) -> float:
    derived = derive_constants(pop)
    v1 = shape_v1(pop, dc)
    return pop.y_mean ** 2 * derived.f1 * (
        pop.C_y ** 2 + pop.C_p ** 2 * (dc.alpha ** 2 * v1 * v1 - 2 * v1 * dc.alpha * derived.K_p)
    )


def bias_s2(pop: PopulationSummary, dc: DesignConstants) -> float:
    derived = derive_constants(pop)
    return pop.y_mean * derived.f1 * pop.C_p ** 2 * bracket_a2(pop, dc)


def mse_s2(pop: PopulationSummary, dc: DesignConstants) -> float:
    derived = derive_constants(pop)
    v2 = shape_v2(pop, dc)
    beta, lam = dc.beta, dc.lam
    return pop.y_mean ** 2 * derived.f1 * (
        pop.C_y ** 2
        + pop.C_p ** 2 * (beta ** 2 + lam ** 2 * v2 * v2 / 4 - beta * lam * v2)
        - 2 * derived.K_p * pop.C_p ** 2 * (beta - lam * v2 / 2)
    )


def report_s1(pop: PopulationSummary, dc: DesignConstants) -> MomentReport:
    return _report(bias_s1(pop, dc), mse_s1(pop, dc), pop)


def report_s2(pop: PopulationSummary, dc: DesignConstants) -> MomentReport:
    return _report(bias_s2(pop, dc), mse_s2(pop, dc), pop)


# Combined single-phase estimator

def slopes(
    pop: PopulationSummary,
    dc: DesignConstants,
    w: Optional['WeightVector'] = None,
    h: Optional['WeightVector'] = None,
) -> CombinedSlope:
    """
    Slopes Q (single-phase weights w), L2 (two-phase weights h) and L1 = q - gamma R2
    """
    q_slope = None
    if w is not None:
        q_slope = w.w1 * slope_s1(pop, dc) + w.w2 * slope_s2(pop, dc)
    l1 = slope_2d(pop, dc)
    l2 = None
    if h is not None:
        l2 = h.w1 * slope_1d(pop, dc) + h.w2 * l1
    return CombinedSlope(Q=q_slope, L1=l1, L2=l2)


def bias_p(pop: PopulationSummary, dc: DesignConstants, w: 'WeightVector') -> float:
    derived = derive_constants(pop)
    return pop.y_mean * derived.f1 * pop.C_p ** 2 * (
        w.w1 * bracket_a1(pop, dc) + w.w2 * bracket_a2(pop, dc)
    )


def mse_p(pop: PopulationSummary, dc: DesignConstants, w: 'WeightVector') -> float:
    derived = derive_constants(pop)
    q_slope = slopes(pop, dc, w=w).Q
    return pop.y_mean ** 2 * derived.f1 * (
        pop.C_y ** 2 + pop.C_p ** 2 * (q_slope ** 2 - 2 * q_slope * derived.K_p)
    )


def mse_p_min(pop: PopulationSummary) -> MomentReport:
    """Minimum MSE over the linear variety, equal to the regression estimator's"""
    derived = derive_constants(pop)
    mse = pop.y_mean ** 2 * derived.f1 * pop.C_y ** 2 * (1 - pop.rho_pb ** 2)
    return _report(0.0, mse, pop)


# Two-phase classes

def slope_1d(pop: PopulationSummary, dc: DesignConstants) -> float:
    return dc.m * shape_v1(pop, dc)


def slope_2d(pop: PopulationSummary, dc: DesignConstants) -> float:
    """L1 = q - gamma R2"""
    return dc.q - dc.gamma * shape_v2(pop, dc) / 2


def bracket_n1(pop: PopulationSummary, dc: DesignConstants, paper_literal: bool = False) -> float:
    """B(t_1d) / Y_bar"""
    _require_two_phase(pop)
    derived = derive_constants(pop)
    r1 = shape_v1(pop, dc)
    m, c_p2, k_p = dc.m, pop.C_p ** 2, derived.K_p
    if paper_literal:
        return (
            m * (m - 1) * r1 * r1 * derived.f2 * c_p2 / 2
            + m * (m + 1) * r1 * r1 * derived.f1 * c_p2 / 2
            - m * m * r1 * r1 * derived.f2 * c_p2
            + m * r1 * derived.f3 * k_p * c_p2
        )
    return derived.f3 * c_p2 * (m * (m + 1) * r1 * r1 / 2 - m * r1 * k_p)


def bracket_n2(pop: PopulationSummary, dc: DesignConstants, paper_literal: bool = False) -> float:
    """B(t_2d) / Y_bar"""
    _require_two_phase(pop)
    derived = derive_constants(pop)
    r2 = shape_v2(pop, dc) / 2
    q, gamma, c_p2, k_p = dc.q, dc.gamma, pop.C_p ** 2, derived.K_p
    if paper_literal:
        return (
            -q * (q - 1) * derived.f1 * c_p2 / 2
            + q * (q + 1) * derived.f2 * c_p2 / 2
            + q * derived.f2 * k_p * c_p2
            + q * q * derived.f2 * c_p2
            + derived.f3 * gamma * r2 * k_p * c_p2
            + derived.f3 * gamma * r2 * q * c_p2
        )
    return derived.f3 * c_p2 * (
        gamma * q * r2
        - q * (q - 1) / 2
        - gamma * (gamma + 2) * r2 * r2 / 2
        - q * k_p
        + gamma * r2 * k_p
    )


def bias_1d(pop: PopulationSummary, dc: DesignConstants, paper_literal: bool = False) -> float:
    return pop.y_mean * bracket_n1(pop, dc, paper_literal)


def mse_1d(pop: PopulationSummary, dc: DesignConstants) -> float:
    _require_two_phase(pop)
    derived = derive_constants(pop)
    slope = slope_1d(pop, dc)
    c_p2 = pop.C_p ** 2
    return pop.y_mean ** 2 * (
        derived.f1 * pop.C_y ** 2
        + slope * slope * derived.f3 * c_p2
        - 2 * slope * derived.K_p * derived.f3 * c_p2
    )


def bias_2d(pop: PopulationSummary, dc: DesignConstants, paper_literal: bool = False) -> float:
    return pop.y_mean * bracket_n2(pop, dc, paper_literal)


def mse_2d(pop: PopulationSummary, dc: DesignConstants, paper_literal: bool = False) -> float:
    """MSE of t_2d; the printed form drops the cross term and is kept behind paper_literal"""
    _require_two_phase(pop)
    derived = derive_constants(pop)
    l1 = slope_2d(pop, dc)
    c_p2 = pop.C_p ** 2
    mse = derived.f1 * pop.C_y ** 2 + l1 * l1 * derived.f3 * c_p2
    if not paper_literal:
        mse -= 2 * l1 * derived.f3 * derived.K_p * c_p2
    return pop.y_mean ** 2 * mse


def report_1d(pop: PopulationSummary, dc: DesignConstants, paper_literal: bool = False) -> MomentReport:
    return _report(bias_1d(pop, dc, paper_literal), mse_1d(pop, dc), pop)


def report_2d(pop: PopulationSummary, dc: DesignConstants, paper_literal: bool = False) -> MomentReport:
    return _report(bias_2d(pop, dc, paper_literal), mse_2d(pop, dc, paper_literal), pop)


def bias_pd(
    pop: PopulationSummary,
    dc: DesignConstants,
    h: 'WeightVector',
    paper_literal: bool = False,
) -> float:
    """h-weighted sum of the two-phase class biases"""
    return h.w1 * bias_1d(pop, dc, paper_literal) + h.w2 * bias_2d(pop, dc, paper_literal)


def mse_pd(pop: PopulationSummary, dc: DesignConstants, h: 'WeightVector') -> float:
    _require_two_phase(pop)
    derived = derive_constants(pop)
    l2 = slopes(pop, dc, h=h).L2
    c_p2 = pop.C_p ** 2
    return pop.y_mean ** 2 * (
        derived.f1 * pop.C_y ** 2
        + l2 * l2 * derived.f3 * c_p2
        - 2 * l2 * derived.f3 * derived.K_p * c_p2
    )


def mse_pd_min(pop: PopulationSummary) -> MomentReport:
    _require_two_phase(pop)
    derived = derive_constants(pop)
    mse = pop.y_mean ** 2 * pop.C_y ** 2 * (derived.f1 - derived.f3 * pop.rho_pb ** 2)
    return _report(0.0, mse, pop)


def report(spec: EstimatorSpec, pop: PopulationSummary, paper_literal: bool = False) -> MomentReport:
    """
    Closed-form moments of any estimator spec

    Args:
        spec: Estimator kind, constants and weights
        pop: Population (with n_prime for two-phase kinds)
        paper_literal: Use the printed two-phase bias and t_2d MSE forms

    Returns:
        MomentReport
    """
    dc = spec.constants
    kind = spec.kind
    if kind == EstimatorKind.MEAN:
        return _report(0.0, var_mean(pop), pop)
    if kind == EstimatorKind.NG_RATIO:
        return report_s1(pop, NG_RATIO_CONSTANTS)
    if kind == EstimatorKind.NG_PRODUCT:
        return report_s1(pop, NG_PRODUCT_CONSTANTS)
    if kind == EstimatorKind.S1:
        return report_s1(pop, dc)
    if kind == EstimatorKind.S2:
        return report_s2(pop, dc)
    if kind == EstimatorKind.D1:
        return report_1d(pop, dc, paper_literal)
    if kind == EstimatorKind.D2:
        return report_2d(pop, dc, paper_literal)

    if spec.weights is None:
        raise MissingWeightsError(f"{kind.value} requires a weight vector")
    if kind == EstimatorKind.P_COMBINED:
        return _report(bias_p(pop, dc, spec.weights), mse_p(pop, dc, spec.weights), pop)
    return _report(
        bias_pd(pop, dc, spec.weights, paper_literal),
        mse_pd(pop, dc, spec.weights),
        pop,
    )


# Linearization check

def e_moment_matrix(pop: PopulationSummary) -> np.ndarray:
    """
    Covariance matrix of the relative errors (e_y, e_phi, e_phi')

    Single-phase summaries give the 2x2 block for (e_y, e_phi).
    """
    derived = derive_constants(pop)
    c_y, c_p, rho = pop.C_y, pop.C_p, pop.rho_pb
    f1 = derived.f1
    if pop.n_prime is None:
        return np.array([
            [f1 * c_y * c_y, f1 * rho * c_y * c_p],
            [f1 * rho * c_y * c_p, f1 * c_p * c_p],
        ])
    f2 = derived.f2
    return np.array([
        [f1 * c_y * c_y, f1 * rho * c_y * c_p, f2 * rho * c_y * c_p],
        [f1 * rho * c_y * c_p, f1 * c_p * c_p, f2 * c_p * c_p],
        [f2 * rho * c_y * c_p, f2 * c_p * c_p, f2 * c_p * c_p],
    ])


def linear_coefficients(spec: EstimatorSpec, pop: PopulationSummary) -> np.ndarray:
    """
    Coefficients of (t - Y_bar)/Y_bar on the relative errors to first order
    """
    dc = spec.constants
    kind = spec.kind
    if kind == EstimatorKind.MEAN:
        slope = 0.0
    elif kind == EstimatorKind.NG_RATIO:
        slope = slope_s1(pop, NG_RATIO_CONSTANTS)
    elif kind == EstimatorKind.NG_PRODUCT:
        slope = slope_s1(pop, NG_PRODUCT_CONSTANTS)
    elif kind == EstimatorKind.S1:
        slope = slope_s1(pop, dc)
    elif kind == EstimatorKind.S2:
        slope = slope_s2(pop, dc)
    elif kind == EstimatorKind.P_COMBINED:
        if spec.weights is None:
            raise MissingWeightsError("PCombined requires a weight vector")
        slope = slopes(pop, dc, w=spec.weights).Q
    elif kind == EstimatorKind.D1:
        slope = slope_1d(pop, dc)
    elif kind == EstimatorKind.D2:
        slope = slope_2d(pop, dc)
    else:
        if spec.weights is None:
            raise MissingWeightsError("PdCombined requires a weight vector")
        slope = slopes(pop, dc, h=spec.weights).L2

    if kind.is_two_phase:
        return np.array([1.0, -slope, slope])
    if pop.n_prime is None:
        return np.array([1.0, -slope])
    return np.array([1.0, -slope, 0.0])


def linearized_mse(pop: PopulationSummary, coefficients: np.ndarray) -> float:
    """Y_bar^2 c' Sigma c for the linear terms c of an estimator"""
    sigma = e_moment_matrix(pop)
    return float(pop.y_mean ** 2 * coefficients @ sigma @ coefficients)
