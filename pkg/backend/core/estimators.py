"""
Point estimators of the population mean using a binary auxiliary attribute
"""
import math
import logging
from dataclasses import dataclass, asdict
from enum import Enum
from typing import TYPE_CHECKING, Dict, Optional

from backend.core.errors import (
    DomainError,
    MissingFirstPhaseError,
    MissingWeightsError,
    ZeroDenominatorError,
)
from backend.core.population import PopulationSummary

if TYPE_CHECKING:
    from backend.core.weights import WeightVector

logger = logging.getLogger(__name__)


class EstimatorKind(str, Enum):
    MEAN = 'Mean'
    NG_RATIO = 'NGRatio'
    NG_PRODUCT = 'NGProduct'
    S1 = 'S1'
    S2 = 'S2'
    P_COMBINED = 'PCombined'
    D1 = 'D1'
    D2 = 'D2'
    PD_COMBINED = 'PdCombined'

    @property
    def is_two_phase(self) -> bool:
        return self in (EstimatorKind.D1, EstimatorKind.D2, EstimatorKind.PD_COMBINED)

    @property
    def is_combined(self) -> bool:
        return self in (EstimatorKind.P_COMBINED, EstimatorKind.PD_COMBINED)


@dataclass(frozen=True)
class DesignConstants:
    """
    Tunable scalars selecting a family member

    K1..K3 and alpha shape the ratio class, K4, K5, beta and lam (lambda) the
    exponential class. m, q and gamma are the two-phase analogues of alpha,
    beta and lambda. Defaults are the all-ones design.
    """
    K1: float = 1.0
    K2: int = 1
    K3: float = 1.0
    K4: float = 1.0
    K5: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    lam: float = 1.0
    m: float = 1.0
    q: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.K2 not in (1, -1):
            raise DomainError(f"K2 takes the values +1 and -1 only, got {self.K2}")
        object.__setattr__(self, 'K2', int(self.K2))

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['lambda'] = data.pop('lam')
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'DesignConstants':
        fields = dict(data)
        if 'lambda' in fields:
            fields['lam'] = fields.pop('lambda')
        unknown = sorted(set(fields) - set(cls.__dataclass_fields__))
        if unknown:
            raise DomainError(f"Unknown design constants: {', '.join(unknown)}")
        if 'K2' in fields:
            value = fields['K2']
            if float(value) not in (1.0, -1.0):
                raise DomainError(f"K2 takes the values +1 and -1 only, got {value}")
            fields['K2'] = int(value)
        return cls(**{key: (value if key == 'K2' else float(value)) for key, value in fields.items()})


@dataclass(frozen=True)
class ShapeConstants:
    """V1 = K1P/(K1P + K2K3), V2 = K4P/(K4P + K5); R1 = V1 and R2 = V2/2 in two-phase role"""
    V1: float
    V2: float
    R1: float
    R2: float


def shape_v1(pop: PopulationSummary, dc: DesignConstants) -> float:
    denominator = dc.K1 * pop.P + dc.K2 * dc.K3
    if denominator == 0:
        raise ZeroDenominatorError('K1*P + K2*K3')
    return dc.K1 * pop.P / denominator


def shape_v2(pop: PopulationSummary, dc: DesignConstants) -> float:
    denominator = dc.K4 * pop.P + dc.K5
    if denominator == 0:
        raise ZeroDenominatorError('K4*P + K5')
    return dc.K4 * pop.P / denominator


def shape_constants(pop: PopulationSummary, dc: DesignConstants) -> ShapeConstants:
    v1 = shape_v1(pop, dc)
    v2 = shape_v2(pop, dc)
    return ShapeConstants(V1=v1, V2=v2, R1=v1, R2=v2 / 2)


@dataclass(frozen=True)
class SampleQuantities:
    """Observed sample mean and attribute proportion(s)"""
    y_bar: float
    p: float
    p_prime: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise DomainError(f"Sample proportion p must lie in [0, 1], got {self.p}")
        if self.p_prime is not None and not 0 <= self.p_prime <= 1:
            raise DomainError(f"First-phase proportion must lie in [0, 1], got {self.p_prime}")


@dataclass(frozen=True)
class EstimatorSpec:
    """An estimator kind with its constants and, for combined kinds, its weights"""
    kind: EstimatorKind
    constants: DesignConstants = DesignConstants()
    weights: Optional['WeightVector'] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', EstimatorKind(self.kind))
        if self.weights is not None and not self.kind.is_combined:
            raise DomainError(f"Weights only apply to combined estimators, not {self.kind.value}")

    def with_weights(self, weights: 'WeightVector') -> 'EstimatorSpec':
        return EstimatorSpec(kind=self.kind, constants=self.constants, weights=weights)

    def to_dict(self) -> Dict:
        data = {'kind': self.kind.value}
        data.update(self.constants.to_dict())
        if self.weights is not None:
            data['weights'] = list(self.weights.as_tuple())
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'EstimatorSpec':
        """
        Parse the flat JSON form {"kind": ..., "K1": ..., "weights": [w0, w1, w2]}
        """
        from backend.core.weights import PUBLISHED_TOLERANCE, WeightVector

        fields = dict(data)
        try:
            kind = EstimatorKind(fields.pop('kind'))
        except KeyError:
            raise DomainError("Estimator spec is missing 'kind'")
        except ValueError as e:
            raise DomainError(f"Unknown estimator kind: {e}")

        weights = fields.pop('weights', None)
        weight_vector = None
        if weights is not None:
            if len(weights) != 3:
                raise DomainError(f"Expected three weights, got {len(weights)}")
            role = 'h' if kind.is_two_phase else 'w'
            weight_vector = WeightVector(
                *(float(w) for w in weights), role=role, tolerance=PUBLISHED_TOLERANCE
            )
        return cls(kind=kind, constants=DesignConstants.from_dict(fields), weights=weight_vector)


def _power(base: float, exponent: float, term: str) -> float:
    if base == 0 and exponent < 0:
        raise ZeroDenominatorError(term)
    if base < 0 and not float(exponent).is_integer():
        raise DomainError(f"Negative base {base} in {term} with non-integer exponent {exponent}")
    return base ** exponent


def _ratio_factor(reference: float, observed: float, dc: DesignConstants, exponent: float) -> float:
    numerator = dc.K1 * reference + dc.K2 * dc.K3
    denominator = dc.K1 * observed + dc.K2 * dc.K3
    if denominator == 0:
        raise ZeroDenominatorError('K1*p + K2*K3')
    return _power(numerator / denominator, exponent, '(K1*P + K2*K3)/(K1*p + K2*K3)')


def _exponential_factor(
    reference: float,
    observed: float,
    dc: DesignConstants,
    power: float,
    scale: float,
) -> float:
    if reference == 0:
        raise ZeroDenominatorError('reference proportion')
    at_reference = dc.K4 * reference + dc.K5
    at_observed = dc.K4 * observed + dc.K5
    denominator = at_reference + at_observed
    if denominator == 0:
        raise ZeroDenominatorError('(K4*P + K5) + (K4*p + K5)')
    ratio = _power(observed / reference, power, 'p/P')
    return 2 - ratio * math.exp(scale * (at_reference - at_observed) / denominator)


def _require_weights(spec: EstimatorSpec) -> 'WeightVector':
    if spec.weights is None:
        raise MissingWeightsError(f"{spec.kind.value} requires a weight vector")
    return spec.weights


def evaluate(spec: EstimatorSpec, pop: PopulationSummary, s: SampleQuantities) -> float:
    """
    Evaluate an estimator on observed sample quantities

    Args:
        spec: Estimator kind, constants and weights
        pop: Population providing the known proportion P
        s: Sample mean and proportion(s)

    Returns:
        The estimate of the population mean
    """
    if spec.kind.is_two_phase:
        return evaluate_two_phase(spec, pop, s)

    dc = spec.constants
    if spec.kind == EstimatorKind.MEAN:
        return s.y_bar
    if spec.kind == EstimatorKind.NG_RATIO:
        if s.p == 0:
            raise ZeroDenominatorError('p')
        return s.y_bar * (pop.P / s.p)
    if spec.kind == EstimatorKind.NG_PRODUCT:
        return s.y_bar * (s.p / pop.P)
    if spec.kind == EstimatorKind.S1:
        return s.y_bar * _ratio_factor(pop.P, s.p, dc, dc.alpha)
    if spec.kind == EstimatorKind.S2:
        return s.y_bar * _exponential_factor(pop.P, s.p, dc, dc.beta, dc.lam)

    w = _require_weights(spec)
    t_s1 = s.y_bar * _ratio_factor(pop.P, s.p, dc, dc.alpha)
    t_s2 = s.y_bar * _exponential_factor(pop.P, s.p, dc, dc.beta, dc.lam)
    return w.w0 * s.y_bar + w.w1 * t_s1 + w.w2 * t_s2


def evaluate_two_phase(spec: EstimatorSpec, pop: PopulationSummary, s: SampleQuantities) -> float:
    """
    Evaluate a two-phase estimator, with p' standing in for the unknown P

    Args:
        spec: Mean, D1, D2 or PdCombined
        pop: Population (only used for validation of the kind)
        s: Second-phase mean and proportion plus first-phase proportion

    Returns:
        The estimate of the population mean
    """
    if s.p_prime is None:
        raise MissingFirstPhaseError(f"{spec.kind.value} requires the first-phase proportion p'")

    dc = spec.constants
    if spec.kind == EstimatorKind.MEAN:
        return s.y_bar
    if spec.kind == EstimatorKind.D1:
        return s.y_bar * _ratio_factor(s.p_prime, s.p, dc, dc.m)
    if spec.kind == EstimatorKind.D2:
        return s.y_bar * _exponential_factor(s.p_prime, s.p, dc, dc.q, dc.gamma)
    if spec.kind == EstimatorKind.PD_COMBINED:
        h = _require_weights(spec)
        t_1d = s.y_bar * _ratio_factor(s.p_prime, s.p, dc, dc.m)
        t_2d = s.y_bar * _exponential_factor(s.p_prime, s.p, dc, dc.q, dc.gamma)
        return h.w0 * s.y_bar + h.w1 * t_1d + h.w2 * t_2d

    raise DomainError(f"{spec.kind.value} is a single-phase estimator")
