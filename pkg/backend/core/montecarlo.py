"""
Finite-population Monte Carlo oracle for the closed-form moments

A synthetic population is built to hit a target summary, SRSWOR or nested
two-phase samples are drawn from it and every estimator is evaluated on
each draw. Replication i always uses the generator
default_rng(SeedSequence(seed, spawn_key=(i,))), so results do not depend on
how replications are split into chunks or where the chunks run.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from backend.core.errors import (
    DomainError,
    InfeasibleTargetError,
    MissingFirstPhaseError,
    MissingWeightsError,
    ZeroDenominatorError,
)
from backend.core.estimators import EstimatorSpec, SampleQuantities, evaluate
from backend.core.moments import report
from backend.core.population import PopulationSummary, summarize_microdata
from backend.core.weights import optimum_weights

logger = logging.getLogger(__name__)

RESIDUAL_SHAPES = ('gaussian', 'student_t')
STUDENT_T_DF = 5
UNSTABLE_FRACTION = 0.01
CALIBRATION_TOLERANCE = 1e-6
DEFAULT_CHUNK_SIZE = 5000
RNG_ALGORITHM = 'PCG64'
SEED_DERIVATION = 'SeedSequence(seed, spawn_key=(replication,))'


def _setting(name: str, default):
    try:
        from django.conf import settings
        return settings.PROPEST.get(name, default)
    except Exception:
        return default


@dataclass(frozen=True, eq=False)
class SyntheticPopulation:
    """Units (y, phi) and the summary recomputed from them"""
    y: np.ndarray
    phi: np.ndarray
    achieved: PopulationSummary
    target: Optional[PopulationSummary] = None
    seed: Optional[int] = None
    residuals: str = 'gaussian'

    @property
    def N(self) -> int:
        return len(self.y)

    @property
    def units(self) -> List[Tuple[float, int]]:
        return [(float(y), int(phi)) for y, phi in zip(self.y, self.phi)]

    @classmethod
    def from_units(cls, units: Sequence[Tuple[float, int]], n: int,
                   n_prime: Optional[int] = None) -> 'SyntheticPopulation':
        """Wrap explicit units; the achieved summary is computed from them"""
        y = np.array([unit[0] for unit in units], dtype=float)
        phi = np.array([unit[1] for unit in units], dtype=int)
        achieved = summarize_microdata(units).to_population_summary(n, n_prime)
        return cls(y=y, phi=phi, achieved=achieved)

    def to_dict(self) -> Dict:
        return {
            'y': self.y.tolist(),
            'phi': self.phi.tolist(),
            'n': self.achieved.n,
            'n_prime': self.achieved.n_prime,
            'target': self.target.to_dict() if self.target else None,
            'seed': self.seed,
            'residuals': self.residuals,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'SyntheticPopulation':
        units = list(zip(data['y'], data['phi']))
        popn = cls.from_units(units, data['n'], data.get('n_prime'))
        target = data.get('target')
        return cls(
            y=popn.y,
            phi=popn.phi,
            achieved=popn.achieved,
            target=PopulationSummary.from_dict(target) if target else None,
            seed=data.get('seed'),
            residuals=data.get('residuals', 'gaussian'),
        )


@dataclass(frozen=True)
class SimulationPlan:
    """
    Replications, seed, design and the estimators to evaluate

    ``labels`` name the estimators in reports; ``solve_weights`` fills in
    solver weights for combined specs given without them.
    """
    replications: int
    seed: int
    n: int
    estimators: Tuple[EstimatorSpec, ...]
    n_prime: Optional[int] = None
    labels: Tuple[str, ...] = ()
    solve_weights: bool = False
    residuals: str = 'gaussian'

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError(f"replications must be at least 1, got {self.replications}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n < 2:
            raise DomainError(f"Sample size n must be at least 2, got {self.n}")
        if self.n_prime is not None and self.n_prime < self.n:
            raise DomainError(f"First-phase size {self.n_prime} is smaller than n={self.n}")
        if not self.estimators:
            raise DomainError("A simulation plan needs at least one estimator")
        if self.residuals not in RESIDUAL_SHAPES:
            raise DomainError(f"Unknown residual shape: {self.residuals}")
        for spec in self.estimators:
            if spec.kind.is_two_phase and self.n_prime is None:
                raise MissingFirstPhaseError(f"{spec.kind.value} needs a two-phase design (n_prime)")
        object.__setattr__(self, 'estimators', tuple(self.estimators))
        object.__setattr__(self, 'labels', _unique_labels(self.estimators, self.labels))

    @property
    def is_two_phase(self) -> bool:
        return self.n_prime is not None

    def check_population(self, pop: PopulationSummary):
        limit = self.n_prime if self.n_prime is not None else self.n
        if limit > pop.N:
            raise DomainError(f"Design size {limit} exceeds population size N={pop.N}")

    def to_dict(self) -> Dict:
        estimators = []
        for label, spec in zip(self.labels, self.estimators):
            data = spec.to_dict()
            data['label'] = label
            estimators.append(data)
        return {
            'replications': self.replications,
            'seed': self.seed,
            'n': self.n,
            'n_prime': self.n_prime,
            'estimators': estimators,
            'weights': 'solve' if self.solve_weights else None,
            'residuals': self.residuals,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'SimulationPlan':
        """
        Parse the JSON plan form

        Args:
            data: {"replications", "seed", "n", "n_prime", "estimators", "weights": "solve" | null}

        Returns:
            SimulationPlan
        """
        missing = [key for key in ('replications', 'seed', 'n', 'estimators') if key not in data]
        if missing:
            raise DomainError(f"Simulation plan is missing: {', '.join(missing)}")
        weights = data.get('weights')
        if weights not in (None, 'solve'):
            raise DomainError(f"Plan weights must be 'solve' or null, got {weights!r}")

        specs = []
        labels = []
        for entry in data['estimators']:
            entry = dict(entry)
            labels.append(entry.pop('label', None))
            specs.append(EstimatorSpec.from_dict(entry))
        n_prime = data.get('n_prime')
        return cls(
            replications=int(data['replications']),
            seed=int(data['seed']),
            n=int(data['n']),
            n_prime=int(n_prime) if n_prime is not None else None,
            estimators=tuple(specs),
            labels=tuple(labels),
            solve_weights=weights == 'solve',
            residuals=data.get('residuals', 'gaussian'),
        )


def _unique_labels(specs: Sequence[EstimatorSpec], labels: Sequence[Optional[str]]) -> Tuple[str, ...]:
    result = []
    for index, spec in enumerate(specs):
        label = labels[index] if index < len(labels) and labels[index] else spec.kind.value
        candidate, suffix = label, 2
        while candidate in result:
            candidate = f"{label}#{suffix}"
            suffix += 1
        result.append(candidate)
    return tuple(result)


@dataclass(frozen=True)
class EmpiricalMoments:
    """Replication means of t and of (t - Y_bar)^2 with their standard errors"""
    mean_estimate: float
    emp_bias: float
    emp_mse: float
    std_error_of_bias: float
    std_error_of_mse: float
    valid: int
    degenerate: int = 0
    unstable: bool = False

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass
class SimulationResult:
    plan: SimulationPlan
    achieved: PopulationSummary
    specs: Dict[str, EstimatorSpec]
    moments: Dict[str, EmpiricalMoments]
    metadata: Dict = field(default_factory=dict)

    def __getitem__(self, label: str) -> EmpiricalMoments:
        return self.moments[label]

    def to_dict(self, comparisons: Optional[List['OracleComparison']] = None) -> Dict:
        estimators = {}
        for label, moments in self.moments.items():
            entry = moments.to_dict()
            entry['spec'] = self.specs[label].to_dict()
            estimators[label] = entry
        data = {
            'plan': self.plan.to_dict(),
            'population': self.achieved.to_dict(),
            'metadata': dict(self.metadata),
            'estimators': estimators,
        }
        if comparisons is not None:
            data['comparison'] = [comparison.to_dict() for comparison in comparisons]
        return data


@dataclass(frozen=True)
class OracleComparison:
    """Empirical moments against the closed forms on the achieved population"""
    label: str
    kind: str
    theory_bias: float
    theory_mse: float
    emp_bias: float
    emp_mse: float
    z_bias: float
    z_mse: float
    relative_mse_error: float
    tolerance: float
    agrees: bool
    unstable: bool = False

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


# Population construction

def _residuals(rng: np.random.Generator, size: int, shape: str) -> np.ndarray:
    if shape == 'gaussian':
        return rng.standard_normal(size)
    if shape == 'student_t':
        return rng.standard_t(STUDENT_T_DF, size)
    raise DomainError(f"Unknown residual shape: {shape}")


def build_population(target: PopulationSummary, seed: int, residuals: str = 'gaussian') -> SyntheticPopulation:
    """
    Build N units whose recomputed summary hits the target

    The first round(NP) units carry phi = 1. y = a + delta*phi + sigma*eps with
    eps centred within each phi group, so S_yphi = delta*S_phi^2 and
    S_y^2 = delta^2*S_phi^2 + sigma^2*S_eps^2 hold exactly. A final affine
    recalibration pins Y_bar and S_y to machine precision.

    Args:
        target: Target summary (its n and n_prime are kept on the achieved summary)
        seed: Seed of the residual generator
        residuals: gaussian or student_t

    Returns:
        SyntheticPopulation
    """
    N = target.N
    count = int(round(N * target.P))
    if count == 0:
        raise InfeasibleTargetError(f"N*P = {N * target.P:.4g} rounds to no attribute units", 1 / N)
    if count == N:
        raise InfeasibleTargetError(f"N*P = {N * target.P:.4g} rounds to N attribute units", (N - 1) / N)

    phi = np.zeros(N, dtype=int)
    phi[:count] = 1
    p_achieved = count / N
    s_phi = math.sqrt(N * p_achieved * (1 - p_achieved) / (N - 1))
    s_y = target.C_y * abs(target.y_mean)
    rho = target.rho_pb

    if s_y == 0 and rho != 0:
        raise InfeasibleTargetError("A constant y has no correlation with phi", 0.0)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    eps = _residuals(rng, N, residuals)
    mask = phi == 1
    eps[mask] -= eps[mask].mean()
    eps[~mask] -= eps[~mask].mean()
    s_eps = math.sqrt(float(np.sum(eps * eps)) / (N - 1))

    residual_variance = s_y * s_y * (1 - rho * rho)
    if residual_variance > 0 and s_eps == 0:
        raise InfeasibleTargetError(
            f"Each phi group of N={N} has at most one unit, so only |rho_pb| = 1 is attainable", 1.0
        )

    delta = rho * s_y / s_phi
    sigma = math.sqrt(residual_variance) / s_eps if residual_variance > 0 else 0.0
    y = target.y_mean - delta * p_achieved + delta * phi + sigma * eps

    if s_y > 0:
        first = summarize_microdata(list(zip(y, phi)))
        y = target.y_mean + (y - first.y_mean) * (s_y / first.S_y)

    achieved = summarize_microdata(list(zip(y, phi))).to_population_summary(target.n, target.n_prime)
    for name in ('C_y', 'rho_pb'):
        gap = abs(getattr(achieved, name) - getattr(target, name))
        if gap > CALIBRATION_TOLERANCE:
            logger.warning(f"Synthetic population misses {name} by {gap:.3e}")

    logger.debug(f"Built synthetic population N={N}, A={count}, residuals={residuals}, seed={seed}")
    return SyntheticPopulation(
        y=y,
        phi=phi,
        achieved=achieved,
        target=target,
        seed=seed,
        residuals=residuals,
    )


# Sampling kernels

def replication_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication,)))


def draw_indices(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit indices of an SRSWOR sample of size n"""
    if not 1 <= n <= N:
        raise DomainError(f"Cannot draw {n} units from {N}")
    return rng.choice(N, size=n, replace=False)


def draw_two_phase_indices(N: int, n_prime: int, n: int,
                           rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """First-phase indices and the second-phase subsample drawn from them"""
    if not 1 <= n <= n_prime <= N:
        raise DomainError(f"Two-phase sizes must satisfy 1 <= n <= n' <= N, got {n}, {n_prime}, {N}")
    first = rng.choice(N, size=n_prime, replace=False)
    second = first[rng.choice(n_prime, size=n, replace=False)]
    return first, second


def _mean(values: np.ndarray) -> float:
    return math.fsum(values) / len(values)


def draw_srswor(popn: SyntheticPopulation, n: int, rng: np.random.Generator) -> SampleQuantities:
    indices = draw_indices(popn.N, n, rng)
    return SampleQuantities(y_bar=_mean(popn.y[indices]), p=_mean(popn.phi[indices]))


def draw_two_phase(popn: SyntheticPopulation, n_prime: int, n: int, rng: np.random.Generator) -> SampleQuantities:
    first, second = draw_two_phase_indices(popn.N, n_prime, n, rng)
    return SampleQuantities(
        y_bar=_mean(popn.y[second]),
        p=_mean(popn.phi[second]),
        p_prime=_mean(popn.phi[first]),
    )


# Replications

def design_population(plan: SimulationPlan, popn: SyntheticPopulation) -> PopulationSummary:
    plan.check_population(popn.achieved)
    return popn.achieved.with_design(plan.n, plan.n_prime)


def resolve_specs(plan: SimulationPlan, popn: SyntheticPopulation) -> Dict[str, EstimatorSpec]:
    """Estimator specs by label, with solver weights filled in where the plan asks for them"""
    pop = design_population(plan, popn)
    specs = {}
    for label, spec in zip(plan.labels, plan.estimators):
        if spec.kind.is_combined and spec.weights is None:
            if not plan.solve_weights:
                raise MissingWeightsError(f"{label} has no weights and the plan does not solve for them")
            spec = spec.with_weights(optimum_weights(pop, spec.constants, spec.kind.is_two_phase))
        specs[label] = spec
    return specs


def _safe_evaluate(spec: EstimatorSpec, pop: PopulationSummary, sample: SampleQuantities) -> Optional[float]:
    try:
        value = evaluate(spec, pop, sample)
    except (MissingFirstPhaseError, MissingWeightsError):
        raise
    except (ZeroDenominatorError, DomainError, OverflowError):
        return None
    return value if math.isfinite(value) else None


def simulate_chunk(plan: SimulationPlan, popn: SyntheticPopulation, start: int, stop: int,
                   specs: Optional[Dict[str, EstimatorSpec]] = None) -> Dict[str, List[Optional[float]]]:
    """
    Evaluate replications [start, stop)

    Args:
        plan: Simulation plan
        popn: Synthetic population
        start: First replication index
        stop: One past the last replication index
        specs: Resolved specs; resolved from the plan when omitted

    Returns:
        Estimates per label in replication order, None for degenerate draws
    """
    specs = specs or resolve_specs(plan, popn)
    pop = design_population(plan, popn)
    values = {label: [] for label in specs}
    for replication in range(start, stop):
        rng = replication_rng(plan.seed, replication)
        if plan.is_two_phase:
            sample = draw_two_phase(popn, plan.n_prime, plan.n, rng)
        else:
            sample = draw_srswor(popn, plan.n, rng)
        for label, spec in specs.items():
            values[label].append(_safe_evaluate(spec, pop, sample))
    return values


def chunk_bounds(replications: int, chunk_size: int) -> List[Tuple[int, int]]:
    if chunk_size < 1:
        raise DomainError(f"Chunk size must be positive, got {chunk_size}")
    return [(start, min(start + chunk_size, replications)) for start in range(0, replications, chunk_size)]


class ChunkRunner(ABC):
    """Executes replication chunks and returns their results in chunk order"""

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def run_chunks(self, plan: SimulationPlan, popn: SyntheticPopulation,
                   bounds: List[Tuple[int, int]]) -> List[Dict[str, List[Optional[float]]]]:
        pass


class LocalChunkRunner(ChunkRunner):

    @property
    def name(self) -> str:
        return 'local'

    def run_chunks(self, plan, popn, bounds):
        specs = resolve_specs(plan, popn)
        results = []
        for start, stop in bounds:
            logger.debug(f"Running replications [{start}, {stop}) in process")
            results.append(simulate_chunk(plan, popn, start, stop, specs))
        return results


class CeleryChunkRunner(ChunkRunner):
    """Dispatches every chunk as a Celery task and collects them in order"""

    def __init__(self, timeout: Optional[int] = None):
        self.timeout = timeout or _setting('RESULT_TIMEOUT', 3600)

    @property
    def name(self) -> str:
        return 'celery'

    def run_chunks(self, plan, popn, bounds):
        from backend.apps.estimation.tasks import simulate_chunk_task

        plan_data = plan.to_dict()
        population_data = popn.to_dict()
        pending = []
        for start, stop in bounds:
            logger.debug(f"Dispatching replications [{start}, {stop}) to Celery")
            pending.append(simulate_chunk_task.delay(plan_data, population_data, start, stop))
        return [result.get(timeout=self.timeout) for result in pending]


_RUNNERS = {
    'local': LocalChunkRunner,
    'celery': CeleryChunkRunner,
}


def get_runner(name: Optional[str] = None) -> ChunkRunner:
    name = (name or _setting('SIM_RUNNER', 'local')).lower()
    runner_class = _RUNNERS.get(name)
    if runner_class is None:
        raise DomainError(f"Unknown chunk runner: {name} (expected one of {', '.join(_RUNNERS)})")
    return runner_class()


def empirical_moments(values: Sequence[Optional[float]], y_mean: float) -> EmpiricalMoments:
    """
    Reduce replication estimates, excluding and counting degenerate draws

    Args:
        values: Estimates in replication order, None where the draw was degenerate
        y_mean: Population mean of the achieved population

    Returns:
        EmpiricalMoments
    """
    total = len(values)
    estimates = np.array([value for value in values if value is not None], dtype=float)
    valid = len(estimates)
    degenerate = total - valid
    unstable = total > 0 and degenerate / total > UNSTABLE_FRACTION

    if valid == 0:
        return EmpiricalMoments(
            mean_estimate=math.nan,
            emp_bias=math.nan,
            emp_mse=math.nan,
            std_error_of_bias=math.inf,
            std_error_of_mse=math.inf,
            valid=0,
            degenerate=degenerate,
            unstable=True,
        )

    errors = estimates - y_mean
    squared = errors * errors
    if valid > 1:
        se_bias = float(np.std(errors, ddof=1)) / math.sqrt(valid)
        se_mse = float(np.std(squared, ddof=1)) / math.sqrt(valid)
    else:
        se_bias = se_mse = math.inf
    return EmpiricalMoments(
        mean_estimate=float(np.mean(estimates)),
        emp_bias=float(np.mean(errors)),
        emp_mse=float(np.mean(squared)),
        std_error_of_bias=se_bias,
        std_error_of_mse=se_mse,
        valid=valid,
        degenerate=degenerate,
        unstable=unstable,
    )


def run(plan: SimulationPlan, popn: SyntheticPopulation, runner: Optional[ChunkRunner] = None,
        chunk_size: Optional[int] = None) -> SimulationResult:
    """
    Run every replication of a plan and reduce to empirical moments

    Args:
        plan: Simulation plan
        popn: Synthetic population
        runner: Chunk runner; the configured SIM_RUNNER when omitted
        chunk_size: Replications per chunk; the configured SIM_CHUNK_SIZE when omitted

    Returns:
        SimulationResult keyed by estimator label
    """
    runner = runner or get_runner()
    chunk_size = int(chunk_size or _setting('SIM_CHUNK_SIZE', DEFAULT_CHUNK_SIZE))
    specs = resolve_specs(plan, popn)
    bounds = chunk_bounds(plan.replications, chunk_size)
    logger.info(
        f"Simulating {plan.replications} replications (seed {plan.seed}) of "
        f"{len(specs)} estimators in {len(bounds)} chunks via {runner.name}"
    )

    chunks = runner.run_chunks(plan, popn, bounds)
    moments = {}
    for label in specs:
        values = [value for chunk in chunks for value in chunk[label]]
        moments[label] = empirical_moments(values, popn.achieved.y_mean)
        if moments[label].unstable:
            logger.warning(
                f"{label}: {moments[label].degenerate} of {plan.replications} draws degenerate, marked UNSTABLE"
            )

    logger.info(f"Simulation with seed {plan.seed} finished")
    return SimulationResult(
        plan=plan,
        achieved=popn.achieved,
        specs=specs,
        moments=moments,
        metadata={
            'rng': RNG_ALGORITHM,
            'seed_derivation': SEED_DERIVATION,
            'numpy': np.__version__,
            'runner': runner.name,
            'chunk_size': chunk_size,
            'chunks': len(bounds),
            'residuals': popn.residuals,
            'population_seed': popn.seed,
        },
    )


def _z_score(difference: float, std_error: float) -> float:
    if std_error > 0:
        return difference / std_error
    return 0.0 if difference == 0 else math.inf


def compare_with_theory(result: SimulationResult, plan: SimulationPlan,
                        popn: SyntheticPopulation) -> List[OracleComparison]:
    """
    Closed-form moments on the achieved population next to the empirical ones

    Agreement holds when the relative MSE error is within
    max(5%, 3 relative standard errors).

    Args:
        result: Output of run
        plan: The plan that produced it
        popn: The population it ran on

    Returns:
        One OracleComparison per estimator
    """
    pop = design_population(plan, popn)
    comparisons = []
    for label, moments in result.moments.items():
        spec = result.specs[label]
        theory = report(spec, pop)

        z_bias = _z_score(moments.emp_bias - theory.bias, moments.std_error_of_bias)
        z_mse = _z_score(moments.emp_mse - theory.mse, moments.std_error_of_mse)
        if theory.mse > 0:
            relative_error = abs(moments.emp_mse - theory.mse) / theory.mse
            tolerance = max(0.05, 3 * moments.std_error_of_mse / theory.mse)
        else:
            relative_error = 0.0 if moments.emp_mse == 0 else math.inf
            tolerance = 0.05

        comparisons.append(OracleComparison(
            label=label,
            kind=spec.kind.value,
            theory_bias=theory.bias,
            theory_mse=theory.mse,
            emp_bias=moments.emp_bias,
            emp_mse=moments.emp_mse,
            z_bias=z_bias,
            z_mse=z_mse,
            relative_mse_error=relative_error,
            tolerance=tolerance,
            agrees=relative_error <= tolerance and not moments.unstable,
            unstable=moments.unstable,
        ))
    return comparisons
