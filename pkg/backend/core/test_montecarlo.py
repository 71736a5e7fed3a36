import itertools
import math
from collections import Counter

import numpy as np
import pytest

from backend.core.errors import DomainError, InfeasibleTargetError, MissingFirstPhaseError, MissingWeightsError
from backend.core.estimators import DesignConstants, EstimatorKind, EstimatorSpec
from backend.core.families import generate_members
from backend.core.moments import report
from backend.core.montecarlo import (
    CeleryChunkRunner,
    LocalChunkRunner,
    SimulationPlan,
    SyntheticPopulation,
    build_population,
    chunk_bounds,
    compare_with_theory,
    draw_indices,
    draw_srswor,
    draw_two_phase,
    draw_two_phase_indices,
    empirical_moments,
    get_runner,
    replication_rng,
    resolve_specs,
    run,
)
from backend.core.population import PopulationSummary, summarize_microdata

FIVE_UNITS = [(2.0, 1), (3.5, 0), (1.0, 0), (6.0, 1), (4.5, 0)]


def _binary_c_p(N, P):
    return math.sqrt(N * P * (1 - P) / (N - 1)) / P


@pytest.fixture
def oracle_target():
    return PopulationSummary(N=500, n=100, n_prime=250, y_mean=50.0, P=0.5, C_y=0.3,
                             C_p=_binary_c_p(500, 0.5), rho_pb=0.6)


@pytest.fixture
def small_population():
    target = PopulationSummary(N=60, n=8, y_mean=20.0, P=0.3, C_y=0.4, C_p=_binary_c_p(60, 0.3), rho_pb=0.5)
    return build_population(target, seed=7)


def _plan(**kwargs):
    defaults = {
        'replications': 300,
        'seed': 20240501,
        'n': 8,
        'estimators': (
            EstimatorSpec(kind=EstimatorKind.MEAN),
            EstimatorSpec(kind=EstimatorKind.S1),
            EstimatorSpec(kind=EstimatorKind.P_COMBINED),
        ),
        'solve_weights': True,
    }
    defaults.update(kwargs)
    return SimulationPlan(**defaults)


class TestBuildPopulation:

    def test_no_correlation(self):
        target = PopulationSummary(N=200, n=20, y_mean=10.0, P=0.4, C_y=0.5, C_p=_binary_c_p(200, 0.4), rho_pb=0.0)

        popn = build_population(target, seed=1)

        assert abs(popn.achieved.rho_pb) < 1e-6

    def test_population_one_profile(self, pop1_profile):
        popn = build_population(pop1_profile, seed=2024)
        summary = summarize_microdata(popn.units)

        assert popn.N == 89
        assert int(popn.phi.sum()) == 11
        assert abs(summary.P - pop1_profile.P) <= 0.5 / 89
        assert summary.y_mean == pytest.approx(3.36, abs=1e-9)
        assert summary.C_y == pytest.approx(0.604, abs=1e-6)
        assert summary.rho_pb == pytest.approx(0.766, abs=1e-6)
        assert popn.achieved.n == 20

    def test_perfect_correlation_boundary(self):
        target = PopulationSummary(N=4, n=2, y_mean=10.0, P=0.5, C_y=0.2, C_p=_binary_c_p(4, 0.5), rho_pb=1.0)

        popn = build_population(target, seed=3)

        assert popn.phi.tolist() == [1, 1, 0, 0]
        assert popn.y[0] == popn.y[1]
        assert popn.y[2] == popn.y[3]
        assert popn.y[0] > popn.y[2]
        assert popn.achieved.rho_pb == pytest.approx(1.0, abs=1e-9)

    def test_student_t_residuals(self, pop1_profile):
        popn = build_population(pop1_profile, seed=5, residuals='student_t')

        assert popn.achieved.rho_pb == pytest.approx(0.766, abs=1e-6)
        assert popn.residuals == 'student_t'

    def test_deterministic(self, pop1_profile):
        first = build_population(pop1_profile, seed=11)
        second = build_population(pop1_profile, seed=11)
        other = build_population(pop1_profile, seed=12)

        assert np.array_equal(first.y, second.y)
        assert not np.array_equal(first.y, other.y)

    def test_attribute_count_rounds_to_zero(self):
        target = PopulationSummary(N=100, n=10, y_mean=5.0, P=0.004, C_y=0.3, C_p=15.0, rho_pb=0.2)

        with pytest.raises(InfeasibleTargetError) as excinfo:
            build_population(target, seed=1)
        assert excinfo.value.bound == pytest.approx(0.01)

    def test_constant_y_cannot_correlate(self):
        target = PopulationSummary(N=50, n=10, y_mean=5.0, P=0.4, C_y=0.0, C_p=1.2, rho_pb=0.3)

        with pytest.raises(InfeasibleTargetError) as excinfo:
            build_population(target, seed=1)
        assert excinfo.value.bound == 0.0

    def test_singleton_groups_only_reach_full_correlation(self):
        target = PopulationSummary(N=2, n=2, y_mean=5.0, P=0.5, C_y=0.3, C_p=1.4, rho_pb=0.5)

        with pytest.raises(InfeasibleTargetError) as excinfo:
            build_population(target, seed=1)
        assert excinfo.value.bound == 1.0


class TestSamplingKernels:

    def test_census_draw(self, small_population):
        sample = draw_srswor(small_population, small_population.N, replication_rng(1, 0))

        assert sample.y_bar == small_population.achieved.y_mean
        assert sample.p == small_population.achieved.P

    def test_single_unit_draw(self, small_population):
        sample = draw_srswor(small_population, 1, replication_rng(1, 3))

        assert sample.y_bar in small_population.y.tolist()
        assert sample.p in (0.0, 1.0)

    def test_oversized_draw(self):
        with pytest.raises(DomainError):
            draw_indices(5, 6, replication_rng(1, 0))

    def test_subsets_are_equiprobable(self):
        rng = np.random.default_rng(20240601)
        draws = 20000
        counts = Counter(tuple(sorted(draw_indices(5, 2, rng).tolist())) for _ in range(draws))
        sigma = math.sqrt(0.1 * 0.9 / draws)

        assert set(counts) == set(itertools.combinations(range(5), 2))
        for subset in counts:
            assert abs(counts[subset] / draws - 0.1) < 4 * sigma

    def test_two_phase_inclusion_probability(self):
        rng = np.random.default_rng(20240602)
        draws = 20000
        counts = Counter()
        for _ in range(draws):
            first, second = draw_two_phase_indices(5, 3, 2, rng)
            assert set(second) <= set(first)
            counts.update(second.tolist())
        sigma = math.sqrt(0.4 * 0.6 / draws)

        for unit in range(5):
            assert abs(counts[unit] / draws - 0.4) < 4 * sigma

    def test_first_phase_census(self, small_population):
        sample = draw_two_phase(small_population, small_population.N, 5, replication_rng(2, 0))

        assert sample.p_prime == small_population.achieved.P

    def test_no_subsampling(self, small_population):
        sample = draw_two_phase(small_population, 12, 12, replication_rng(2, 1))

        assert sample.p == sample.p_prime

    def test_replication_streams_are_reproducible(self):
        assert np.array_equal(
            draw_indices(100, 10, replication_rng(9, 4)),
            draw_indices(100, 10, replication_rng(9, 4)),
        )


class TestSimulationPlan:

    def test_rejects_zero_replications(self):
        with pytest.raises(DomainError):
            _plan(replications=0)

    def test_rejects_negative_seed(self):
        with pytest.raises(DomainError):
            _plan(seed=-1)

    def test_two_phase_kind_needs_first_phase(self):
        with pytest.raises(MissingFirstPhaseError):
            _plan(estimators=(EstimatorSpec(kind=EstimatorKind.D1),))

    def test_labels_are_unique(self):
        plan = _plan(estimators=(EstimatorSpec(kind=EstimatorKind.MEAN),) * 3)

        assert plan.labels == ('Mean', 'Mean#2', 'Mean#3')

    def test_json_form(self):
        plan = SimulationPlan.from_dict({
            'replications': 10,
            'seed': 3,
            'n': 20,
            'n_prime': 45,
            'estimators': [{'kind': 'D1', 'label': 'ratio'}, {'kind': 'PdCombined'}],
            'weights': 'solve',
        })

        assert plan.labels == ('ratio', 'PdCombined')
        assert plan.is_two_phase
        assert SimulationPlan.from_dict(plan.to_dict()) == plan

    def test_weights_mode(self):
        with pytest.raises(DomainError, match='solve'):
            SimulationPlan.from_dict({'replications': 1, 'seed': 1, 'n': 2,
                                      'estimators': [{'kind': 'Mean'}], 'weights': 'fixed'})

    def test_missing_keys(self):
        with pytest.raises(DomainError, match='seed'):
            SimulationPlan.from_dict({'replications': 1, 'n': 2, 'estimators': []})

    def test_design_must_fit_population(self, small_population):
        with pytest.raises(DomainError):
            _plan(n=80).check_population(small_population.achieved)

    def test_combined_without_weights(self, small_population):
        plan = _plan(solve_weights=False)

        with pytest.raises(MissingWeightsError):
            resolve_specs(plan, small_population)


class TestEmpiricalMoments:

    def test_degenerate_draws_are_excluded_and_counted(self):
        moments = empirical_moments([None, 1.0, 3.0], 2.0)

        assert moments.valid == 2
        assert moments.degenerate == 1
        assert moments.unstable
        assert moments.emp_bias == 0.0
        assert moments.emp_mse == 1.0

    def test_all_degenerate(self):
        moments = empirical_moments([None, None], 2.0)

        assert moments.valid == 0
        assert math.isnan(moments.emp_mse)
        assert moments.unstable

    def test_mse_bounds_squared_bias(self):
        moments = empirical_moments([1.0, 2.5, 2.0, 4.0], 2.0)

        assert moments.emp_mse >= moments.emp_bias ** 2


class TestRun:

    def test_chunking_does_not_change_results(self, small_population):
        plan = _plan()

        coarse = run(plan, small_population, runner=LocalChunkRunner(), chunk_size=1000)
        fine = run(plan, small_population, runner=LocalChunkRunner(), chunk_size=7)

        assert coarse.moments == fine.moments
        assert fine.metadata['chunks'] == 43
        assert coarse.metadata['rng'] == 'PCG64'

    def test_celery_runner_matches_local(self, small_population, celery_eager):
        plan = _plan(replications=120)

        local = run(plan, small_population, runner=LocalChunkRunner(), chunk_size=50)
        distributed = run(plan, small_population, runner=CeleryChunkRunner(timeout=30), chunk_size=50)

        assert distributed.moments == local.moments
        assert distributed.metadata['runner'] == 'celery'

    def test_seed_changes_results(self, small_population):
        first = run(_plan(), small_population, runner=LocalChunkRunner())
        second = run(_plan(seed=20240502), small_population, runner=LocalChunkRunner())

        assert first['Mean'].emp_mse != second['Mean'].emp_mse

    def test_unstable_estimator_is_flagged(self):
        units = [(1.0, 1), (2.0, 0), (3.0, 0), (4.0, 0), (5.0, 0)]
        popn = SyntheticPopulation.from_units(units, n=2)
        plan = _plan(replications=200, n=2, estimators=(EstimatorSpec(kind=EstimatorKind.NG_RATIO),))

        result = run(plan, popn, runner=LocalChunkRunner())

        assert result['NGRatio'].degenerate > 0
        assert result['NGRatio'].unstable
        assert compare_with_theory(result, plan, popn)[0].agrees is False

    def test_mean_is_unbiased(self, small_population):
        plan = _plan(replications=4000, estimators=(EstimatorSpec(kind=EstimatorKind.MEAN),))

        result = run(plan, small_population, runner=LocalChunkRunner())
        comparison = compare_with_theory(result, plan, small_population)[0]

        assert abs(result['Mean'].emp_bias) < 4 * result['Mean'].std_error_of_bias
        assert abs(comparison.z_mse) < 4
        assert comparison.theory_bias == 0.0

    def test_report_form(self, small_population):
        plan = _plan(replications=20)
        result = run(plan, small_population, runner=LocalChunkRunner())

        data = result.to_dict(compare_with_theory(result, plan, small_population))

        assert set(data) == {'plan', 'population', 'metadata', 'estimators', 'comparison'}
        assert data['estimators']['PCombined']['spec']['weights']
        assert data['metadata']['seed_derivation'].startswith('SeedSequence')


def test_chunk_bounds():
    assert chunk_bounds(10, 4) == [(0, 4), (4, 8), (8, 10)]


def test_unknown_runner():
    with pytest.raises(DomainError):
        get_runner('threads')


def test_population_from_units():
    popn = SyntheticPopulation.from_units(FIVE_UNITS, n=2)

    assert popn.N == 5
    assert popn.achieved.P == pytest.approx(0.4)
    assert popn.units == FIVE_UNITS


@pytest.mark.slow
def test_combined_estimator_is_almost_unbiased(pop1_profile):
    popn = build_population(pop1_profile, seed=2024)
    plan = SimulationPlan(
        replications=100000,
        seed=987654321,
        n=20,
        estimators=(
            EstimatorSpec(kind=EstimatorKind.S1),
            EstimatorSpec(kind=EstimatorKind.S2),
            EstimatorSpec(kind=EstimatorKind.P_COMBINED),
        ),
        solve_weights=True,
    )

    result = run(plan, popn, runner=LocalChunkRunner())

    theory_s1 = report(EstimatorSpec(kind=EstimatorKind.S1), popn.achieved.with_design(20)).bias
    bias_p = abs(result['PCombined'].emp_bias)
    assert bias_p <= max(3 * result['PCombined'].std_error_of_bias, 0.1 * abs(theory_s1))
    assert bias_p < min(abs(result['S1'].emp_bias), abs(result['S2'].emp_bias))


@pytest.mark.slow
def test_closed_forms_agree_with_simulation(oracle_target):
    popn = build_population(oracle_target, seed=31)
    designs = [
        DesignConstants(),
        DesignConstants(alpha=-1.0, beta=0.0, lam=1.0, m=-1.0, q=0.0, gamma=1.0),
        DesignConstants(K3=0.5, K5=0.5, alpha=1.0, beta=1.0, lam=-1.0, m=1.0, q=1.0, gamma=-1.0),
    ]
    single = SimulationPlan(
        replications=20000,
        seed=4242,
        n=100,
        estimators=(EstimatorSpec(kind=EstimatorKind.MEAN),) + tuple(
            EstimatorSpec(kind=kind, constants=dc)
            for dc in designs
            for kind in (EstimatorKind.S1, EstimatorKind.S2, EstimatorKind.P_COMBINED)
        ),
        solve_weights=True,
    )
    two_phase = SimulationPlan(
        replications=20000,
        seed=4343,
        n=100,
        n_prime=250,
        estimators=tuple(
            EstimatorSpec(kind=kind, constants=dc)
            for dc in designs
            for kind in (EstimatorKind.D1, EstimatorKind.D2, EstimatorKind.PD_COMBINED)
        ),
        solve_weights=True,
    )

    for plan in (single, two_phase):
        result = run(plan, popn, runner=LocalChunkRunner())
        for comparison in compare_with_theory(result, plan, popn):
            assert comparison.agrees, comparison
            if comparison.kind == 'Mean':
                assert abs(comparison.z_mse) < 3


@pytest.mark.slow
def test_exponential_appendix_members_agree_with_simulation(oracle_target):
    popn = build_population(oracle_target, seed=37)
    members = generate_members('C', popn.achieved.with_design(100), include_paper=False)
    plan = SimulationPlan(
        replications=20000,
        seed=4444,
        n=100,
        estimators=tuple(member.spec for member in members),
        labels=tuple(member.name for member in members),
    )

    result = run(plan, popn, runner=LocalChunkRunner())

    disagreements = [c.label for c in compare_with_theory(result, plan, popn) if not c.agrees]
    assert disagreements == []
