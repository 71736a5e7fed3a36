import random

import factory
import numpy as np
import pytest

from backend.core.errors import MissingFirstPhaseError, MissingWeightsError
from backend.core.estimators import DesignConstants, EstimatorKind, EstimatorSpec, shape_v1
from backend.core.factories import PopulationSummaryFactory, TwoPhasePopulationSummaryFactory
from backend.core.moments import (
    NG_PRODUCT_CONSTANTS,
    NG_RATIO_CONSTANTS,
    bias_p,
    e_moment_matrix,
    linear_coefficients,
    linearized_mse,
    mse_1d,
    mse_2d,
    mse_p,
    mse_p_min,
    mse_pd_min,
    mse_s1,
    mse_s2,
    pre,
    report,
    report_s1,
    report_s2,
    var_mean,
)
from backend.core.population import PopulationSummary, derive_constants
from backend.core.weights import WeightVector


def _random_constants(rng: random.Random) -> DesignConstants:
    return DesignConstants(
        K1=rng.uniform(0.5, 2.0),
        K2=1,
        K3=rng.uniform(0.0, 2.0),
        K4=rng.uniform(0.5, 2.0),
        K5=rng.uniform(0.0, 2.0),
        alpha=rng.uniform(-2.0, 2.0),
        beta=rng.uniform(-2.0, 2.0),
        lam=rng.uniform(-2.0, 2.0),
        m=rng.uniform(-2.0, 2.0),
        q=rng.uniform(-2.0, 2.0),
        gamma=rng.uniform(-2.0, 2.0),
    )


class TestVarianceOfMean:

    def test_population_one(self, pop1):
        derived = derive_constants(pop1)

        assert var_mean(pop1) == pytest.approx(derived.f1 * (0.604 * 3.36) ** 2, rel=1e-14)
        assert var_mean(pop1) == pytest.approx(0.1597, abs=1e-4)

    def test_census(self, pop1):
        assert var_mean(pop1.with_design(pop1.N)) == 0

    def test_constant_study_variable(self):
        pop = PopulationSummary(N=30, n=5, y_mean=2.0, P=0.3, C_y=0.0, C_p=1.5, rho_pb=0.0)

        assert var_mean(pop) == 0

    def test_pre_of_mean_is_100(self, pop2):
        assert pre(var_mean(pop2), pop2) == pytest.approx(100)

    def test_census_pre(self, pop1):
        assert pre(0.0, pop1.with_design(pop1.N)) == 100.0


class TestSinglePhaseClasses:

    def test_ratio_type_member(self, pop1):
        dc = DesignConstants(K1=1.0, K2=1, K3=pop1.C_p, alpha=1.0)

        assert report_s1(pop1, dc).pre == pytest.approx(134.99, abs=0.01)

    def test_correlation_member(self, pop1):
        dc = DesignConstants(K1=1.0, K2=1, K3=pop1.rho_pb, alpha=1.0)

        assert report_s1(pop1, dc).pre == pytest.approx(207.46, abs=0.01)

    def test_zero_alpha_is_the_mean(self, pop1):
        moments = report_s1(pop1, DesignConstants(alpha=0.0))

        assert moments.bias == 0
        assert moments.mse == pytest.approx(var_mean(pop1), rel=1e-14)
        assert moments.pre == pytest.approx(100)

    def test_zero_beta_and_lambda_is_the_mean(self, pop1):
        assert mse_s2(pop1, DesignConstants(beta=0.0, lam=0.0)) == pytest.approx(var_mean(pop1), rel=1e-14)

    def test_exponential_product_member(self, pop1):
        dc = DesignConstants(K4=1.0, K5=pop1.C_p, beta=1.0, lam=-1.0)

        assert report_s2(pop1, dc).pre == pytest.approx(10.92, abs=0.01)

    def test_ratio_estimator_pre(self, pop1):
        assert report(EstimatorSpec(kind=EstimatorKind.NG_RATIO), pop1).pre == pytest.approx(11.637, abs=1e-3)

    def test_product_estimator_pre(self, pop2):
        assert report(EstimatorSpec(kind=EstimatorKind.NG_PRODUCT), pop2).pre == pytest.approx(1.94, abs=0.05)

    def test_mse_depends_on_alpha_v1_product(self, pop1):
        first = DesignConstants(K1=1.0, K3=1.0, alpha=2.0)
        v1 = shape_v1(pop1, first)
        # V1' = 2 V1 with alpha' = 1
        second = DesignConstants(K1=1.0, K3=pop1.P / (2 * v1) - pop1.P, alpha=1.0)

        assert mse_s1(pop1, first) == pytest.approx(mse_s1(pop1, second), rel=1e-12)

    def test_reference_estimators_are_s1_members(self, pop1):
        assert report(EstimatorSpec(kind=EstimatorKind.NG_RATIO), pop1) == report_s1(pop1, NG_RATIO_CONSTANTS)
        assert report(EstimatorSpec(kind=EstimatorKind.NG_PRODUCT), pop1) == report_s1(pop1, NG_PRODUCT_CONSTANTS)


class TestCombinedEstimator:

    def test_mean_weights(self, pop1):
        w = WeightVector(1.0, 0.0, 0.0)

        assert bias_p(pop1, DesignConstants(), w) == 0
        assert mse_p(pop1, DesignConstants(), w) == pytest.approx(var_mean(pop1), rel=1e-14)

    @pytest.mark.parametrize('pop_id, expected', [(1, 241.99), (2, 117.61)])
    def test_minimum_mse(self, pop_id, expected, request):
        pop = request.getfixturevalue(f"pop{pop_id}")

        assert mse_p_min(pop).pre == pytest.approx(expected, abs=0.01)
        assert mse_p_min(pop).pre == pytest.approx(100 / (1 - pop.rho_pb ** 2), rel=1e-12)

    def test_no_correlation_means_no_gain(self):
        pop = PopulationSummary(N=50, n=10, y_mean=5.0, P=0.3, C_y=0.4, C_p=1.5, rho_pb=0.0)

        assert mse_p_min(pop).pre == pytest.approx(100)

    def test_combined_needs_weights(self, pop1):
        with pytest.raises(MissingWeightsError):
            report(EstimatorSpec(kind=EstimatorKind.P_COMBINED), pop1)

    @pytest.mark.parametrize('seed', range(5))
    def test_minimum_is_a_lower_bound(self, seed):
        factory.random.reseed_random(seed)
        rng = random.Random(seed)
        pop = PopulationSummaryFactory()
        floor = mse_p_min(pop).mse

        for _ in range(20):
            dc = _random_constants(rng)
            assert floor <= mse_s1(pop, dc) * (1 + 1e-12)
            assert floor <= mse_s2(pop, dc) * (1 + 1e-12)


class TestTwoPhaseClasses:

    def test_ratio_estimator(self, pop1_two_phase):
        dc = DesignConstants(K1=1.0, K2=1, K3=0.0, m=1.0)

        moments = report(EstimatorSpec(kind=EstimatorKind.D1, constants=dc), pop1_two_phase)

        assert moments.pre == pytest.approx(11.17, abs=0.01)

    @pytest.mark.parametrize('pop_id, expected', [(1, 112.33), (2, 106.75)])
    def test_minimum_mse(self, pop_id, expected, request):
        pop = request.getfixturevalue(f"pop{pop_id}_two_phase")

        assert mse_pd_min(pop).pre == pytest.approx(expected, abs=0.01)

    def test_zero_m_is_the_mean(self, pop1_two_phase):
        assert mse_1d(pop1_two_phase, DesignConstants(m=0.0)) == pytest.approx(var_mean(pop1_two_phase), rel=1e-14)

    def test_zero_q_and_gamma_is_the_mean(self, pop1_two_phase):
        dc = DesignConstants(q=0.0, gamma=0.0)

        assert mse_2d(pop1_two_phase, dc) == pytest.approx(var_mean(pop1_two_phase), rel=1e-14)

    def test_no_first_phase_information(self, pop1_two_phase):
        pop = pop1_two_phase.with_design(pop1_two_phase.n, pop1_two_phase.n)

        assert mse_pd_min(pop).mse == pytest.approx(var_mean(pop), rel=1e-14)

    def test_first_phase_census_matches_single_phase(self, pop1_two_phase):
        pop = pop1_two_phase.with_design(pop1_two_phase.n, pop1_two_phase.N)

        assert mse_pd_min(pop).mse == pytest.approx(mse_p_min(pop).mse, rel=1e-12)

    @pytest.mark.parametrize('seed', range(10))
    def test_estimating_p_costs_efficiency(self, seed):
        factory.random.reseed_random(seed)
        pop = TwoPhasePopulationSummaryFactory()

        assert mse_pd_min(pop).mse >= mse_p_min(pop).mse

    def test_literal_t2d_mse_drops_cross_term(self, pop1_two_phase):
        dc = DesignConstants(K4=1.0, K5=0.0, q=1.0, gamma=1.0)
        derived = derive_constants(pop1_two_phase)
        slope = 1.0 - 0.5 * 1.0
        cross = 2 * slope * derived.f3 * derived.K_p * pop1_two_phase.C_p ** 2 * pop1_two_phase.y_mean ** 2

        literal = mse_2d(pop1_two_phase, dc, paper_literal=True)

        assert literal - mse_2d(pop1_two_phase, dc) == pytest.approx(cross, rel=1e-10)

    def test_two_phase_moments_need_first_phase(self, pop1):
        with pytest.raises(MissingFirstPhaseError):
            report(EstimatorSpec(kind=EstimatorKind.D1), pop1)


class TestLinearization:

    def test_moment_matrix_is_symmetric(self, pop1_two_phase):
        sigma = e_moment_matrix(pop1_two_phase)

        assert sigma.shape == (3, 3)
        assert np.allclose(sigma, sigma.T)

    @pytest.mark.parametrize('seed', range(8))
    def test_closed_forms_match_linearized_mse(self, seed):
        factory.random.reseed_random(seed)
        rng = random.Random(100 + seed)
        pop = TwoPhasePopulationSummaryFactory()
        dc = _random_constants(rng)
        specs = [
            EstimatorSpec(kind=EstimatorKind.MEAN),
            EstimatorSpec(kind=EstimatorKind.NG_RATIO),
            EstimatorSpec(kind=EstimatorKind.NG_PRODUCT),
            EstimatorSpec(kind=EstimatorKind.S1, constants=dc),
            EstimatorSpec(kind=EstimatorKind.S2, constants=dc),
            EstimatorSpec(kind=EstimatorKind.P_COMBINED, constants=dc, weights=WeightVector(0.3, 0.9, -0.2)),
            EstimatorSpec(kind=EstimatorKind.D1, constants=dc),
            EstimatorSpec(kind=EstimatorKind.D2, constants=dc),
            EstimatorSpec(kind=EstimatorKind.PD_COMBINED, constants=dc,
                          weights=WeightVector(-0.5, 1.1, 0.4, role='h')),
        ]

        for spec in specs:
            linearized = linearized_mse(pop, linear_coefficients(spec, pop))
            assert report(spec, pop).mse == pytest.approx(linearized, rel=1e-10), spec.kind.value

    def test_single_phase_block(self, pop1):
        spec = EstimatorSpec(kind=EstimatorKind.S2, constants=DesignConstants(beta=0.5, lam=2.0))

        coefficients = linear_coefficients(spec, pop1)

        assert coefficients.shape == (2,)
        assert report(spec, pop1).mse == pytest.approx(linearized_mse(pop1, coefficients), rel=1e-10)
