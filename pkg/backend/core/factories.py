"""
factory-boy factories for random valid population summaries
"""
import math

import factory
from factory import fuzzy

from backend.core.population import PopulationSummary


def _binary_c_p(N: int, P: float) -> float:
    return math.sqrt(N * P * (1 - P) / (N - 1)) / P


class PopulationSummaryFactory(factory.Factory):
    """Single-phase summaries whose C_p is the binary-attribute value"""

    class Meta:
        model = PopulationSummary

    N = fuzzy.FuzzyInteger(40, 500)
    n = factory.LazyAttribute(lambda o: factory.random.randgen.randint(5, o.N // 2))
    y_mean = fuzzy.FuzzyFloat(1.0, 100.0)
    P = fuzzy.FuzzyFloat(0.05, 0.95)
    C_y = fuzzy.FuzzyFloat(0.05, 1.5)
    C_p = factory.LazyAttribute(lambda o: _binary_c_p(o.N, o.P))
    rho_pb = fuzzy.FuzzyFloat(-0.95, 0.95)


class TwoPhasePopulationSummaryFactory(PopulationSummaryFactory):

    n_prime = factory.LazyAttribute(lambda o: factory.random.randgen.randint(o.n + 1, o.N - 1))
