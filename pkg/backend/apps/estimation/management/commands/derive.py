"""
Django management command to compute the derived constants of a population
"""
from dataclasses import asdict

from backend.apps.estimation.management.base import EstimationCommand, key_value_rows
from backend.core.population import check_parameterization, derive_constants
from backend.core.reporting import Report


class Command(EstimationCommand):
    help = 'Show f1, f2, f3, K_p, S_phi and Var(y_bar) for a population summary'

    def add_command_arguments(self, parser):
        self.add_population_arguments(parser)

    def build_report(self, **options) -> Report:
        pop = self.load_population(options)
        derived = derive_constants(pop)
        payload = {
            'population': pop.to_dict(),
            'derived': {key: value for key, value in asdict(derived).items() if value is not None},
            'parameterization_gap': check_parameterization(pop),
        }
        return Report(
            title='Derived constants',
            payload=payload,
            columns=['quantity', 'value'],
            rows=key_value_rows(payload),
        )
