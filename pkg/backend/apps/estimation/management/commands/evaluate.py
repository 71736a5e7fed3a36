"""
Django management command to evaluate an estimator on sample quantities
"""
from backend.apps.estimation.management.base import EstimationCommand, key_value_rows, read_json
from backend.core.errors import DataFileError
from backend.core.estimators import SampleQuantities, evaluate
from backend.core.moments import report
from backend.core.reporting import Report
from backend.core.weights import parse_spec


class Command(EstimationCommand):
    help = 'Evaluate an estimator spec on observed y_bar and p and report its closed-form moments'

    def add_command_arguments(self, parser):
        parser.add_argument('--spec', type=str, required=True, help='Estimator spec JSON file')
        self.add_population_arguments(parser)
        parser.add_argument('--y-bar', type=float, required=True, help='Sample mean of y')
        parser.add_argument('--p', type=float, required=True, help='Sample proportion of the attribute')
        parser.add_argument('--p-prime', type=float, default=None, help='First-phase proportion')
        parser.add_argument(
            '--paper-literal',
            action='store_true',
            help='Use the printed two-phase bias forms',
        )

    def build_report(self, **options) -> Report:
        data = read_json(options['spec'])
        if not isinstance(data, dict):
            raise DataFileError(f"{options['spec']} must hold a single spec object")
        pop = self.load_population(options)
        spec = parse_spec(data, pop, options['paper_literal'])
        sample = SampleQuantities(y_bar=options['y_bar'], p=options['p'], p_prime=options.get('p_prime'))

        payload = {
            'spec': spec.to_dict(),
            'estimate': evaluate(spec, pop, sample),
            'moments': report(spec, pop, options['paper_literal']).to_dict(),
        }
        return Report(
            title=f"{spec.kind.value} estimate",
            payload=payload,
            columns=['quantity', 'value'],
            rows=key_value_rows(payload),
        )
