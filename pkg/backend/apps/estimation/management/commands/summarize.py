"""
Django management command to summarize y,phi microdata
"""
from dataclasses import asdict

from backend.apps.estimation.management.base import EstimationCommand, key_value_rows
from backend.core.errors import DomainError
from backend.core.population import (
    derive_constants,
    dump_summary,
    load_microdata_csv,
    summarize_microdata,
)
from backend.core.reporting import Report


class Command(EstimationCommand):
    help = 'Compute S_y^2, S_phi^2, S_yphi and rho_pb from a y,phi CSV file'

    def add_command_arguments(self, parser):
        parser.add_argument('--csv', type=str, required=True, help='CSV file with header y,phi')
        parser.add_argument(
            '--mode',
            choices=['population', 'sample'],
            default='population',
            help='Whether the records are the whole population or a sample',
        )
        parser.add_argument('--n', type=int, default=None, help='Sample size for the derived summary')
        parser.add_argument('--n-prime', type=int, default=None, help='First-phase size for the derived summary')
        parser.add_argument(
            '--save',
            type=str,
            default=None,
            help='Write the derived population summary to this JSON file (needs --n)',
        )

    def build_report(self, **options) -> Report:
        frame = load_microdata_csv(options['csv'])
        summary = summarize_microdata(frame, mode=options['mode'])

        payload = asdict(summary)
        payload.update({
            'S_y': summary.S_y,
            'S_phi': summary.S_phi,
            'C_y': summary.C_y,
            'C_p': summary.C_p,
        })
        if options.get('n') is not None:
            pop = summary.to_population_summary(options['n'], options.get('n_prime'))
            payload['population'] = pop.to_dict()
            payload['derived'] = {
                key: value for key, value in asdict(derive_constants(pop)).items() if value is not None
            }
            if options.get('save'):
                dump_summary(pop, options['save'], {'source': options['csv']})
        elif options.get('save'):
            raise DomainError('--save needs --n to build a population summary')

        return Report(
            title=f"Microdata summary of {options['csv']}",
            payload=payload,
            columns=['quantity', 'value'],
            rows=key_value_rows(payload),
        )
