"""
Shared plumbing for the estimation management commands
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from django.core.management.base import BaseCommand, CommandError

from backend.core.datasets import builtin_population
from backend.core.errors import DataFileError, EstimationError
from backend.core.population import PopulationSummary, load_summary_json
from backend.core.reporting import Report, get_renderer, list_renderers

logger = logging.getLogger(__name__)

DOMAIN_ERROR_CODE = 3
IO_ERROR_CODE = 4
DISCREPANCY_CODE = 5


def read_json(path: str) -> Any:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as e:
        raise DataFileError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataFileError(f"{path} is not valid JSON: {e}") from e


def key_value_rows(payload: Dict, prefix: str = '') -> List[Dict]:
    """Flatten nested scalars into quantity/value rows"""
    rows = []
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(key_value_rows(value, f"{name}."))
        else:
            rows.append({'quantity': name, 'value': value})
    return rows


class EstimationCommand(BaseCommand):
    """
    Base for commands that emit a report

    Subclasses implement build_report and may set ``discrepancies``; with
    --strict a nonzero count turns into exit status 5 after the report is written.
    """
    strict_option = False

    def add_arguments(self, parser):
        parser.add_argument(
            '--format',
            choices=list_renderers(),
            default=None,
            help='Output format (default: PROPEST_OUTPUT_FORMAT or json)',
        )
        parser.add_argument(
            '--decimals',
            type=int,
            default=None,
            help='Display rounding for csv and markdown output',
        )
        parser.add_argument(
            '--output',
            type=str,
            default=None,
            help='Write the report to this file instead of stdout',
        )
        if self.strict_option:
            parser.add_argument(
                '--strict',
                action='store_true',
                help='Exit with status 5 when any row is DISCREPANT',
            )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def add_population_arguments(self, parser, required: bool = True):
        group = parser.add_mutually_exclusive_group(required=required)
        group.add_argument('--population', type=str, help='Population summary JSON file')
        group.add_argument('--pop-id', type=int, choices=[1, 2], help='Shipped population')
        parser.add_argument(
            '--two-phase',
            action='store_true',
            help='Use the two-phase data statistics of the shipped population',
        )

    def load_population(self, options) -> PopulationSummary:
        if options.get('population'):
            return load_summary_json(options['population'])
        return builtin_population(options['pop_id'], two_phase=options.get('two_phase', False))

    def build_report(self, **options) -> Report:
        raise NotImplementedError

    def handle(self, *args, **options):
        self.discrepancies = 0
        try:
            report = self.build_report(**options)
            renderer = get_renderer(options.get('format'), options.get('decimals'))
            text = renderer.render(report)
            self.write_output(text, options.get('output'))
        except (DataFileError, OSError) as e:
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]}: {e}")
            raise CommandError(str(e), returncode=IO_ERROR_CODE)
        except EstimationError as e:
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]}: {e}")
            raise CommandError(str(e), returncode=DOMAIN_ERROR_CODE)

        if self.discrepancies and options.get('strict'):
            raise CommandError(
                f"{self.discrepancies} discrepant rows",
                returncode=DISCREPANCY_CODE,
            )

    def write_output(self, text: str, output: str = None):
        if output:
            Path(output).write_text(text, encoding='utf-8')
            self.stderr.write(self.style.SUCCESS(f"Report written to {output}"))
        else:
            self.stdout.write(text, ending='')

