"""
Django management command to reproduce a published weight or PRE table
"""
from backend.apps.estimation.management.base import EstimationCommand
from backend.core.datasets import TABLE_FILES
from backend.core.families import DISCREPANT
from backend.core.reporting import Report
from backend.core.tables import reproduce_table


class Command(EstimationCommand):
    help = 'Recompute a published table and flag every row against the printed value'
    strict_option = True

    def add_command_arguments(self, parser):
        parser.add_argument('--table', choices=list(TABLE_FILES), required=True, help='Table id')
        parser.add_argument('--pop', type=int, choices=[1, 2], required=True, help='Population id')
        parser.add_argument(
            '--paper-literal',
            action='store_true',
            help='Use the printed two-phase forms',
        )

    def build_report(self, **options) -> Report:
        reproduction = reproduce_table(options['table'], options['pop'], options['paper_literal'])
        self.discrepancies = sum(row.flag == DISCREPANT for row in reproduction.rows)

        rows = [
            {
                'estimator': row.label,
                'paper': row.paper,
                'computed': row.computed,
                'delta': row.delta,
                'flag': row.flag,
            }
            for row in reproduction.rows
        ]
        return Report(
            title=f"Table {reproduction.table_id}, population {reproduction.pop_id}: "
                  f"{reproduction.title} ({reproduction.verdict})",
            payload=reproduction.to_dict(),
            columns=['estimator', 'paper', 'computed', 'delta', 'flag'],
            rows=rows,
        )
