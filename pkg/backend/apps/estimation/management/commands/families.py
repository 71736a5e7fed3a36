"""
Django management command to generate the named members of an appendix table
"""
from backend.apps.estimation.management.base import EstimationCommand
from backend.core.datasets import builtin_population, load_table
from backend.core.families import DISCREPANT, generate_members, reconcile
from backend.core.reporting import Report


class Command(EstimationCommand):
    help = 'Generate appendix family members with their formulas, constants and PREs'
    strict_option = True

    def add_command_arguments(self, parser):
        parser.add_argument('--appendix', choices=['A', 'B', 'C'], required=True, help='Appendix id')
        parser.add_argument('--pop', type=int, choices=[1, 2], required=True, help='Population id')

    def build_report(self, **options) -> Report:
        table = load_table(options['appendix'])
        pop = builtin_population(options['pop'])
        include_paper = options['pop'] == table.get('paper_population', 1)
        members = generate_members(options['appendix'], pop, include_paper)
        reconciliation = reconcile(members, float(table.get('relative_tolerance', 0.01)))
        flags = {entry.name: entry.flag for entry in reconciliation.entries}
        self.discrepancies = sum(flag == DISCREPANT for flag in flags.values())

        payload = {
            'appendix': options['appendix'],
            'population': options['pop'],
            'title': table.get('title', ''),
            'quota': table.get('quota'),
            'members': [
                {
                    'name': member.name,
                    'formula': member.description,
                    'symbols': member.symbols,
                    'spec': member.spec.to_dict(),
                    'pre_computed': member.pre_computed,
                    'pre_paper': member.pre_paper,
                    'flag': flags[member.name],
                    'note': member.note,
                }
                for member in members
            ],
            'reconciliation': reconciliation.to_dict(),
        }
        rows = [
            {
                'estimator': member.name,
                'formula': member.description,
                'paper': member.pre_paper,
                'computed': member.pre_computed,
                'flag': flags[member.name],
            }
            for member in members
        ]
        return Report(
            title=f"Appendix {options['appendix']}, population {options['pop']}: {table.get('title', '')}",
            payload=payload,
            columns=['estimator', 'formula', 'paper', 'computed', 'flag'],
            rows=rows,
        )
