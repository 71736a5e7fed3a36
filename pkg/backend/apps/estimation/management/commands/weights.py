"""
Django management command to solve the optimum weights of the combined estimators
"""
from backend.apps.estimation.management.base import EstimationCommand, read_json
from backend.core.errors import DataFileError
from backend.core.estimators import DesignConstants, EstimatorKind, EstimatorSpec
from backend.core.moments import report, slopes
from backend.core.reporting import Report
from backend.core.weights import build_system_single, build_system_two_phase, solve_weights


class Command(EstimationCommand):
    help = 'Solve the bias-cancelling, MSE-minimizing weights for a population'

    def add_command_arguments(self, parser):
        self.add_population_arguments(parser)
        parser.add_argument(
            '--constants',
            type=str,
            default=None,
            help='JSON file of design constants (all ones when omitted)',
        )
        parser.add_argument(
            '--paper-literal',
            action='store_true',
            help='Use the printed two-phase bias forms in the bias row',
        )

    def build_report(self, **options) -> Report:
        pop = self.load_population(options)
        constants = {}
        if options.get('constants'):
            constants = read_json(options['constants'])
            if not isinstance(constants, dict):
                raise DataFileError(f"{options['constants']} must hold a JSON object")
        dc = DesignConstants.from_dict(constants)

        two_phase = options['two_phase'] or pop.is_two_phase
        if two_phase:
            system = build_system_two_phase(pop, dc, options['paper_literal'])
            kind = EstimatorKind.PD_COMBINED
        else:
            system = build_system_single(pop, dc)
            kind = EstimatorKind.P_COMBINED
        weights = solve_weights(system)
        spec = EstimatorSpec(kind=kind, constants=dc, weights=weights)
        slope = slopes(pop, dc, h=weights) if two_phase else slopes(pop, dc, w=weights)

        payload = {
            'kind': kind.value,
            'constants': dc.to_dict(),
            'weights': weights.to_dict(),
            'slope': slope.L2 if two_phase else slope.Q,
            'system': system.to_dict(),
            'moments': report(spec, pop, options['paper_literal']).to_dict(),
        }
        rows = [
            {'weight': f"{weights.role}{index}", 'value': value}
            for index, value in enumerate(weights.as_tuple())
        ]
        return Report(
            title=f"Optimum {weights.role}-weights",
            payload=payload,
            columns=['weight', 'value'],
            rows=rows,
        )
