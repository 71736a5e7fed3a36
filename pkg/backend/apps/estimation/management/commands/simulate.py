"""
Django management command to run the Monte Carlo oracle
"""
from backend.apps.estimation.management.base import EstimationCommand, read_json
from backend.core.errors import DataFileError, DomainError
from backend.core.montecarlo import (
    RESIDUAL_SHAPES,
    SimulationPlan,
    build_population,
    compare_with_theory,
    get_runner,
    run,
)
from backend.core.reporting import Report


class Command(EstimationCommand):
    help = 'Simulate SRSWOR or two-phase sampling on a synthetic population and compare with the closed forms'

    def add_command_arguments(self, parser):
        parser.add_argument('--plan', type=str, default=None, help='Simulation plan JSON file')
        parser.add_argument('--replications', type=int, default=None, help='Number of replications')
        parser.add_argument('--seed', type=int, default=None, help='64-bit seed')
        parser.add_argument('--n', type=int, default=None, help='Sample size (population n when omitted)')
        parser.add_argument('--n-prime', type=int, default=None, help='First-phase size')
        parser.add_argument('--estimator-file', type=str, default=None, help='JSON list of estimator specs')
        parser.add_argument(
            '--solve-weights',
            action='store_true',
            help='Solve the weights of combined specs given without them',
        )
        self.add_population_arguments(parser)
        parser.add_argument('--residuals', choices=RESIDUAL_SHAPES, default=None, help='Residual shape of y')
        parser.add_argument('--population-seed', type=int, default=None, help='Seed of the synthetic population')
        parser.add_argument('--runner', choices=['local', 'celery'], default=None, help='Chunk runner')
        parser.add_argument('--chunk-size', type=int, default=None, help='Replications per chunk')

    def load_plan(self, options, target) -> SimulationPlan:
        if options.get('plan'):
            data = read_json(options['plan'])
            if not isinstance(data, dict):
                raise DataFileError(f"{options['plan']} must hold a plan object")
        else:
            missing = [
                flag for flag, key in (
                    ('--replications', 'replications'),
                    ('--seed', 'seed'),
                    ('--estimator-file', 'estimator_file'),
                ) if options.get(key) is None
            ]
            if missing:
                raise DomainError(f"Without --plan, {', '.join(missing)} must be given")
            estimators = read_json(options['estimator_file'])
            if isinstance(estimators, dict):
                estimators = estimators.get('estimators', [])
            n = options['n'] if options.get('n') is not None else target.n
            n_prime = options['n_prime'] if options.get('n_prime') is not None else target.n_prime
            data = {
                'replications': options['replications'],
                'seed': options['seed'],
                'n': n,
                'n_prime': n_prime,
                'estimators': estimators,
                'weights': 'solve' if options['solve_weights'] else None,
            }
        if options.get('residuals'):
            data['residuals'] = options['residuals']
        return SimulationPlan.from_dict(data)

    def build_report(self, **options) -> Report:
        target = self.load_population(options)
        plan = self.load_plan(options, target)
        seed = options['population_seed'] if options.get('population_seed') is not None else plan.seed

        popn = build_population(target, seed, plan.residuals)
        result = run(plan, popn, runner=get_runner(options.get('runner')), chunk_size=options.get('chunk_size'))
        comparisons = compare_with_theory(result, plan, popn)

        rows = []
        for comparison in comparisons:
            moments = result[comparison.label]
            rows.append({
                'estimator': comparison.label,
                'emp_bias': comparison.emp_bias,
                'theory_bias': comparison.theory_bias,
                'z_bias': comparison.z_bias,
                'emp_mse': comparison.emp_mse,
                'theory_mse': comparison.theory_mse,
                'rel_mse_error': comparison.relative_mse_error,
                'agrees': comparison.agrees,
                'degenerate': moments.degenerate,
                'status': 'UNSTABLE' if moments.unstable else 'OK',
            })
        return Report(
            title=f"Simulation of {plan.replications} replications (seed {plan.seed})",
            payload=result.to_dict(comparisons),
            columns=list(rows[0]) if rows else [],
            rows=rows,
        )
