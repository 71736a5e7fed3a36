"""
Views for the estimation API
"""
from dataclasses import asdict

from celery.result import AsyncResult
from rest_framework import status, viewsets
from rest_framework.decorators import action
from rest_framework.response import Response

from backend.apps.estimation.serializers import (
    EvaluateRequestSerializer,
    SimulationRequestSerializer,
    TableQuerySerializer,
    WeightsRequestSerializer,
)
from backend.apps.estimation.tasks import run_simulation_task
from backend.core.datasets import builtin_population, population_path
from backend.core.errors import EstimationError, UnknownTableError
from backend.core.estimators import DesignConstants, EstimatorKind, EstimatorSpec, SampleQuantities, evaluate
from backend.core.moments import report
from backend.core.montecarlo import SimulationPlan
from backend.core.population import (
    PopulationSummary,
    derive_constants,
    parameterization_gap,
    summary_metadata,
)
from backend.core.tables import reproduce_table
from backend.core.weights import build_system_single, build_system_two_phase, parse_spec, solve_weights

POPULATION_KEYS = {
    'single_phase_1': (1, False),
    'single_phase_2': (2, False),
    'two_phase_1': (1, True),
    'two_phase_2': (2, True),
}


def _population_entry(key: str) -> dict:
    pop_id, two_phase = POPULATION_KEYS[key]
    pop = builtin_population(pop_id, two_phase=two_phase)
    derived = derive_constants(pop)
    return {
        'key': key,
        'metadata': summary_metadata(population_path(pop_id, two_phase)),
        'summary': pop.to_dict(),
        'derived': {name: value for name, value in asdict(derived).items() if value is not None},
        'parameterization_gap': parameterization_gap(pop),
    }


def _load_population(data: dict) -> PopulationSummary:
    if data.get('population') is not None:
        return PopulationSummary.from_dict(data['population'])
    return builtin_population(data['pop_id'], two_phase=data['two_phase'])


def _error(e: Exception) -> Response:
    return Response({'detail': str(e)}, status=status.HTTP_400_BAD_REQUEST)


class PopulationViewSet(viewsets.ViewSet):
    """
    Shipped population summaries with their derived constants

    GET /api/populations/
    GET /api/populations/{key}/
    """

    def list(self, request):
        return Response([_population_entry(key) for key in POPULATION_KEYS])

    def retrieve(self, request, pk=None):
        if pk not in POPULATION_KEYS:
            return Response(
                {'detail': f"Unknown population: {pk}"},
                status=status.HTTP_404_NOT_FOUND
            )
        return Response(_population_entry(pk))


class TableViewSet(viewsets.ViewSet):
    """
    Reproduced tables

    GET /api/tables/{id}/?pop=1&paper_literal=false
    """
    lookup_value_regex = '[^/]+'

    def retrieve(self, request, pk=None):
        query = TableQuerySerializer(data={'table_id': pk, **request.query_params.dict()})
        if not query.is_valid():
            if 'table_id' in query.errors:
                return Response(
                    {'detail': f"Unknown table: {pk}"},
                    status=status.HTTP_404_NOT_FOUND
                )
            return Response(query.errors, status=status.HTTP_400_BAD_REQUEST)

        params = query.validated_data
        try:
            reproduction = reproduce_table(params['table_id'], params['pop'], params['paper_literal'])
        except UnknownTableError as e:
            return Response({'detail': str(e)}, status=status.HTTP_404_NOT_FOUND)
        except EstimationError as e:
            return _error(e)
        return Response(reproduction.to_dict())


class WeightsViewSet(viewsets.ViewSet):
    """Optimum weights of the combined estimators"""

    @action(detail=False, methods=['post'])
    def solve(self, request):
        """
        Solve the weight system

        POST /api/weights/solve/
        Body: {"pop_id": 1, "two_phase": false, "constants": {...}, "paper_literal": false}
        """
        serializer = WeightsRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        try:
            pop = _load_population(data)
            dc = DesignConstants.from_dict(data['constants'])
            if pop.is_two_phase:
                system = build_system_two_phase(pop, dc, data['paper_literal'])
                kind = EstimatorKind.PD_COMBINED
            else:
                system = build_system_single(pop, dc)
                kind = EstimatorKind.P_COMBINED
            weights = solve_weights(system)
            moments = report(EstimatorSpec(kind=kind, constants=dc, weights=weights), pop, data['paper_literal'])
        except EstimationError as e:
            return _error(e)

        return Response({
            'kind': kind.value,
            'weights': weights.to_dict(),
            'system': system.to_dict(),
            'moments': moments.to_dict(),
        })


class EstimateViewSet(viewsets.ViewSet):
    """Point estimates with closed-form moments"""

    @action(detail=False, methods=['post'])
    def evaluate(self, request):
        """
        Evaluate an estimator spec

        POST /api/estimates/evaluate/
        Body: {"spec": {...}, "pop_id": 1, "y_bar": 3.1, "p": 0.12, "p_prime": null}
        """
        serializer = EvaluateRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        try:
            pop = _load_population(data)
            spec = parse_spec(data['spec'], pop, data['paper_literal'])
            sample = SampleQuantities(y_bar=data['y_bar'], p=data['p'], p_prime=data.get('p_prime'))
            estimate = evaluate(spec, pop, sample)
            moments = report(spec, pop, data['paper_literal'])
        except EstimationError as e:
            return _error(e)

        return Response({
            'spec': spec.to_dict(),
            'estimate': estimate,
            'moments': moments.to_dict(),
        })


class SimulationViewSet(viewsets.ViewSet):
    """
    Queued Monte Carlo runs

    POST /api/simulations/
    GET /api/simulations/{task_id}/
    """

    def create(self, request):
        serializer = SimulationRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        plan_data = dict(data['plan'])
        if data.get('residuals'):
            plan_data['residuals'] = data['residuals']
        try:
            target = _load_population(data)
            plan = SimulationPlan.from_dict(plan_data)
            plan.check_population(target)
        except EstimationError as e:
            return _error(e)

        task = run_simulation_task.delay(plan.to_dict(), target.to_dict(), data.get('seed'))
        return Response(
            {'task_id': task.id, 'detail': 'Simulation queued'},
            status=status.HTTP_202_ACCEPTED
        )

    def retrieve(self, request, pk=None):
        result = AsyncResult(pk)
        body = {'task_id': pk, 'status': result.status}
        if result.successful():
            body['result'] = result.result
        elif result.failed():
            body['detail'] = str(result.result)
        return Response(body)
