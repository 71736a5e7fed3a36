"""
Celery tasks for Monte Carlo simulations
"""
from celery import shared_task
from django.conf import settings
import logging

from backend.apps.estimation.concurrency import limiter
from backend.core.montecarlo import (
    LocalChunkRunner,
    SimulationPlan,
    SyntheticPopulation,
    build_population,
    compare_with_theory,
    run,
    simulate_chunk,
)
from backend.core.population import PopulationSummary

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def simulate_chunk_task(self, plan: dict, population: dict, start: int, stop: int):
    """
    Evaluate one chunk of replications

    Args:
        plan: SimulationPlan in its JSON form
        population: SyntheticPopulation in its JSON form
        start: First replication index
        stop: One past the last replication index

    Returns:
        Estimates per label, None for degenerate draws
    """
    logger.debug(f"Chunk task {self.request.id}: replications [{start}, {stop})")
    return simulate_chunk(
        SimulationPlan.from_dict(plan),
        SyntheticPopulation.from_dict(population),
        start,
        stop,
    )


@shared_task(bind=True)
def run_simulation_task(self, plan: dict, target: dict, seed: int = None):
    """
    Build a synthetic population, run a plan on it and compare with theory

    Chunks run in-process; this task never waits on sub-tasks.

    Args:
        plan: SimulationPlan in its JSON form
        target: PopulationSummary the synthetic population is built to
        seed: Population seed (the plan seed when omitted)

    Returns:
        JSON report of the run
    """
    simulation_plan = SimulationPlan.from_dict(plan)
    target_summary = PopulationSummary.from_dict(target)
    population_seed = simulation_plan.seed if seed is None else seed
    job_id = self.request.id or f"simulation_{simulation_plan.seed}"

    with limiter.acquire(job_id, timeout=settings.PROPEST.get('RESULT_TIMEOUT', 3600)):
        popn = build_population(target_summary, population_seed, simulation_plan.residuals)
        result = run(simulation_plan, popn, runner=LocalChunkRunner())
        comparisons = compare_with_theory(result, simulation_plan, popn)

    disagreements = [comparison.label for comparison in comparisons if not comparison.agrees]
    if disagreements:
        logger.warning(f"Simulation {job_id}: closed form and simulation disagree for {disagreements}")
    return result.to_dict(comparisons)
