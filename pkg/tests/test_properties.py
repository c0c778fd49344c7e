import random
from fractions import Fraction
from typing import Optional

import pytest

from app.models.flow import Flow
from app.models.instance import Problem
from app.services.demand.costs import path_cost
from app.services.demand.departure import extend_flow, fdt_transform
from app.services.demand.problem import build_problem
from app.services.flow.deviation import deviate, is_admissible, is_available
from app.services.flow.metrics import social_cost
from app.services.flow.verify import is_feasible, verify_bs, verify_equilibrium, verify_qvi
from app.services.instances.synthetic import random_instance
from app.services.network.extended import extend_problem
from app.services.network.paths import enumerate_strategies
from app.services.solvers.exact import ExactStatus, solve_exact
from app.services.solvers.heuristic import HeuristicConfig, Selection, fixed_initial_solution, solve_heuristic
from app.services.solvers.single import solve_single
from app.services.solvers.sysopt import solve_system_optimum

TINY = Fraction(1, 10**6)


def random_problem(seed: int, **options) -> Problem:
    return build_problem(random_instance(random.Random(seed), **options))


def random_feasible_flow(rng: random.Random, problem: Problem, attempts: int = 20) -> Optional[Flow]:
    """Répartit la demande sur quelques stratégies tirées au hasard ; None si aucun tirage n'est réalisable."""
    strategies = {c.id: enumerate_strategies(problem, c.id, cap=10_000) for c in problem.commodities}
    for _ in range(attempts):
        items = []
        for commodity in problem.commodities:
            chosen = rng.sample(strategies[commodity.id], min(len(strategies[commodity.id]), rng.randint(1, 3)))
            weights = [rng.randint(1, 4) for _ in chosen]
            for path, weight in zip(chosen, weights):
                items.append((commodity.id, path, commodity.demand * Fraction(weight, sum(weights))))
        flow = Flow.from_items(items)
        if is_feasible(problem, flow):
            return flow
    return None


def feasible_samples(count: int, **options):
    """(problème, flot réalisable) sur des graines successives."""
    seed = 0
    while count > 0:
        problem = random_problem(seed, departure_choice=seed % 2 == 1, **options)
        flow = random_feasible_flow(random.Random(seed), problem)
        seed += 1
        if flow is not None:
            count -= 1
            yield problem, flow


@pytest.mark.slow
class TestRandomSolvers:
    @pytest.mark.parametrize("seed", range(200))
    def test_exact_on_fixed_departures(self, seed):
        problem = random_problem(seed)
        result = solve_exact(problem)
        assert result.status == ExactStatus.EQUILIBRIUM
        assert verify_equilibrium(problem, result.flow).ok

    @pytest.mark.parametrize("seed", range(200))
    def test_single_commodity_passes_every_verifier(self, seed):
        problem = random_problem(seed, commodities=1)
        flow = solve_single(problem)
        assert verify_equilibrium(problem, flow).ok
        assert verify_qvi(problem, flow)
        assert verify_bs(problem, flow)
        assert len(flow) <= len(problem.graph.edges)

    @pytest.mark.parametrize("selection", list(Selection))
    @pytest.mark.parametrize("seed", range(20))
    def test_fixed_solution_never_decreases(self, seed, selection):
        problem = random_problem(seed, departure_choice=seed % 2 == 1)
        config = HeuristicConfig(budget_secs=20, iter_cap=500, restarts=4, seed=seed, selection=selection)
        result = solve_heuristic(problem, config)
        fixed = fixed_initial_solution(problem).flow
        assert result.fixed.flow == fixed
        for (commodity_id, path), value in fixed.entries.items():
            assert result.flow.value(commodity_id, path) >= value

    @pytest.mark.parametrize("seed", range(50))
    def test_system_optimum_is_cheapest(self, seed):
        problem = random_problem(seed)
        optimum = social_cost(problem, solve_system_optimum(problem))
        exact = solve_exact(problem)
        assert exact.status == ExactStatus.EQUILIBRIUM
        heuristic = solve_heuristic(problem, HeuristicConfig(budget_secs=20, iter_cap=500, restarts=2, seed=seed))
        assert optimum <= social_cost(problem, exact.flow)
        assert optimum <= social_cost(problem, heuristic.flow)

        single = random_problem(seed, commodities=1)
        assert social_cost(single, solve_system_optimum(single)) <= social_cost(single, solve_single(single))


@pytest.mark.slow
class TestRandomFlows:
    def test_verifiers_agree(self):
        for problem, flow in feasible_samples(1000):
            ok = verify_equilibrium(problem, flow).ok
            assert verify_qvi(problem, flow) == ok
            assert verify_bs(problem, flow) == ok

    def test_strategy_cost_telescopes(self):
        for problem, flow in feasible_samples(100):
            extended = extend_problem(problem)
            for commodity in problem.commodities:
                for path in enumerate_strategies(problem, commodity.id, cap=10_000):
                    assert extended.strategy_cost(commodity.id, path, flow) == path_cost(problem, commodity.id, path)

    def test_availability_matches_small_deviations(self):
        for problem, flow in feasible_samples(100):
            for commodity in problem.commodities:
                strategies = enumerate_strategies(problem, commodity.id, cap=10_000)
                for source in flow.paths_of(commodity.id):
                    for target in strategies:
                        assert is_available(problem, flow, commodity.id, source, target) == is_admissible(
                            problem, flow, commodity.id, source, target, TINY
                        )

    def test_availability_survives_lighter_loads(self):
        for problem, flow in feasible_samples(100):
            lighter = Flow({key: value / 2 for key, value in flow.entries.items()})
            for commodity in problem.commodities:
                strategies = enumerate_strategies(problem, commodity.id, cap=10_000)
                for source in flow.paths_of(commodity.id):
                    for target in strategies:
                        if is_available(problem, flow, commodity.id, source, target):
                            assert is_available(problem, lighter, commodity.id, source, target)

    def test_loads_follow_deviations(self):
        rng = random.Random(7)
        for problem, flow in feasible_samples(100):
            for commodity in problem.commodities:
                strategies = enumerate_strategies(problem, commodity.id, cap=10_000)
                for source, value in list(flow.paths_of(commodity.id).items()):
                    flow = deviate(flow, commodity.id, source, rng.choice(strategies), value / 2)
            assert dict(flow.loads) == dict(Flow(flow.entries).loads)


@pytest.mark.slow
class TestFixedDepartureTransform:
    @pytest.mark.parametrize("seed", range(100))
    def test_verdict_survives_the_transform(self, seed):
        problem = random_problem(seed, departure_choice=seed % 2 == 1)
        if seed % 2 == 1:
            # β nul : plusieurs instants de départ restent admis
            problem = problem.with_commodities([c.with_changes(beta=Fraction(0)) for c in problem.commodities])
        transform = fdt_transform(problem)
        flows = [random_feasible_flow(random.Random(seed), transform.problem)]
        exact = solve_exact(transform.problem)
        if exact.status == ExactStatus.EQUILIBRIUM:
            flows.append(exact.flow)
        for flow in (f for f in flows if f is not None):
            assert verify_equilibrium(transform.problem, flow).ok == verify_equilibrium(
                problem, extend_flow(transform, flow)
            ).ok
