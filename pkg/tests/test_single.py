from dataclasses import replace
from fractions import Fraction

import pytest

from app.core.exceptions import ReductionError
from app.models.demand import TimeWindow
from app.services.demand.problem import build_problem
from app.services.flow.metrics import social_cost
from app.services.flow.verify import verify_equilibrium
from app.services.instances.examples import fig1
from app.services.network.paths import itinerary
from app.services.solvers.single import (
    SingleRound,
    has_priority,
    solve_single,
    solve_single_destination,
    super_source_reduce,
)

H = 3600


@pytest.mark.unit
class TestSingleCommodity:
    def test_fig1_social_cost(self, fig1):
        rounds = []
        flow = solve_single(fig1, check_invariants=True, rounds=rounds)
        assert social_cost(fig1, flow) == Fraction(21, 2)
        assert verify_equilibrium(fig1, flow).ok
        assert [r.cost for r in rounds] == [Fraction(9, 2), Fraction(6)]
        assert all(isinstance(r, SingleRound) and r.delta == 1 for r in rounds)

    def test_uses_at_most_one_path_per_edge(self, fig6):
        flow = solve_single(fig6)
        assert verify_equilibrium(fig6, flow).ok
        assert len(flow) <= len(fig6.graph.edges)

    def test_rejects_several_commodities(self, example_problem):
        with pytest.raises(ValueError):
            solve_single(example_problem("fig9"))

    def test_zero_demand(self, fig1):
        commodity = fig1.commodities[0].with_changes(demand=Fraction(0))
        assert len(solve_single(fig1.with_commodities([commodity]))) == 0

    def test_priority_on_shared_edge(self, fig1):
        graph = fig1.graph
        through = itinerary(graph, "a", H, [("red", "a", "d")])
        late = itinerary(graph, "b", 4 * H, [("red", "b", "d")])
        # la montée à b n'est que sur le second chemin
        assert has_priority(graph, through, late)
        assert not has_priority(graph, late, through)


@pytest.mark.unit
class TestSuperSource:
    def _two_origins(self):
        instance = fig1()
        base = instance.commodities[0]
        second = base.with_changes(id="bc", origin="b", window=TimeWindow.at(4 * H), demand=Fraction(1))
        return build_problem(replace(instance, name="two-origins", commodities=(base, second)))

    def test_reduction_maps_back_to_an_equilibrium(self):
        problem = self._two_origins()
        reduction = super_source_reduce(problem)
        assert len(reduction.reduced.commodities) == 1
        assert reduction.reduced.commodities[0].demand == 3
        flow = solve_single_destination(problem)
        assert flow.volume("ac") == 2
        assert flow.volume("bc") == 1
        assert verify_equilibrium(problem, flow).ok

    def test_different_destinations_rejected(self):
        problem = self._two_origins()
        changed = problem.commodities[1].with_changes(destination="d")
        with pytest.raises(ReductionError):
            super_source_reduce(problem.with_commodities([problem.commodities[0], changed]))
