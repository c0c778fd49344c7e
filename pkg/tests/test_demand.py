from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import pytest

from app.core.exceptions import CostEnumerationOverflow, DemandProfileError, DepartureTimeError
from app.models.demand import Commodity, ElasticCurve, Group, OdDemand, TimeWindow
from app.models.flow import Flow
from app.services.demand.costs import arrival_cost, discretize_elastic, enumerate_distinct_costs, path_cost
from app.services.demand.departure import extend_flow, fdt_transform
from app.services.demand.problem import build_problem
from app.services.instances.examples import fig1, fig6
from app.services.instances.shaping import apply_demand_profile, load_shares, scale_demand
from app.services.network.paths import enumerate_strategies, itinerary

H = 3600
SAMPLE_SHARES = Path(__file__).parent.parent / "data" / "demand_profile_sample.csv"


def _commodity(**changes) -> Commodity:
    base = Commodity(
        id="k",
        origin="a",
        destination="c",
        window=TimeWindow.at(0),
        target=100,
        beta=Fraction(1, 60),
        gamma_late=Fraction(3, 60),
        gamma_early=Fraction(1, 60),
        demand=Fraction(1),
        outside_cost=Fraction(50),
    )
    return replace(base, **changes)


def _group(curve) -> Group:
    return Group(
        id="g",
        origin="a",
        destination="c",
        window=TimeWindow.at(H),
        target=0,
        beta=Fraction(0),
        gamma_late=Fraction(1, H),
        gamma_early=Fraction(0),
        curve=ElasticCurve(curve),
    )


@pytest.mark.unit
class TestCosts:
    def test_arrival_penalties(self):
        commodity = _commodity()
        assert arrival_cost(commodity, 100) == 0
        assert arrival_cost(commodity, 160) == 3
        assert arrival_cost(commodity, 40) == 1

    def test_path_cost_fig1(self):
        problem = build_problem(fig1())
        graph = problem.graph
        blue = itinerary(graph, "a", H, [("blue", "a", "c")])
        red = itinerary(graph, "a", H, [("red", "a", "c")])
        assert path_cost(problem, "ac", blue, validate=True) == Fraction(9, 2)
        assert path_cost(problem, "ac", red) == 6
        assert path_cost(problem, "ac", ()) == 100

    def test_elastic_curve_validation(self):
        with pytest.raises(ValueError):
            ElasticCurve(((Fraction(0), Fraction(1)), (Fraction(5), Fraction(2)), (Fraction(9), Fraction(0))))
        with pytest.raises(ValueError):
            ElasticCurve(((Fraction(1), Fraction(1)), (Fraction(5), Fraction(0))))

    def test_distinct_costs_of_fig1_group(self):
        group = _group(((Fraction(0), Fraction(2)), (Fraction(10), Fraction(0))))
        problem = build_problem(fig1())
        distinct = enumerate_distinct_costs(group, problem.graph)
        assert not distinct.truncated
        assert distinct.values[:2] == (Fraction(9, 2), Fraction(6))
        assert list(distinct.values) == sorted(set(distinct.values))

    def test_discretize_elastic_bands(self):
        group = _group(
            ((Fraction(0), Fraction(3)), (Fraction(5), Fraction(1)), (Fraction(8), Fraction(0)))
        )
        bands = discretize_elastic(group, [Fraction(9, 2), Fraction(6)])
        assert [b.demand for b in bands] == [Fraction(2), Fraction(1)]
        assert [b.outside_cost for b in bands] == [Fraction(21, 4), Fraction(7)]
        assert sum(b.demand for b in bands) == 3

    def test_build_problem_discretizes_groups(self):
        group = _group(((Fraction(0), Fraction(2)), (Fraction(10), Fraction(0))))
        instance = replace(fig1(), commodities=(), groups=(group,))
        problem = build_problem(instance)
        assert problem.total_demand == 2
        assert all(c.id.startswith("g#") for c in problem.commodities)

    def test_cost_cap_overflow(self):
        group = _group(((Fraction(0), Fraction(2)), (Fraction(10), Fraction(0))))
        instance = replace(fig1(), commodities=(), groups=(group,))
        with pytest.raises(CostEnumerationOverflow):
            build_problem(instance, cost_cap=1)


@pytest.mark.unit
class TestFixedDeparture:
    def test_transform_keeps_single_start(self):
        problem = build_problem(fig6())
        transform = fdt_transform(problem)
        commodity = transform.problem.commodity("st")
        assert transform.start_times["st"] == H
        assert commodity.beta == 0
        assert commodity.gamma_late == Fraction(1, H)

    def test_costs_shift_by_a_constant(self):
        problem = build_problem(fig6())
        transform = fdt_transform(problem)
        before, after = problem.commodity("st"), transform.problem.commodity("st")
        shift = after.outside_cost - before.outside_cost
        for path in enumerate_strategies(problem, "st", cap=100):
            assert path_cost(transform.problem, "st", path) - path_cost(problem, "st", path) == shift

    def test_extend_flow_keeps_fixed_starts(self):
        problem = build_problem(fig6())
        transform = fdt_transform(problem)
        strategies = enumerate_strategies(problem, "st", cap=100)
        flow = Flow.from_items([("st", strategies[0], 1), ("st", strategies[-1], 1)])
        assert extend_flow(transform, flow) == flow

    def test_several_starts_with_beta_rejected(self, fig4):
        with pytest.raises(DepartureTimeError):
            fdt_transform(fig4)


@pytest.mark.unit
class TestShaping:
    def _instance(self, volume=Fraction(24)):
        return replace(fig1(), commodities=(), od_demands=(OdDemand("a", "c", volume),))

    def test_uniform_profile(self):
        shares = [Fraction(1, 24)] * 24
        shaped = apply_demand_profile(self._instance(), shares, slot=3600)
        assert len(shaped.commodities) == 24
        assert {c.demand for c in shaped.commodities} == {Fraction(1)}
        assert shaped.od_demands == ()
        first = shaped.commodities[0]
        assert first.id == "a-c@0"
        assert first.window == TimeWindow(0, 86_399)
        assert first.gamma_late == Fraction(3, 60)

    def test_single_hour_and_conservation(self):
        shares = [Fraction(0)] * 24
        shares[8] = Fraction(1)
        shaped = apply_demand_profile(self._instance(Fraction(7)), shares, slot=600, mode="fdt")
        assert len(shaped.commodities) == 6
        assert sum(c.demand for c in shaped.commodities) == 7
        assert all(c.window.is_singleton and 8 * H <= c.window.lo < 9 * H for c in shaped.commodities)
        assert all(c.gamma_late == 0 for c in shaped.commodities)

    def test_invalid_shares(self):
        with pytest.raises(DemandProfileError):
            apply_demand_profile(self._instance(), [Fraction(1, 25)] * 24)
        with pytest.raises(DemandProfileError):
            apply_demand_profile(self._instance(), [Fraction(1, 23)] * 23)

    def test_sample_shares_file(self):
        shares = load_shares(str(SAMPLE_SHARES))
        assert len(shares) == 24
        assert sum(shares) == 1

    def test_scale_round_trip(self):
        instance = fig6()
        assert scale_demand(scale_demand(instance, Fraction(1, 2)), Fraction(2)) == instance
        assert scale_demand(instance, Fraction(10)).commodities[0].demand == 20
        with pytest.raises(ValueError):
            scale_demand(instance, Fraction(0))
