from fractions import Fraction

import networkx as nx
import pytest

from app.core.exceptions import InvalidTripError, UnknownStationError
from app.models.flow import OUTSIDE, Flow
from app.models.network import EdgeKind, NodeKind, Station, Stop, Trip
from app.services.demand.costs import path_cost
from app.services.network.builder import build_time_expanded, to_networkx, unroll_periodic
from app.services.network.extended import extend_problem
from app.services.network.paths import (
    arrival_time,
    enumerate_strategies,
    itinerary,
    shortest_strategy,
    travel_time,
)

pytestmark = pytest.mark.unit

H = 3600


def _trip(trip_id, *stops, capacity=Fraction(1)):
    return Trip(trip_id, capacity, tuple(Stop(*s) for s in stops))


class TestBuildTimeExpanded:
    def test_fig1_dimensions(self, fig1):
        graph = fig1.graph
        counts = graph.count_by_kind()
        assert len(graph.nodes) == 16
        assert len(graph.edges) == 18
        assert counts["driving"] == 4
        assert counts["boarding"] == 4
        assert counts["waiting"] == 4
        assert counts["on_platform"] == 8

    def test_canonical_order_is_topological(self, fig1):
        graph = fig1.graph
        for edge in graph.edges:
            assert edge.tail < edge.head
            assert edge.tau >= 0
        pairs = [(e.tail, e.head) for e in graph.edges]
        assert pairs == sorted(pairs)
        assert nx.is_directed_acyclic_graph(to_networkx(graph))

    def test_same_time_ties_put_arrivals_first(self, fig4):
        graph = fig4.graph
        at_v = [n for n in graph.nodes if n.station == "v" and n.time == 2 * H]
        assert [n.kind for n in at_v] == [NodeKind.ARRIVAL, NodeKind.ON_PLATFORM, NodeKind.DEPARTURE]

    def test_successor_and_previous_driving(self, fig1):
        graph = fig1.graph
        for boarding, driving in graph.successor.items():
            assert graph.edges[boarding].kind == EdgeKind.BOARDING
            assert graph.edges[driving].kind == EdgeKind.DRIVING
            assert graph.edges[boarding].head == graph.edges[driving].tail
        red = [e for e in graph.driving_edges if graph.edges[e].trip == "red"]
        assert graph.previous_driving[red[0]] is None
        assert graph.previous_driving[red[1]] == red[0]
        assert graph.capacity(red[0]) == 1

    def test_unknown_station_rejected(self):
        with pytest.raises(InvalidTripError, match="station inconnue"):
            build_time_expanded([Station("a")], [_trip("x", ("a", None, 0), ("z", 60, None))])

    def test_duplicate_station_rejected(self):
        with pytest.raises(UnknownStationError):
            build_time_expanded([Station("a"), Station("a")], [])

    @pytest.mark.parametrize(
        "stops, reason",
        [
            ((("a", None, 100), ("b", 100, None)), "non postérieure"),
            ((("a", None, 0), ("b", 60, 30), ("a", 90, None)), "départ avant l'arrivée"),
            ((("a", None, 0),), "deux arrêts"),
        ],
    )
    def test_invalid_trips(self, stops, reason):
        with pytest.raises(InvalidTripError, match=reason):
            build_time_expanded([Station("a"), Station("b")], [_trip("x", *stops)])

    def test_zero_capacity_rejected(self):
        with pytest.raises(InvalidTripError, match="capacité"):
            build_time_expanded(
                [Station("a"), Station("b")],
                [_trip("x", ("a", None, 0), ("b", 60, None), capacity=Fraction(0))],
            )


class TestUnrollPeriodic:
    def test_copies_within_horizon(self):
        template = _trip("line", ("a", None, 300), ("b", 900, None))
        trips = unroll_periodic([template], period=1200, horizon=(0, 3600))
        assert [t.id for t in trips] == ["line@0", "line@1", "line@2"]
        assert [t.stops[0].departure for t in trips] == [300, 1500, 2700]

    def test_negative_offsets_reach_the_horizon_start(self):
        template = _trip("line", ("a", None, 5000), ("b", 5600, None))
        trips = unroll_periodic([template], period=2000, horizon=(0, 4000))
        assert [t.stops[0].departure for t in trips] == [1000, 3000]

    def test_invalid_period(self):
        with pytest.raises(ValueError):
            unroll_periodic([], period=0, horizon=(0, 10))


class TestStrategies:
    def test_fig1_shortest_uses_blue(self, fig1):
        path, cost = shortest_strategy(fig1, "ac")
        assert cost == Fraction(9, 2)
        assert arrival_time(fig1.graph, path) == 9 * H // 2
        assert path == itinerary(fig1.graph, "a", H, [("blue", "a", "c")])
        assert travel_time(fig1.graph, path) == 7 * H // 2

    def test_blocked_blue_falls_back_to_red(self, fig1):
        graph = fig1.graph
        blue_boarding = next(e for e in graph.boarding_edges if graph.edges[e].trip == "blue")
        path, cost = shortest_strategy(fig1, "ac", blocked_edges=frozenset({blue_boarding}))
        assert cost == 6
        assert arrival_time(graph, path) == 6 * H
        assert all(graph.edges[e].trip in (None, "red") for e in path)

    def test_enumeration_starts_with_outside(self, fig4):
        strategies = enumerate_strategies(fig4, "st", cap=100)
        assert strategies[0] == ()
        assert len(set(strategies)) == len(strategies)


class TestExtendedGraph:
    def _routes(self, graph):
        return (
            itinerary(graph, "a", H, [("blue", "a", "c")]),
            itinerary(graph, "a", H, [("red", "a", "c")]),
        )

    def test_dimensions_and_constant(self, fig1):
        extended = extend_problem(fig1)
        assert extended.node_count == 18
        assert extended.big_m == 101
        outside = extended.extended_edge(extended.outside_edge["ac"])
        assert (outside.tail, outside.head) == (extended.alpha["ac"], extended.omega["ac"])

    def test_strategy_cost_telescopes(self, fig1):
        extended = extend_problem(fig1)
        blue, red = self._routes(fig1.graph)
        flow = Flow.from_items([("ac", blue, 1), ("ac", red, 1)])
        for path in (blue, red, OUTSIDE):
            assert extended.strategy_cost("ac", path, flow) == path_cost(fig1, "ac", path)

    def test_overloaded_boarding_costs_m(self, fig1):
        extended = extend_problem(fig1)
        blue, _ = self._routes(fig1.graph)
        flow = Flow.from_items([("ac", blue, 2)])
        assert extended.strategy_cost("ac", blue, flow) == path_cost(fig1, "ac", blue) + 101
