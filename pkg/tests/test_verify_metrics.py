from fractions import Fraction

import pandas as pd
import pytest

from app.core.exceptions import InvalidStrategyError
from app.models.flow import OUTSIDE, Flow
from app.services.flow.deviation import deviate, is_admissible, is_available
from app.services.flow.metrics import (
    CSV_COLUMNS,
    approximation_factor,
    metrics,
    social_cost,
    write_metrics_csv,
)
from app.services.flow.verify import (
    ViolationReason,
    is_feasible,
    verify_bs,
    verify_equilibrium,
    verify_qvi,
)
from app.services.network.paths import itinerary

H = 3600


@pytest.fixture
def routes(fig1):
    graph = fig1.graph
    return {
        "blue": itinerary(graph, "a", H, [("blue", "a", "c")]),
        "red": itinerary(graph, "a", H, [("red", "a", "c")]),
    }


@pytest.mark.unit
class TestVerifyEquilibrium:
    def test_blue_and_red(self, fig1, routes):
        flow = Flow.from_items([("ac", routes["blue"], 1), ("ac", routes["red"], 1)])
        assert verify_equilibrium(fig1, flow).ok
        assert verify_qvi(fig1, flow)
        assert verify_bs(fig1, flow)
        assert social_cost(fig1, flow) == Fraction(21, 2)

    def test_capacity_violation(self, fig1, routes):
        flow = Flow.from_items([("ac", routes["blue"], 2)])
        check = verify_equilibrium(fig1, flow)
        assert not check.ok
        assert check.reason == ViolationReason.CAPACITY
        assert not is_feasible(fig1, flow)
        assert not verify_bs(fig1, flow)

    def test_demand_violation(self, fig1, routes):
        check = verify_equilibrium(fig1, Flow.from_items([("ac", routes["blue"], 1)]))
        assert check.reason == ViolationReason.DEMAND
        assert check.commodity == "ac"

    def test_outside_with_free_red_trip(self, fig1, routes):
        flow = Flow.from_items([("ac", routes["blue"], 1), ("ac", OUTSIDE, 1)])
        check = verify_equilibrium(fig1, flow)
        assert check.reason == ViolationReason.CHEAPER_ALTERNATIVE
        assert check.path == OUTSIDE
        assert check.path_cost == 100
        assert check.alternative_cost == 6
        assert "100" in check.describe()
        assert not verify_qvi(fig1, flow)
        assert not verify_bs(fig1, flow)

    def test_unknown_edge_is_rejected(self, fig1):
        with pytest.raises(InvalidStrategyError):
            verify_equilibrium(fig1, Flow.from_items([("ac", (999,), 2)]))

    def test_full_trip_is_unavailable_unless_aboard(self, fig1, routes):
        flow = Flow.from_items([("ac", routes["blue"], 1), ("ac", routes["red"], 1)])
        assert not is_available(fig1, flow, "ac", routes["red"], routes["blue"])
        assert is_available(fig1, flow, "ac", routes["blue"], routes["blue"])

    @pytest.mark.parametrize(
        "occupied, source, target",
        [("red", "blue", "red"), ("red", "blue", "blue"), ("outside", "outside", "red"), ("outside", "outside", "blue")],
    )
    def test_predicate_matches_small_deviation(self, fig1, routes, occupied, source, target):
        strategies = {**routes, "outside": OUTSIDE}
        flow = Flow.from_items([("ac", routes["blue"], 1), ("ac", strategies[occupied], 1)])
        p, q = strategies[source], strategies[target]
        assert is_available(fig1, flow, "ac", p, q) == is_admissible(fig1, flow, "ac", p, q, Fraction(1, 100))

    def test_deviate_moves_volume(self, routes):
        flow = Flow.from_items([("ac", OUTSIDE, 2)])
        moved = deviate(flow, "ac", OUTSIDE, routes["red"], Fraction(1, 2))
        assert moved.value("ac", OUTSIDE) == Fraction(3, 2)
        assert moved.value("ac", routes["red"]) == Fraction(1, 2)


@pytest.mark.unit
class TestMetrics:
    def test_equilibrium_has_no_regret(self, fig1, routes):
        flow = Flow.from_items([("ac", routes["blue"], 1), ("ac", routes["red"], 1)])
        report = metrics(fig1, flow)
        assert report.mean_rho == 1
        assert report.p99_rho == 1
        assert report.share_zero_regret == 1
        assert report.social_cost == Fraction(21, 2)
        assert all(row.regret == 0 for row in report.rows)

    def test_outside_particle_regret(self, fig1, routes):
        flow = Flow.from_items([("ac", routes["blue"], 1), ("ac", OUTSIDE, 1)])
        report = metrics(fig1, flow, jobs=2)
        outside = next(row for row in report.rows if row.path_id == "outside")
        assert outside.regret == 94
        assert outside.approximation_factor == Fraction(50, 3)
        assert report.mean_rho == Fraction(53, 6)
        assert report.p99_rho == Fraction(50, 3)
        assert report.share_zero_regret == Fraction(1, 2)

    def test_zero_volume(self, fig1):
        report = metrics(fig1, Flow())
        assert (report.mean_rho, report.p99_rho, report.share_zero_regret) == (1, 1, 1)
        assert report.social_cost == 0

    @pytest.mark.parametrize(
        "cost, best, expected",
        [(Fraction(3), Fraction(3), Fraction(1)), (Fraction(0), Fraction(0), Fraction(1)), (Fraction(2), Fraction(0), None)],
    )
    def test_approximation_factor(self, cost, best, expected):
        assert approximation_factor(cost, best) == expected

    def test_csv_export(self, fig1, routes, tmp_path):
        flow = Flow.from_items([("ac", routes["blue"], 1), ("ac", OUTSIDE, 1)])
        path = write_metrics_csv(metrics(fig1, flow), str(tmp_path / "metrics.csv"))
        frame = pd.read_csv(path, dtype=str, nrows=2)
        assert list(frame.columns) == CSV_COLUMNS
        assert set(frame["path_id"]) == {"outside", "-".join(map(str, routes["blue"]))}
        summary = pd.read_csv(path, dtype=str, skiprows=3)
        assert summary.iloc[0]["mean_rho"] == "53/6"
        assert summary.iloc[0]["social_cost"] == "209/2"
