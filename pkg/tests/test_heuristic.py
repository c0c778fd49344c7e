from collections import deque
from fractions import Fraction

import pytest

from app.core.config import get_settings
from app.core.exceptions import DirectionError
from app.models.flow import OUTSIDE, Direction, Flow
from app.services.flow.verify import is_feasible, verify_equilibrium
from app.services.network.paths import itinerary, shortest_strategy
from app.services.solvers.heuristic import (
    TRACE_COLUMNS,
    CycleAction,
    CycleEvent,
    HeuristicConfig,
    Outcome,
    Selection,
    detect_period,
    fixed_initial_solution,
    is_feasible_direction,
    max_step,
    repair_direction,
    solve_heuristic,
    trace_frame,
)

H = 3600
COLD = dict(prefill=False, warm_start=False)


def _blue(problem):
    return itinerary(problem.graph, "a", H, [("blue", "a", "c")])


@pytest.mark.unit
class TestDirections:
    def test_max_step_from_outside(self, fig1):
        flow = Flow.from_items([("ac", OUTSIDE, 2)])
        direction = Direction.elementary("ac", OUTSIDE, _blue(fig1))
        assert is_feasible_direction(fig1, flow, direction)
        assert max_step(fig1, flow, direction) == 1

    def test_repair_moves_the_carrier(self, fig1):
        graph = fig1.graph
        blue = _blue(fig1)
        flow = Flow.from_items([("ac", blue, 1), ("ac", OUTSIDE, 1)])
        direction = Direction.elementary("ac", OUTSIDE, blue)
        assert not is_feasible_direction(fig1, flow, direction)

        repaired = repair_direction(fig1, flow, direction)
        blue_driving = next(e for e in blue if graph.is_driving(e))
        red, _ = shortest_strategy(fig1, "ac", blocked_edges=frozenset({blue_driving}))
        assert repaired == Direction.elementary("ac", OUTSIDE, red)
        assert is_feasible_direction(fig1, flow, repaired)
        assert is_feasible(fig1, flow.apply(repaired.entries, max_step(fig1, flow, repaired)))

    def test_scaled_directions_share_a_cycle_key(self, fig1):
        direction = Direction.elementary("ac", OUTSIDE, _blue(fig1))
        doubled = direction.scaled(Fraction(2))
        assert doubled != direction
        assert doubled.key() == direction.key()
        assert direction.scaled(Fraction(-1)).key() != direction.key()
        assert detect_period(deque([direction.key(), doubled.key()])) == 1

    def test_unbalanced_direction_rejected(self, fig1):
        with pytest.raises(DirectionError):
            is_feasible_direction(fig1, Flow(), Direction({("ac", OUTSIDE): Fraction(1)}))


@pytest.mark.unit
class TestConfig:
    @pytest.mark.parametrize("field", ["budget_secs", "iter_cap", "cycle_window"])
    def test_positive_fields(self, field):
        with pytest.raises(ValueError):
            HeuristicConfig(**{field: 0})

    def test_from_settings(self, mocker):
        mocker.patch.dict("os.environ", {"TRANSITFLUX_ITER_CAP": "42", "TRANSITFLUX_SEED": "7"})
        config = HeuristicConfig.from_settings(get_settings(), seed=None, budget_secs=5)
        assert config.iter_cap == 42
        assert config.seed == 7
        assert config.budget_secs == 5

    def test_invalid_environment(self, mocker):
        mocker.patch.dict("os.environ", {"TRANSITFLUX_JOBS": "zero"})
        with pytest.raises(RuntimeError, match="TRANSITFLUX_JOBS"):
            get_settings()


@pytest.mark.unit
class TestSolveHeuristic:
    def test_fig1_reaches_equilibrium(self, fig1):
        result = solve_heuristic(fig1)
        assert result.outcome == Outcome.EQUILIBRIUM
        assert result.report.social_cost == Fraction(21, 2)
        assert verify_equilibrium(fig1, result.flow).ok

    def test_fig4_stays_best_effort(self, fig4):
        result = solve_heuristic(fig4, HeuristicConfig(iter_cap=200, restarts=2))
        assert result.outcome == Outcome.BEST_EFFORT
        assert is_feasible(fig4, result.flow)

    def test_prefill_on_fig9(self, example_problem):
        fixed = fixed_initial_solution(example_problem("fig9"))
        assert {commodity for commodity, _ in fixed.flow.entries} == {"c1", "c4"}

    def test_fig9_cycle_is_compressed(self, example_problem):
        problem = example_problem("fig9")
        result = solve_heuristic(problem, HeuristicConfig(**COLD))
        assert result.outcome == Outcome.EQUILIBRIUM
        assert result.iterations == 8
        assert result.cycle_events[0] == CycleEvent(7, 2, CycleAction.COMPRESSED)
        flow = result.flow
        assert flow.value("c2", OUTSIDE) == 1
        assert flow.value("c3", OUTSIDE) == 1
        assert flow.value("c4", OUTSIDE) == Fraction(1, 64)

    def test_trace_columns(self, fig1):
        result = solve_heuristic(fig1, HeuristicConfig(**COLD))
        frame = trace_frame(result.trace)
        assert list(frame.columns) == TRACE_COLUMNS
        assert len(frame) == result.iterations + 1
        assert frame.iloc[0]["iter"] == 0


@pytest.mark.slow
class TestSlowConvergence:
    def test_fig9_without_compression(self, example_problem):
        problem = example_problem("fig9")
        result = solve_heuristic(problem, HeuristicConfig(compress_cycles=False, **COLD))
        assert result.iterations >= 126
        assert not any(e.action == CycleAction.COMPRESSED for e in result.cycle_events)

    def test_fig10_switches_to_random_selection(self, example_problem):
        problem = example_problem("fig10")
        result = solve_heuristic(problem, HeuristicConfig(**COLD))
        first = result.cycle_events[0]
        assert first.action == CycleAction.RANDOMIZED
        assert first.period == 3
        assert result.outcome == Outcome.EQUILIBRIUM
        assert result.flow.value("c1", OUTSIDE) == 1
        assert result.flow.value("c3", OUTSIDE) == 1
        assert result.flow.value("c2", OUTSIDE) == 0

    def test_random_selection_is_seeded(self, fig6):
        config = HeuristicConfig(selection=Selection.RANDOM, seed=3)
        assert solve_heuristic(fig6, config).flow == solve_heuristic(fig6, config).flow
