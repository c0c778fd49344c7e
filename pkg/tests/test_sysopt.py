from fractions import Fraction

import pytest

from app.services.flow.metrics import social_cost
from app.services.flow.verify import is_feasible
from app.services.solvers.stability import StabilityStatus, price_of_stability
from app.services.solvers.sysopt import (
    residual_capacities,
    solve_system_optimum,
    system_optimum_by_enumeration,
)


@pytest.mark.unit
class TestSystemOptimum:
    def test_fig7(self, example_problem):
        problem = example_problem("fig7")
        flow = solve_system_optimum(problem)
        assert is_feasible(problem, flow)
        assert social_cost(problem, flow) == 9

    @pytest.mark.parametrize("name", ["fig1", "fig6", "fig9"])
    def test_column_generation_matches_enumeration(self, example_problem, name):
        problem = example_problem(name)
        generated = solve_system_optimum(problem)
        enumerated = system_optimum_by_enumeration(problem)
        assert social_cost(problem, generated) == social_cost(problem, enumerated)

    def test_threaded_pricing(self, fig6):
        assert social_cost(fig6, solve_system_optimum(fig6, jobs=3)) == social_cost(
            fig6, solve_system_optimum(fig6)
        )

    def test_residual_demands(self, fig1):
        flow = solve_system_optimum(fig1, demands={"ac": Fraction(1)})
        assert social_cost(fig1, flow) == Fraction(9, 2)
        residual = residual_capacities(fig1, flow)
        assert sorted(residual.values()) == [0, 1, 1, 1]


@pytest.mark.unit
class TestPriceOfStability:
    def test_fig7(self, example_problem):
        result = price_of_stability(example_problem("fig7"))
        assert result.status == StabilityStatus.DEFINED
        assert result.best_equilibrium_cost == 10
        assert result.system_optimum_cost == 9
        assert result.value == Fraction(10, 9)

    def test_grows_with_delay(self, example_problem):
        result = price_of_stability(example_problem("fig7", 3))
        assert result.value == Fraction(12, 9)

    def test_fig4_is_undefined(self, fig4):
        result = price_of_stability(fig4)
        assert result.status == StabilityStatus.UNDEFINED
        assert result.value is None
        assert result.system_optimum_cost is not None
