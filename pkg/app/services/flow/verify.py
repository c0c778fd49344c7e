from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Union

from app.models.flow import Flow, Path
from app.models.instance import Problem
from app.services.demand.costs import path_cost
from app.services.flow.deviation import (
    best_available_alternative,
    deviate,
    is_admissible,
)
from app.services.network.extended import ExtendedGraph, extend_problem
from app.services.network.paths import boarding_edges, shortest_strategy, validate_strategy
from app.utils.logs import logger


class ViolationReason(str, Enum):
    DEMAND = "demand"
    CAPACITY = "capacity"
    CHEAPER_ALTERNATIVE = "cheaper_alternative"


@dataclass(frozen=True)
class Equilibrium:
    ok: bool = True


@dataclass(frozen=True)
class Violation:
    reason: ViolationReason
    commodity: Optional[str] = None
    path: Optional[Path] = None
    alternative: Optional[Path] = None
    path_cost: Optional[Fraction] = None
    alternative_cost: Optional[Fraction] = None
    edge: Optional[int] = None
    count: int = 1
    ok: bool = False

    def describe(self) -> str:
        if self.reason == ViolationReason.DEMAND:
            return f"demande non respectée pour {self.commodity}"
        if self.reason == ViolationReason.CAPACITY:
            return f"capacité dépassée sur l'arête {self.edge}"
        return (
            f"{self.commodity} : stratégie de coût {self.path_cost} avec alternative "
            f"disponible de coût {self.alternative_cost}"
        )


EquilibriumCheck = Union[Equilibrium, Violation]


def demand_violations(problem: Problem, flow: Flow) -> List[Violation]:
    violations = []
    for commodity in problem.commodities:
        if flow.volume(commodity.id) != commodity.demand:
            violations.append(Violation(reason=ViolationReason.DEMAND, commodity=commodity.id))
    return violations


def capacity_violations(problem: Problem, flow: Flow) -> List[Violation]:
    graph = problem.graph
    violations = []
    for edge_id in sorted(flow.loads):
        edge = graph.edges[edge_id]
        if edge.capacity is not None and flow.load(edge_id) > edge.capacity:
            violations.append(Violation(reason=ViolationReason.CAPACITY, edge=edge_id))
    return violations


def is_feasible(problem: Problem, flow: Flow) -> bool:
    return not demand_violations(problem, flow) and not capacity_violations(problem, flow)


def _used_in_order(problem: Problem, flow: Flow):
    for commodity_id, path in flow.entries:
        if commodity_id not in problem.index:
            raise ValueError(f"Commodité inconnue dans le flot : {commodity_id!r}")
    return sorted(flow.entries, key=lambda key: problem.order_key(*key))


def verify_equilibrium(problem: Problem, flow: Flow) -> EquilibriumCheck:
    """
    Vérifie qu'un flot est un équilibre sous contraintes de capacité.

    Returns:
        Equilibrium, ou la première Violation dans l'ordre canonique avec le
        nombre total de violations de la même famille.
    """
    for commodity_id, path in _used_in_order(problem, flow):
        validate_strategy(problem, commodity_id, path)

    infeasible = demand_violations(problem, flow) + capacity_violations(problem, flow)
    if infeasible:
        first = infeasible[0]
        return Violation(
            reason=first.reason, commodity=first.commodity, edge=first.edge, count=len(infeasible)
        )

    cheaper: List[Violation] = []
    for commodity_id, path in _used_in_order(problem, flow):
        cost = path_cost(problem, commodity_id, path)
        alternative, best = best_available_alternative(problem, flow, commodity_id, path)
        if best < cost:
            cheaper.append(
                Violation(
                    reason=ViolationReason.CHEAPER_ALTERNATIVE,
                    commodity=commodity_id,
                    path=path,
                    alternative=alternative,
                    path_cost=cost,
                    alternative_cost=best,
                )
            )
    if cheaper:
        first = cheaper[0]
        logger.debug(f"{len(cheaper)} stratégie(s) avec une alternative moins chère")
        return Violation(
            reason=first.reason,
            commodity=first.commodity,
            path=first.path,
            alternative=first.alternative,
            path_cost=first.path_cost,
            alternative_cost=first.alternative_cost,
            count=len(cheaper),
        )
    return Equilibrium()


def verify_qvi(problem: Problem, flow: Flow) -> bool:
    """
    Caractérisation variationnelle : pour toute déviation admissible f′ de D(f),
    ⟨π, f′ − f⟩ ≥ 0.

    Pour chaque stratégie utilisée, on construit explicitement la déviation
    vers la meilleure alternative disponible.
    """
    if not is_feasible(problem, flow):
        return False
    graph = problem.graph
    for commodity_id, path in _used_in_order(problem, flow):
        alternative, best = best_available_alternative(problem, flow, commodity_id, path)
        if alternative == path:
            continue
        shared = set(path)
        epsilon = flow.value(commodity_id, path)
        for e in boarding_edges(graph, alternative):
            driving = graph.successor[e]
            if driving not in shared:
                epsilon = min(epsilon, graph.capacity(driving) - flow.load(driving))
        if epsilon <= 0 or not is_admissible(problem, flow, commodity_id, path, alternative, epsilon):
            continue
        deviated = deviate(flow, commodity_id, path, alternative, epsilon)
        inner = Fraction(0)
        for key in set(flow.entries) | set(deviated.entries):
            change = deviated.entries.get(key, Fraction(0)) - flow.entries.get(key, Fraction(0))
            if change:
                inner += path_cost(problem, key[0], key[1]) * change
        if inner < 0:
            return False
    return True


def verify_bs(problem: Problem, flow: Flow, extended: Optional[ExtendedGraph] = None) -> bool:
    """
    Équilibre au sens des coûts discontinus de G′ :
    c_{i,p}(f) ≤ liminf_{ε↓0} c_{i,q}(f_{i,p→q}(ε)) pour tout p utilisé et tout q.

    La limite inférieure vaut M sur une montée e de q ssi
    (e⁺ ∉ p et f_{e⁺} ≥ ν) ou (e⁺ ∈ p et f_{e⁺} > ν).
    """
    if demand_violations(problem, flow) or capacity_violations(problem, flow):
        return False
    extended = extended or extend_problem(problem)
    graph = problem.graph
    for commodity_id, path in _used_in_order(problem, flow):
        own = extended.strategy_cost(commodity_id, path, flow)
        shared = set(path)
        penalties = {}
        for edge_id, load in flow.loads.items():
            capacity = graph.edges[edge_id].capacity
            if capacity is None:
                continue
            if (edge_id not in shared and load >= capacity) or load > capacity:
                penalties[graph.boarding_of[edge_id]] = extended.big_m
        _, lowest = shortest_strategy(problem, commodity_id, extra=penalties)
        if own > lowest:
            return False
    return True
