from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Set, Tuple

from app.models.demand import Commodity, Group
from app.models.flow import Path, is_outside
from app.models.instance import Problem
from app.models.network import TimeExpandedGraph
from app.utils.logs import logger


def arrival_cost(commodity: Commodity, time: int) -> Fraction:
    """Pénalité d'arrivée γ⁺·max(0, t − T) + γ⁻·max(0, T − t)."""
    late = max(0, time - commodity.target)
    early = max(0, commodity.target - time)
    return commodity.gamma_late * late + commodity.gamma_early * early


def cost_of_times(commodity: Commodity, start: int, arrival: int) -> Fraction:
    return commodity.beta * (arrival - start) + arrival_cost(commodity, arrival)


def path_cost(problem: Problem, commodity_id: str, path: Path, validate: bool = False) -> Fraction:
    """
    Coût π_{i,p} d'une stratégie ; l'option extérieure coûte π_ô.

    Args:
        validate: vérifie d'abord que `path` est une stratégie de la commodité
    """
    commodity = problem.commodity(commodity_id)
    if is_outside(path):
        return commodity.outside_cost
    if validate:
        from app.services.network.paths import validate_strategy

        validate_strategy(problem, commodity_id, path)
    graph = problem.graph
    start = graph.time(graph.edges[path[0]].tail)
    arrival = graph.time(graph.edges[path[-1]].head)
    return cost_of_times(commodity, start, arrival)


@dataclass(frozen=True)
class DistinctCosts:
    values: Tuple[Fraction, ...]
    truncated: bool


def enumerate_distinct_costs(group: Group, graph: TimeExpandedGraph, cap: int = 10_000) -> DistinctCosts:
    """
    Ensemble trié des coûts distincts des stratégies d'un groupe.

    Le coût ne dépend que des instants de départ et d'arrivée : on propage
    l'ensemble des instants de départ atteignant chaque nœud.
    """
    if cap < 1:
        raise ValueError("Le plafond doit être au moins 1")
    platforms = graph.platforms.get(group.origin, ())
    reached: List[Set[int]] = [set() for _ in graph.nodes]
    for node_id in platforms:
        if graph.time(node_id) in group.window:
            reached[node_id].add(graph.time(node_id))
    for node_id in range(len(graph.nodes)):
        if not reached[node_id]:
            continue
        for edge_id in graph.out_edges[node_id]:
            reached[graph.edges[edge_id].head] |= reached[node_id]

    commodity_view = Commodity(
        id=group.id,
        origin=group.origin,
        destination=group.destination,
        window=group.window,
        target=group.target,
        beta=group.beta,
        gamma_late=group.gamma_late,
        gamma_early=group.gamma_early,
        demand=Fraction(0),
        outside_cost=Fraction(0),
    )
    values: Set[Fraction] = set()
    for node_id in graph.platforms.get(group.destination, ()):
        arrival = graph.time(node_id)
        for start in reached[node_id]:
            values.add(cost_of_times(commodity_view, start, arrival))
    ordered = sorted(values)
    if len(ordered) > cap:
        logger.warning(f"⚠️ Coûts distincts tronqués à {cap} pour le groupe {group.id}")
        return DistinctCosts(tuple(ordered[:cap]), True)
    return DistinctCosts(tuple(ordered), False)


def discretize_elastic(group: Group, costs: Sequence[Fraction]) -> List[Commodity]:
    """
    Découpe un groupe élastique en commodités de demande fixe.

    La bande j reçoit Q(π_{j−1}) − Q(π_j), avec π_0 = 0 et π_{k+1} = π_max ;
    son option extérieure coûte le milieu de ]π_{j−1}, π_j[.
    Les bandes de demande nulle sont supprimées.
    """
    for before, after in zip(costs, costs[1:]):
        if after <= before:
            raise ValueError("Les coûts doivent être strictement croissants")
    curve = group.curve
    bounds = [Fraction(0)] + list(costs) + [curve.max_cost]
    commodities: List[Commodity] = []
    for j in range(1, len(bounds)):
        low, high = bounds[j - 1], bounds[j]
        demand = curve.value(low) - curve.value(high)
        if demand <= 0:
            continue
        commodities.append(
            Commodity(
                id=f"{group.id}#{j}",
                origin=group.origin,
                destination=group.destination,
                window=group.window,
                target=group.target,
                beta=group.beta,
                gamma_late=group.gamma_late,
                gamma_early=group.gamma_early,
                demand=demand,
                outside_cost=(low + high) / 2,
            )
        )
    logger.debug(f"Groupe {group.id} : {len(commodities)} commodités après discrétisation")
    return commodities
