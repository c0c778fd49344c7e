from fractions import Fraction
from typing import FrozenSet, Mapping, Optional, Tuple

from app.core.exceptions import DeviationError
from app.models.flow import Flow, Path
from app.models.instance import Problem
from app.services.network.paths import boarding_edges, shortest_strategy


def deviate(flow: Flow, commodity_id: str, source: Path, target: Path, epsilon: Fraction) -> Flow:
    """Flot f_{i,p→q}(ε) : déplace ε de la stratégie `source` vers `target`."""
    if epsilon <= 0:
        raise DeviationError(f"ε doit être strictement positif (reçu {epsilon})")
    available = flow.value(commodity_id, source)
    if epsilon > available:
        raise DeviationError(
            f"ε = {epsilon} dépasse le volume {available} de la stratégie déviée ({commodity_id})"
        )
    if source == target:
        return flow
    return flow.apply({(commodity_id, source): -epsilon, (commodity_id, target): epsilon})


def is_admissible(
    problem: Problem, flow: Flow, commodity_id: str, source: Path, target: Path, epsilon: Fraction
) -> bool:
    """Vrai si aucune arête de montée de `target` ne surcharge son véhicule après la déviation."""
    graph = problem.graph
    deviated = deviate(flow, commodity_id, source, target, epsilon)
    return all(
        deviated.load(graph.successor[e]) <= graph.capacity(graph.successor[e])
        for e in boarding_edges(graph, target)
    )


def is_available(problem: Problem, flow: Flow, commodity_id: str, source: Path, target: Path) -> bool:
    """
    Forme prédicat de l'admissibilité pour ε assez petit : chaque montée de
    `target` vérifie f_{e⁺} ≤ ν si e⁺ ∈ source, f_{e⁺} < ν sinon.
    """
    graph = problem.graph
    shared = set(source)
    for e in boarding_edges(graph, target):
        driving = graph.successor[e]
        load, capacity = flow.load(driving), graph.capacity(driving)
        if driving in shared:
            if load > capacity:
                return False
        elif load >= capacity:
            return False
    return True


def blocked_boardings(problem: Problem, flow: Flow, path: Path) -> FrozenSet[int]:
    """Montées interdites pour une déviation depuis `path`."""
    graph = problem.graph
    shared = set(path)
    blocked = set()
    for edge_id, load in flow.loads.items():
        edge = graph.edges[edge_id]
        if edge.capacity is None or load < edge.capacity:
            continue
        if edge_id not in shared or load > edge.capacity:
            blocked.add(graph.boarding_of[edge_id])
    return frozenset(blocked)


def best_available_alternative(
    problem: Problem,
    flow: Flow,
    commodity_id: str,
    path: Path,
    tie_rank: Optional[Mapping[int, int]] = None,
) -> Tuple[Path, Fraction]:
    """
    Meilleure alternative disponible q* et son coût π*_{i,p}(f).

    L'option extérieure est toujours disponible ; `path` lui-même l'est
    lorsque le flot est réalisable.
    """
    blocked = blocked_boardings(problem, flow, path)
    return shortest_strategy(problem, commodity_id, blocked_edges=blocked, tie_rank=tie_rank)
