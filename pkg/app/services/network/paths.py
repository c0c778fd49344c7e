from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from app.core.exceptions import InvalidStrategyError, PathEnumerationOverflow
from app.models.flow import OUTSIDE, Path, is_outside
from app.models.instance import Problem
from app.models.network import EdgeKind, NodeKind, TimeExpandedGraph
from app.services.demand.costs import arrival_cost

ZERO = Fraction(0)

Leg = Tuple[str, str, str]


def start_node(graph: TimeExpandedGraph, path: Path) -> int:
    return graph.edges[path[0]].tail


def end_node(graph: TimeExpandedGraph, path: Path) -> int:
    return graph.edges[path[-1]].head


def start_time(graph: TimeExpandedGraph, path: Path) -> int:
    return graph.time(start_node(graph, path))


def arrival_time(graph: TimeExpandedGraph, path: Path) -> int:
    return graph.time(end_node(graph, path))


def travel_time(graph: TimeExpandedGraph, path: Path) -> int:
    return arrival_time(graph, path) - start_time(graph, path)


def driving_edges(graph: TimeExpandedGraph, path: Path) -> Tuple[int, ...]:
    return tuple(e for e in path if graph.edges[e].kind == EdgeKind.DRIVING)


def boarding_edges(graph: TimeExpandedGraph, path: Path) -> Tuple[int, ...]:
    return tuple(e for e in path if graph.edges[e].kind == EdgeKind.BOARDING)


def validate_strategy(problem: Problem, commodity_id: str, path: Path) -> None:
    """Lève InvalidStrategyError si `path` n'est pas une stratégie de la commodité."""
    if is_outside(path):
        return
    graph = problem.graph
    for e in path:
        if not 0 <= e < len(graph.edges):
            raise InvalidStrategyError(f"Arête inconnue {e} dans la stratégie de {commodity_id!r}")
    for before, after in zip(path, path[1:]):
        if graph.edges[before].head != graph.edges[after].tail:
            raise InvalidStrategyError(
                f"Stratégie non connexe pour {commodity_id!r} entre les arêtes {before} et {after}"
            )
    if start_node(graph, path) not in problem.starts(commodity_id):
        raise InvalidStrategyError(f"Départ non admissible pour {commodity_id!r}")
    if end_node(graph, path) not in problem.destinations(commodity_id):
        raise InvalidStrategyError(f"La stratégie de {commodity_id!r} ne finit pas à destination")


def shortest_strategy(
    problem: Problem,
    commodity_id: str,
    blocked_edges: FrozenSet[int] = frozenset(),
    extra: Optional[Mapping[int, Fraction]] = None,
    tie_rank: Optional[Mapping[int, int]] = None,
    allow_outside: bool = True,
) -> Optional[Tuple[Path, Fraction]]:
    """
    Stratégie de coût minimal par programmation dynamique sur le DAG.

    Args:
        blocked_edges: arêtes de base interdites
        extra: poids ajoutés au coût β·τ_e de certaines arêtes
        tie_rank: rang des arêtes pour départager les égalités (sinon identifiants)
        allow_outside: l'option extérieure est candidate ; elle ne gagne qu'en
            étant strictement moins chère

    Returns:
        (stratégie, valeur) ou None si aucune stratégie n'existe et que
        l'option extérieure est exclue.
    """
    graph = problem.graph
    commodity = problem.commodity(commodity_id)
    starts = problem.starts(commodity_id)
    labels: Dict[int, Tuple[Fraction, tuple, Path]] = {s: (ZERO, (), OUTSIDE) for s in starts}

    if starts:
        for node_id in range(min(starts), len(graph.nodes)):
            label = labels.get(node_id)
            if label is None:
                continue
            cost, rank, path = label
            for edge_id in graph.out_edges[node_id]:
                if edge_id in blocked_edges:
                    continue
                edge = graph.edges[edge_id]
                weight = cost + commodity.beta * edge.tau
                if extra:
                    weight += extra.get(edge_id, ZERO)
                new_path = path + (edge_id,)
                new_rank = rank + (tie_rank[edge_id],) if tie_rank is not None else new_path
                current = labels.get(edge.head)
                if current is None or (weight, new_rank) < (current[0], current[1]):
                    labels[edge.head] = (weight, new_rank, new_path)

    best = None
    for node_id in problem.destinations(commodity_id):
        label = labels.get(node_id)
        if label is None or not label[2]:
            continue
        time = graph.time(node_id)
        total = label[0] + arrival_cost(commodity, time)
        key = (total, time, label[1])
        if best is None or key < best[0]:
            best = (key, label[2])

    if allow_outside and (best is None or commodity.outside_cost < best[0][0]):
        return OUTSIDE, commodity.outside_cost
    if best is None:
        return None
    return best[1], best[0][0]


def _can_reach_destination(graph: TimeExpandedGraph, targets: Sequence[int]) -> List[bool]:
    reach = [False] * len(graph.nodes)
    for node_id in targets:
        reach[node_id] = True
    for node_id in range(len(graph.nodes) - 1, -1, -1):
        if reach[node_id]:
            continue
        reach[node_id] = any(reach[graph.edges[e].head] for e in graph.out_edges[node_id])
    return reach


def enumerate_strategies(problem: Problem, commodity_id: str, cap: int) -> List[Path]:
    """
    Énumère toutes les stratégies d'une commodité, option extérieure en tête.

    Raises:
        PathEnumerationOverflow: plus de `cap` stratégies.
    """
    graph = problem.graph
    destinations = set(problem.destinations(commodity_id))
    reach = _can_reach_destination(graph, list(destinations))
    strategies: List[Path] = []
    stack: List[Tuple[int, Path]] = [(s, OUTSIDE) for s in problem.starts(commodity_id) if reach[s]]
    while stack:
        node_id, path = stack.pop()
        if path and node_id in destinations:
            strategies.append(path)
            if len(strategies) + 1 > cap:
                raise PathEnumerationOverflow(cap)
        for edge_id in graph.out_edges[node_id]:
            head = graph.edges[edge_id].head
            if reach[head]:
                stack.append((head, path + (edge_id,)))
    strategies.sort()
    return [OUTSIDE] + strategies


def waiting_walk(graph: TimeExpandedGraph, source: int, target: int) -> Path:
    """Arêtes d'attente de `source` à `target`, deux quais de la même station."""
    walk: List[int] = []
    current = source
    while current != target:
        step = next(
            (e for e in graph.out_edges[current] if graph.edges[e].kind == EdgeKind.WAITING),
            None,
        )
        if step is None or graph.time(current) > graph.time(target):
            raise InvalidStrategyError(
                f"Impossible d'attendre de {graph.nodes[source].label()} à {graph.nodes[target].label()}"
            )
        walk.append(step)
        current = graph.edges[step].head
    return tuple(walk)


def itinerary(
    graph: TimeExpandedGraph,
    origin: str,
    start: int,
    legs: Sequence[Leg],
    end: Optional[int] = None,
) -> Path:
    """
    Construit une stratégie à partir d'étapes lisibles.

    Args:
        origin: station de départ
        start: instant du quai de départ
        legs: étapes (course, station de montée, station de descente) ; chaque
            étape prend la première occurrence de la station après l'instant courant
        end: instant final d'attente à destination, facultatif

    Returns:
        La suite d'identifiants d'arêtes.
    """
    vehicle_nodes = {
        (node.kind, node.trip, node.stop_index): node.id
        for node in graph.nodes
        if node.kind != NodeKind.ON_PLATFORM
    }
    trips = {trip.id: trip for trip in graph.trips}
    current = graph.platform_index.get((origin, start))
    if current is None:
        raise InvalidStrategyError(f"Pas de quai {origin}@{start}")
    path: List[int] = []
    station = origin
    for trip_id, board_at, alight_at in legs:
        if board_at != station:
            raise InvalidStrategyError(f"Étape {trip_id} : montée à {board_at} mais position {station}")
        trip = trips[trip_id]
        now = graph.time(current)
        k = next(
            k
            for k, stop in enumerate(trip.stops[:-1])
            if stop.station == board_at and stop.departure >= now
        )
        platform = graph.platform_index[(board_at, trip.stops[k].departure)]
        path.extend(waiting_walk(graph, current, platform))
        departure = vehicle_nodes[(NodeKind.DEPARTURE, trip_id, k)]
        path.append(graph.find_edge(platform, departure))
        m = next(m for m in range(k + 1, len(trip.stops)) if trip.stops[m].station == alight_at)
        for j in range(k, m):
            departure = vehicle_nodes[(NodeKind.DEPARTURE, trip_id, j)]
            arrival = vehicle_nodes[(NodeKind.ARRIVAL, trip_id, j + 1)]
            path.append(graph.find_edge(departure, arrival))
            if j + 1 < m:
                following = vehicle_nodes[(NodeKind.DEPARTURE, trip_id, j + 1)]
                path.append(graph.find_edge(arrival, following))
        arrival = vehicle_nodes[(NodeKind.ARRIVAL, trip_id, m)]
        current = graph.platform_index[(alight_at, trip.stops[m].arrival)]
        path.append(graph.find_edge(arrival, current))
        station = alight_at
    if end is not None:
        path.extend(waiting_walk(graph, current, graph.platform_index[(station, end)]))
    return tuple(path)
