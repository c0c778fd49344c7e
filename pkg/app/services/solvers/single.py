from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

from app.core.exceptions import InvariantViolation, ReductionError
from app.models.demand import TimeWindow
from app.models.flow import OUTSIDE, Flow, Path, is_outside
from app.models.instance import Problem
from app.models.network import EdgeKind, Station, Stop, TimeExpandedGraph, Trip
from app.services.demand.costs import arrival_cost
from app.services.demand.departure import fdt_transform
from app.services.flow.verify import verify_equilibrium
from app.services.network.builder import build_time_expanded
from app.utils.logs import logger

SUPER_STATION = "__super__"


@dataclass(frozen=True)
class PriorityWitness:
    first: Path
    second: Path
    edge: int
    boarding_edge: int
    boarding_on_second: bool


@dataclass(frozen=True)
class SingleRound:
    path: Path
    delta: Fraction
    cost: Fraction
    end_node: int


def priority_witness(graph: TimeExpandedGraph, first: Path, second: Path) -> Optional[PriorityWitness]:
    """Premier arc de conflit des deux chemins : arête de conduite commune dont la montée n'est que sur l'un."""
    first_edges, second_edges = set(first), set(second)
    for edge_id in first:
        if edge_id not in second_edges or not graph.is_driving(edge_id):
            continue
        boarding = graph.boarding_of[edge_id]
        on_first, on_second = boarding in first_edges, boarding in second_edges
        if on_first != on_second:
            return PriorityWitness(first, second, edge_id, boarding, on_second)
    return None


def has_priority(graph: TimeExpandedGraph, first: Path, second: Path) -> bool:
    """p ≺ q : au premier arc de conflit, la montée est sur q."""
    witness = priority_witness(graph, first, second)
    return witness is not None and witness.boarding_on_second


def reachable_from(graph: TimeExpandedGraph, start: int, removed: Set[int]) -> Set[int]:
    seen = {start}
    stack = [start]
    while stack:
        node_id = stack.pop()
        for edge_id in graph.out_edges[node_id]:
            head = graph.edges[edge_id].head
            if head not in seen and head not in removed:
                seen.add(head)
                stack.append(head)
    return seen


def minimal_path(graph: TimeExpandedGraph, start: int, end: int, reachable: Set[int]) -> Path:
    """
    Chemin ≺-minimal de `start` à `end` par parcours arrière.

    On préfère un prédécesseur atteignable par une arête qui n'est pas une
    montée ; à défaut, une montée. Égalités : plus petit identifiant d'arête.
    """
    if end not in reachable:
        raise ValueError(f"Nœud {end} non atteignable")
    path: List[int] = []
    node_id = end
    while node_id != start:
        candidates = [e for e in graph.in_edges[node_id] if graph.edges[e].tail in reachable]
        plain = [e for e in candidates if graph.edges[e].kind != EdgeKind.BOARDING]
        chosen = min(plain) if plain else min(candidates)
        path.append(chosen)
        node_id = graph.edges[chosen].tail
    return tuple(reversed(path))


def solve_single(
    problem: Problem,
    check_invariants: bool = False,
    rounds: Optional[List[SingleRound]] = None,
) -> Flow:
    """
    Équilibre d'une instance mono-commodité par saturations successives.

    Args:
        problem: une seule commodité ; ramenée au départ fixe au préalable
        check_invariants: vérifie que chaque flot intermédiaire est un équilibre
        rounds: liste facultative recevant le détail de chaque tour

    Returns:
        Un équilibre utilisant au plus |E| stratégies.
    """
    if len(problem.commodities) != 1:
        raise ValueError(f"Instance mono-commodité attendue ({len(problem.commodities)} commodités)")
    transform = fdt_transform(problem)
    fixed = transform.problem
    commodity = fixed.commodities[0]
    graph = fixed.graph
    logger.info(f"=== DÉMARRAGE DU SOLVEUR MONO-COMMODITÉ ({commodity.id}) ===")

    flow = Flow()
    remaining = commodity.demand
    starts = fixed.starts(commodity.id)
    if remaining == 0:
        return flow
    if not starts:
        return flow.add(commodity.id, OUTSIDE, remaining)

    start = starts[0]
    residual: Dict[int, Fraction] = {e: graph.capacity(e) for e in graph.driving_edges}
    removed: Set[int] = set()
    while remaining > 0:
        reachable = reachable_from(graph, start, removed)
        candidates = [n for n in fixed.destinations(commodity.id) if n in reachable]
        best = min(
            candidates,
            key=lambda n: (arrival_cost(commodity, graph.time(n)), graph.time(n), n),
            default=None,
        )
        if best is None or arrival_cost(commodity, graph.time(best)) > commodity.outside_cost:
            flow = flow.add(commodity.id, OUTSIDE, remaining)
            logger.info(f"Demande résiduelle {remaining} envoyée sur l'option extérieure")
            break
        path = minimal_path(graph, start, best, reachable)
        driving = [e for e in path if graph.is_driving(e)]
        delta = min([residual[e] for e in driving] + [remaining])
        flow = flow.add(commodity.id, path, delta)
        remaining -= delta
        for edge_id in driving:
            residual[edge_id] -= delta
            if residual[edge_id] == 0:
                edge = graph.edges[edge_id]
                removed.update((edge.tail, edge.head))
        cost = arrival_cost(commodity, graph.time(best))
        if rounds is not None:
            rounds.append(SingleRound(path=path, delta=delta, cost=cost, end_node=best))
        logger.debug(f"Tour : δ = {delta}, coût π′ = {cost}, arrivée {graph.nodes[best].label()}")

        if check_invariants:
            partial = fixed.with_commodities([commodity.with_changes(demand=commodity.demand - remaining)])
            if not verify_equilibrium(partial, flow).ok:
                raise InvariantViolation("Flot intermédiaire qui n'est pas un équilibre")

    logger.info("=== SOLVEUR MONO-COMMODITÉ TERMINÉ ===")
    return flow


@dataclass
class SuperSourceReduction:
    """Instance mono-commodité équivalente à une instance à destination unique."""

    original: Problem
    reduced: Problem
    artificial_trips: Dict[str, str]
    edge_map: Dict[int, int]

    def map_back(self, flow: Flow) -> Flow:
        """Relit un flot de l'instance réduite comme un flot par commodité d'origine."""
        graph = self.reduced.graph
        items: List[Tuple[str, Path, Fraction]] = []
        routed: Dict[str, Fraction] = {c.id: Fraction(0) for c in self.original.commodities}
        owner_of = {trip: commodity for commodity, trip in self.artificial_trips.items()}
        for (_, path), value in flow.entries.items():
            if is_outside(path):
                continue
            commodity_id = owner_of[graph.edges[path[1]].trip]
            # montée, conduite artificielle, descente
            original_path = tuple(self.edge_map[e] for e in path[3:])
            items.append((commodity_id, original_path, value))
            routed[commodity_id] += value
        for commodity in self.original.commodities:
            rest = commodity.demand - routed[commodity.id]
            if rest:
                items.append((commodity.id, OUTSIDE, rest))
        return Flow.from_items(items)


def _edge_signature(graph: TimeExpandedGraph, edge_id: int):
    edge = graph.edges[edge_id]
    tail, head = graph.nodes[edge.tail], graph.nodes[edge.head]
    return (
        edge.kind,
        (tail.kind, tail.station, tail.time, tail.trip, tail.stop_index),
        (head.kind, head.station, head.time, head.trip, head.stop_index),
    )


def super_source_reduce(problem: Problem) -> SuperSourceReduction:
    """
    Réduit une instance à destination commune en une instance mono-commodité.

    Chaque commodité reçoit une course artificielle de capacité Q_i depuis la
    super-source jusqu'à son quai de départ θ′_i.

    Raises:
        ReductionError: destinations, coûts d'arrivée ou options extérieures différents.
    """
    transform = fdt_transform(problem)
    fixed = transform.problem
    if not fixed.commodities:
        raise ReductionError("Aucune commodité à réduire")
    reference = fixed.commodities[0]
    for commodity in fixed.commodities[1:]:
        signature = (commodity.destination, commodity.target, commodity.gamma_late,
                     commodity.gamma_early, commodity.outside_cost)
        expected = (reference.destination, reference.target, reference.gamma_late,
                    reference.gamma_early, reference.outside_cost)
        if signature != expected:
            raise ReductionError(
                f"La commodité {commodity.id!r} n'a pas la même destination ou le même coût d'arrivée"
            )
    graph = fixed.graph
    if any(station.id == SUPER_STATION for station in graph.stations):
        raise ReductionError(f"La station {SUPER_STATION!r} existe déjà")

    served = [
        c for c in fixed.commodities if transform.start_times[c.id] is not None and c.demand > 0
    ]
    times = [transform.start_times[c.id] for c in served]
    source_time = min(times) - 1 if times else 0
    artificial: Dict[str, str] = {}
    trips = list(graph.trips)
    for position, commodity in enumerate(served):
        trip_id = f"{SUPER_STATION}{position}"
        artificial[commodity.id] = trip_id
        trips.append(
            Trip(
                id=trip_id,
                capacity=commodity.demand,
                stops=(
                    Stop(station=SUPER_STATION, departure=source_time),
                    Stop(station=commodity.origin, arrival=transform.start_times[commodity.id]),
                ),
            )
        )
    reduced_graph = build_time_expanded(list(graph.stations) + [Station(SUPER_STATION)], trips)

    old_edges = {_edge_signature(graph, e.id): e.id for e in graph.edges}
    edge_map = {
        e.id: old_edges[_edge_signature(reduced_graph, e.id)]
        for e in reduced_graph.edges
        if _edge_signature(reduced_graph, e.id) in old_edges
    }
    merged = reference.with_changes(
        id=SUPER_STATION,
        origin=SUPER_STATION,
        window=TimeWindow.at(source_time),
        demand=sum((c.demand for c in served), Fraction(0)),
    )
    reduced = Problem(graph=reduced_graph, commodities=(merged,), name=problem.name)
    logger.info(f"Réduction super-source : {len(served)} commodités fusionnées")
    return SuperSourceReduction(
        original=problem, reduced=reduced, artificial_trips=artificial, edge_map=edge_map
    )


def solve_single_destination(problem: Problem, check_invariants: bool = False) -> Flow:
    """Équilibre d'une instance à destination unique via la super-source."""
    if len(problem.commodities) == 1:
        return solve_single(problem, check_invariants=check_invariants)
    reduction = super_source_reduce(problem)
    return reduction.map_back(solve_single(reduction.reduced, check_invariants=check_invariants))
