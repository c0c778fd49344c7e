from typing import Dict, List, Sequence, Tuple

import networkx as nx

from app.core.exceptions import InvalidTripError, UnknownStationError
from app.models.network import (
    KIND_RANK,
    Edge,
    EdgeKind,
    Node,
    NodeKind,
    Station,
    TimeExpandedGraph,
    Trip,
)
from app.utils.logs import logger

NodeKey = Tuple[NodeKind, str, int, str, int]


def validate_trip(trip: Trip, known_stations: set) -> None:
    """Vérifie l'ordre temporel et les stations d'une course."""
    if trip.capacity <= 0:
        raise InvalidTripError(trip.id, f"capacité non positive ({trip.capacity})")
    if len(trip.stops) < 2:
        raise InvalidTripError(trip.id, "au moins deux arrêts sont nécessaires")
    last = len(trip.stops) - 1
    for k, stop in enumerate(trip.stops):
        if stop.station not in known_stations:
            raise InvalidTripError(trip.id, f"station inconnue {stop.station!r} à l'arrêt {k}")
        if k < last and stop.departure is None:
            raise InvalidTripError(trip.id, f"heure de départ manquante à l'arrêt {k}")
        if k > 0 and stop.arrival is None:
            raise InvalidTripError(trip.id, f"heure d'arrivée manquante à l'arrêt {k}")
        if 0 < k < last and stop.departure < stop.arrival:
            raise InvalidTripError(trip.id, f"départ avant l'arrivée à l'arrêt {k}")
        if k > 0:
            previous = trip.stops[k - 1].departure
            if stop.arrival <= previous:
                raise InvalidTripError(
                    trip.id, f"arrivée à l'arrêt {k} non postérieure au départ précédent"
                )


def _node_sort_key(key: NodeKey):
    kind, station, time, trip, stop_index = key
    return (time, KIND_RANK[kind], station, trip, stop_index)


def build_time_expanded(stations: Sequence[Station], trips: Sequence[Trip]) -> TimeExpandedGraph:
    """
    Construit le graphe espace-temps des courses.

    Args:
        stations: stations de l'instance (identifiants uniques)
        trips: courses validées contre les stations

    Returns:
        Le graphe, avec identifiants canoniques des nœuds et des arêtes.
    """
    station_ids = [s.id for s in stations]
    if len(set(station_ids)) != len(station_ids):
        duplicates = sorted({s for s in station_ids if station_ids.count(s) > 1})
        raise UnknownStationError(duplicates[0], "identifiant dupliqué")
    known = set(station_ids)
    trip_ids = set()
    for trip in trips:
        if trip.id in trip_ids:
            raise InvalidTripError(trip.id, "identifiant dupliqué")
        trip_ids.add(trip.id)
        validate_trip(trip, known)

    keys: set = set()
    # (queue, tête, type, capacité, course) exprimés en clés de nœuds
    raw_edges: List[Tuple[NodeKey, NodeKey, EdgeKind, object, str]] = []
    for trip in trips:
        last = len(trip.stops) - 1
        for k, stop in enumerate(trip.stops):
            if k < last:
                platform = (NodeKind.ON_PLATFORM, stop.station, stop.departure, "", -1)
                departure = (NodeKind.DEPARTURE, stop.station, stop.departure, trip.id, k)
                keys.update((platform, departure))
                raw_edges.append((platform, departure, EdgeKind.BOARDING, None, trip.id))
            if k > 0:
                platform = (NodeKind.ON_PLATFORM, stop.station, stop.arrival, "", -1)
                arrival = (NodeKind.ARRIVAL, stop.station, stop.arrival, trip.id, k)
                keys.update((platform, arrival))
                raw_edges.append((arrival, platform, EdgeKind.ALIGHTING, None, trip.id))
            if 0 < k < last:
                arrival = (NodeKind.ARRIVAL, stop.station, stop.arrival, trip.id, k)
                departure = (NodeKind.DEPARTURE, stop.station, stop.departure, trip.id, k)
                raw_edges.append((arrival, departure, EdgeKind.DWELLING, None, trip.id))
            if k < last:
                following = trip.stops[k + 1]
                departure = (NodeKind.DEPARTURE, stop.station, stop.departure, trip.id, k)
                arrival = (NodeKind.ARRIVAL, following.station, following.arrival, trip.id, k + 1)
                raw_edges.append((departure, arrival, EdgeKind.DRIVING, trip.capacity, trip.id))

    platform_times: Dict[str, List[int]] = {}
    for kind, station, time, _, _ in keys:
        if kind == NodeKind.ON_PLATFORM:
            platform_times.setdefault(station, []).append(time)
    for station, times in platform_times.items():
        times.sort()
        for before, after in zip(times, times[1:]):
            raw_edges.append(
                (
                    (NodeKind.ON_PLATFORM, station, before, "", -1),
                    (NodeKind.ON_PLATFORM, station, after, "", -1),
                    EdgeKind.WAITING,
                    None,
                    None,
                )
            )

    ordered = sorted(keys, key=_node_sort_key)
    node_ids = {key: position for position, key in enumerate(ordered)}
    nodes = tuple(
        Node(
            id=node_ids[key],
            kind=key[0],
            station=key[1],
            time=key[2],
            trip=key[3] or None,
            stop_index=None if key[4] < 0 else key[4],
        )
        for key in ordered
    )

    numbered = sorted(
        ((node_ids[tail], node_ids[head], kind, capacity, trip) for tail, head, kind, capacity, trip in raw_edges),
        key=lambda item: (item[0], item[1]),
    )
    edges = tuple(
        Edge(
            id=position,
            tail=tail,
            head=head,
            kind=kind,
            tau=nodes[head].time - nodes[tail].time,
            capacity=capacity,
            trip=trip,
        )
        for position, (tail, head, kind, capacity, trip) in enumerate(numbered)
    )

    graph = TimeExpandedGraph(
        stations=tuple(stations), trips=tuple(trips), nodes=nodes, edges=edges
    )
    if not nx.is_directed_acyclic_graph(to_networkx(graph)):
        raise RuntimeError("Le graphe espace-temps contient un cycle")
    logger.debug(f"Graphe construit : {len(nodes)} nœuds, {len(edges)} arêtes")
    return graph


def unroll_periodic(templates: Sequence[Trip], period: int, horizon: Tuple[int, int]) -> List[Trip]:
    """
    Déroule des courses périodiques sur l'horizon [start, end).

    Une copie par décalage k dont le premier départ tombe dans l'horizon ;
    les identifiants reçoivent le suffixe `@k`.
    """
    start, end = horizon
    if period <= 0:
        raise ValueError(f"Période non positive : {period}")
    if end <= start:
        raise ValueError(f"Horizon vide : [{start}, {end})")
    trips: List[Trip] = []
    for template in templates:
        first_departure = template.stops[0].departure
        if first_departure is None:
            raise InvalidTripError(template.id, "premier arrêt sans départ")
        # plafonds entiers exacts
        k_min = -((first_departure - start) // period)
        k_max = -((first_departure - end) // period) - 1
        for k in range(k_min, k_max + 1):
            trips.append(template.shifted(k * period, f"@{k}"))
    logger.info(f"Déroulage périodique : {len(templates)} modèles -> {len(trips)} courses")
    return trips


def to_networkx(graph: TimeExpandedGraph) -> nx.DiGraph:
    digraph = nx.DiGraph()
    for node in graph.nodes:
        digraph.add_node(node.id, kind=node.kind.value, station=node.station, time=node.time)
    for edge in graph.edges:
        digraph.add_edge(
            edge.tail,
            edge.head,
            id=edge.id,
            kind=edge.kind.value,
            tau=edge.tau,
            capacity=edge.capacity,
        )
    return digraph
