from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple


class NodeKind(str, Enum):
    ON_PLATFORM = "on_platform"
    DEPARTURE = "departure"
    ARRIVAL = "arrival"


class EdgeKind(str, Enum):
    WAITING = "waiting"
    BOARDING = "boarding"
    DRIVING = "driving"
    ALIGHTING = "alighting"
    DWELLING = "dwelling"


# Rang d'un type de nœud dans l'ordre canonique, à temps égal
KIND_RANK = {
    NodeKind.ARRIVAL: 0,
    NodeKind.ON_PLATFORM: 1,
    NodeKind.DEPARTURE: 2,
}


@dataclass(frozen=True)
class Station:
    id: str
    name: str = ""


@dataclass(frozen=True)
class Stop:
    station: str
    arrival: Optional[int] = None
    departure: Optional[int] = None


@dataclass(frozen=True)
class Trip:
    id: str
    capacity: Fraction
    stops: Tuple[Stop, ...]

    def shifted(self, offset: int, suffix: str) -> "Trip":
        """Copie de la course décalée de `offset` secondes."""
        stops = tuple(
            Stop(
                station=stop.station,
                arrival=None if stop.arrival is None else stop.arrival + offset,
                departure=None if stop.departure is None else stop.departure + offset,
            )
            for stop in self.stops
        )
        return Trip(id=f"{self.id}{suffix}", capacity=self.capacity, stops=stops)


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    station: str
    time: int
    trip: Optional[str] = None
    stop_index: Optional[int] = None

    def label(self) -> str:
        if self.kind == NodeKind.ON_PLATFORM:
            return f"{self.station}@{self.time}"
        return f"{self.kind.value}:{self.trip}#{self.stop_index}@{self.time}"


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    kind: EdgeKind
    tau: int
    capacity: Optional[Fraction] = None
    trip: Optional[str] = None


@dataclass
class TimeExpandedGraph:
    """
    Graphe espace-temps acyclique.

    Les identifiants des nœuds suivent l'ordre canonique, qui est topologique ;
    ceux des arêtes suivent l'ordre (queue, tête).
    """

    stations: Tuple[Station, ...]
    trips: Tuple[Trip, ...]
    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]
    out_edges: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)
    in_edges: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)
    successor: Dict[int, int] = field(init=False, repr=False)
    boarding_of: Dict[int, int] = field(init=False, repr=False)
    previous_driving: Dict[int, Optional[int]] = field(init=False, repr=False)
    platforms: Dict[str, Tuple[int, ...]] = field(init=False, repr=False)
    platform_index: Dict[Tuple[str, int], int] = field(init=False, repr=False)

    def __post_init__(self):
        out_edges: List[List[int]] = [[] for _ in self.nodes]
        in_edges: List[List[int]] = [[] for _ in self.nodes]
        for edge in self.edges:
            out_edges[edge.tail].append(edge.id)
            in_edges[edge.head].append(edge.id)
        self.out_edges = tuple(tuple(ids) for ids in out_edges)
        self.in_edges = tuple(tuple(ids) for ids in in_edges)

        # e ↦ e⁺ : chaque nœud de départ a exactement une arête sortante de conduite
        driving_from = {
            edge.tail: edge.id for edge in self.edges if edge.kind == EdgeKind.DRIVING
        }
        self.successor = {
            edge.id: driving_from[edge.head]
            for edge in self.edges
            if edge.kind == EdgeKind.BOARDING
        }
        self.boarding_of = {driving: boarding for boarding, driving in self.successor.items()}

        self.previous_driving = {}
        for edge in self.edges:
            if edge.kind != EdgeKind.DRIVING:
                continue
            previous = None
            for in_id in self.in_edges[edge.tail]:
                if self.edges[in_id].kind != EdgeKind.DWELLING:
                    continue
                arrival = self.edges[in_id].tail
                previous = next(
                    e for e in self.in_edges[arrival] if self.edges[e].kind == EdgeKind.DRIVING
                )
            self.previous_driving[edge.id] = previous

        platforms: Dict[str, List[int]] = {station.id: [] for station in self.stations}
        self.platform_index = {}
        for node in self.nodes:
            if node.kind == NodeKind.ON_PLATFORM:
                platforms.setdefault(node.station, []).append(node.id)
                self.platform_index[(node.station, node.time)] = node.id
        self.platforms = {
            station: tuple(sorted(ids, key=lambda n: self.nodes[n].time))
            for station, ids in platforms.items()
        }

    @property
    def driving_edges(self) -> Tuple[int, ...]:
        return tuple(e.id for e in self.edges if e.kind == EdgeKind.DRIVING)

    @property
    def boarding_edges(self) -> Tuple[int, ...]:
        return tuple(e.id for e in self.edges if e.kind == EdgeKind.BOARDING)

    def time(self, node_id: int) -> int:
        return self.nodes[node_id].time

    def edge(self, edge_id: int) -> Edge:
        return self.edges[edge_id]

    def is_boarding(self, edge_id: int) -> bool:
        return self.edges[edge_id].kind == EdgeKind.BOARDING

    def is_driving(self, edge_id: int) -> bool:
        return self.edges[edge_id].kind == EdgeKind.DRIVING

    def capacity(self, edge_id: int) -> Fraction:
        capacity = self.edges[edge_id].capacity
        if capacity is None:
            raise ValueError(f"L'arête {edge_id} n'est pas une arête de conduite")
        return capacity

    def find_edge(self, tail: int, head: int) -> Optional[int]:
        for edge_id in self.out_edges[tail]:
            if self.edges[edge_id].head == head:
                return edge_id
        return None

    def count_by_kind(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for node in self.nodes:
            counts[node.kind.value] = counts.get(node.kind.value, 0) + 1
        for edge in self.edges:
            counts[edge.kind.value] = counts.get(edge.kind.value, 0) + 1
        return counts
