from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from app.models.demand import Commodity
from app.models.flow import Flow, Path, is_outside
from app.models.instance import Problem
from app.models.network import EdgeKind, TimeExpandedGraph
from app.services.demand.costs import arrival_cost
from app.utils.logs import logger


class ExtendedEdgeKind(str, Enum):
    SOURCE = "source"
    SINK = "sink"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class ExtendedEdge:
    id: int
    tail: int
    head: int
    kind: ExtendedEdgeKind
    commodity: str


@dataclass
class ExtendedGraph:
    """
    Graphe G′ : graphe de base plus, par commodité, une source α_i, un puits ω_i
    et une arête extérieure (α_i, ω_i).

    Les arêtes de base gardent leurs identifiants ; les arêtes ajoutées suivent.
    """

    problem: Problem
    extra_edges: Tuple[ExtendedEdge, ...]
    big_m: Fraction
    alpha: Dict[str, int] = field(default_factory=dict)
    omega: Dict[str, int] = field(default_factory=dict)
    source_edges: Dict[str, Dict[int, int]] = field(default_factory=dict)
    sink_edges: Dict[str, Dict[int, int]] = field(default_factory=dict)
    outside_edge: Dict[str, int] = field(default_factory=dict)

    @property
    def base(self) -> TimeExpandedGraph:
        return self.problem.graph

    @property
    def node_count(self) -> int:
        return len(self.base.nodes) + 2 * len(self.problem.commodities)

    @property
    def edge_count(self) -> int:
        return len(self.base.edges) + len(self.extra_edges)

    def extended_edge(self, edge_id: int) -> ExtendedEdge:
        return self.extra_edges[edge_id - len(self.base.edges)]

    def strategy_edges(self, commodity_id: str, path: Path) -> List[int]:
        """Arêtes de G′ du chemin α_i-ω_i correspondant à la stratégie."""
        if is_outside(path):
            return [self.outside_edge[commodity_id]]
        graph = self.base
        first = graph.edges[path[0]].tail
        last = graph.edges[path[-1]].head
        return (
            [self.source_edges[commodity_id][first]]
            + list(path)
            + [self.sink_edges[commodity_id][last]]
        )

    def edge_cost(self, commodity_id: str, edge_id: int, flow: Flow) -> Fraction:
        """Coût discontinu c_{i,e}(f)."""
        graph = self.base
        commodity = self.problem.commodity(commodity_id)
        if edge_id < len(graph.edges):
            edge = graph.edges[edge_id]
            if edge.kind == EdgeKind.BOARDING:
                driving = graph.successor[edge_id]
                if flow.load(driving) <= graph.capacity(driving):
                    return Fraction(0)
                return self.big_m
            return commodity.beta * edge.tau
        extended = self.extended_edge(edge_id)
        owner = self.problem.commodity(extended.commodity)
        if extended.kind == ExtendedEdgeKind.SOURCE:
            return Fraction(0)
        if extended.kind == ExtendedEdgeKind.SINK:
            return arrival_cost(owner, graph.time(extended.tail))
        return owner.outside_cost

    def strategy_cost(self, commodity_id: str, path: Path, flow: Flow) -> Fraction:
        """c_{i,p}(f) = Σ_{e∈p} c_{i,e}(f)."""
        return sum(
            (self.edge_cost(commodity_id, e, flow) for e in self.strategy_edges(commodity_id, path)),
            Fraction(0),
        )


def _extreme_costs(problem: Problem, commodity: Commodity) -> Tuple[Optional[Fraction], Optional[Fraction]]:
    """Coûts minimal et maximal des stratégies (hors option extérieure), par DP sur le DAG."""
    graph = problem.graph
    starts = problem.starts(commodity.id)
    if not starts:
        return None, None
    low: Dict[int, Fraction] = {s: Fraction(0) for s in starts}
    high: Dict[int, Fraction] = {s: Fraction(0) for s in starts}
    for node_id in range(min(starts), len(graph.nodes)):
        if node_id not in low:
            continue
        for edge_id in graph.out_edges[node_id]:
            edge = graph.edges[edge_id]
            weight = commodity.beta * edge.tau
            head = edge.head
            if head not in low or low[node_id] + weight < low[head]:
                low[head] = low[node_id] + weight
            if head not in high or high[node_id] + weight > high[head]:
                high[head] = high[node_id] + weight
    totals_low = []
    totals_high = []
    for node_id in problem.destinations(commodity.id):
        if node_id in low:
            penalty = arrival_cost(commodity, graph.time(node_id))
            totals_low.append(low[node_id] + penalty)
            totals_high.append(high[node_id] + penalty)
    if not totals_low:
        return None, None
    return min(totals_low), max(totals_high)


def compute_big_m(problem: Problem) -> Fraction:
    """M = max π − min(0, min π) + 1, bornes prises sur toutes les stratégies et options extérieures."""
    highest = Fraction(0)
    lowest = Fraction(0)
    for commodity in problem.commodities:
        highest = max(highest, commodity.outside_cost)
        lowest = min(lowest, commodity.outside_cost)
        low, high = _extreme_costs(problem, commodity)
        if high is not None:
            highest = max(highest, high)
            lowest = min(lowest, low)
    return highest - lowest + 1


def extend_graph(graph: TimeExpandedGraph, commodities: Sequence[Commodity]) -> ExtendedGraph:
    """
    Construit G′ pour les commodités données.

    Args:
        graph: graphe espace-temps de base
        commodities: commodités ; sans commodité, G′ se réduit au graphe de base

    Returns:
        Le graphe étendu avec sa constante M.
    """
    problem = Problem(graph=graph, commodities=tuple(commodities))
    next_node = len(graph.nodes)
    next_edge = len(graph.edges)
    extra: List[ExtendedEdge] = []
    extended = ExtendedGraph(problem=problem, extra_edges=(), big_m=compute_big_m(problem))
    for commodity in problem.commodities:
        alpha, omega = next_node, next_node + 1
        next_node += 2
        extended.alpha[commodity.id] = alpha
        extended.omega[commodity.id] = omega
        extended.source_edges[commodity.id] = {}
        extended.sink_edges[commodity.id] = {}
        for node_id in problem.starts(commodity.id):
            extra.append(ExtendedEdge(next_edge, alpha, node_id, ExtendedEdgeKind.SOURCE, commodity.id))
            extended.source_edges[commodity.id][node_id] = next_edge
            next_edge += 1
        for node_id in problem.destinations(commodity.id):
            extra.append(ExtendedEdge(next_edge, node_id, omega, ExtendedEdgeKind.SINK, commodity.id))
            extended.sink_edges[commodity.id][node_id] = next_edge
            next_edge += 1
        extra.append(ExtendedEdge(next_edge, alpha, omega, ExtendedEdgeKind.OUTSIDE, commodity.id))
        extended.outside_edge[commodity.id] = next_edge
        next_edge += 1
    extended.extra_edges = tuple(extra)
    logger.debug(f"Graphe étendu : {len(extra)} arêtes ajoutées, M = {extended.big_m}")
    return extended


def extend_problem(problem: Problem) -> ExtendedGraph:
    return extend_graph(problem.graph, problem.commodities)
