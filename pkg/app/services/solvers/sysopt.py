from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from app.core.exceptions import LPError
from app.models.flow import OUTSIDE, Flow, Path
from app.models.instance import Problem
from app.services.demand.costs import path_cost
from app.services.lp.simplex import LinearProgram, LPBackend, solve_lp
from app.services.network.paths import driving_edges, enumerate_strategies, shortest_strategy
from app.utils.logs import logger

ZERO = Fraction(0)


@dataclass(frozen=True)
class Column:
    commodity: str
    path: Path
    cost: Fraction
    driving: Tuple[int, ...]


@dataclass(frozen=True)
class PricingDuals:
    """Variables duales du maître : y_i par demande, u_e ≤ 0 par capacité."""

    demand: Mapping[str, Fraction]
    capacity: Mapping[int, Fraction] = field(default_factory=dict)


@dataclass
class RestrictedMaster:
    """Colonnes actives ; contient toujours l'option extérieure de chaque commodité."""

    problem: Problem
    capacities: Mapping[int, Fraction]
    demands: Mapping[str, Fraction]
    columns: List[Column] = field(default_factory=list)

    def __post_init__(self):
        self._known = {(c.commodity, c.path) for c in self.columns}

    def add(self, commodity_id: str, path: Path) -> bool:
        if (commodity_id, path) in self._known:
            return False
        graph = self.problem.graph
        self.columns.append(
            Column(commodity_id, path, path_cost(self.problem, commodity_id, path), driving_edges(graph, path))
        )
        self._known.add((commodity_id, path))
        return True

    def solve(self, backend: Optional[LPBackend] = None) -> Tuple[Flow, Fraction, PricingDuals]:
        commodities = self.problem.commodities
        edges = sorted({e for column in self.columns for e in column.driving})
        a_eq = [[Fraction(int(c.commodity == k.id)) for c in self.columns] for k in commodities]
        b_eq = [self.demands[k.id] for k in commodities]
        a_ub = [[Fraction(int(e in c.driving)) for c in self.columns] for e in edges]
        b_ub = [self.capacities[e] for e in edges]
        result = solve_lp(
            LinearProgram(c=[c.cost for c in self.columns], a_eq=a_eq, b_eq=b_eq, a_ub=a_ub, b_ub=b_ub),
            backend,
        )
        if not result.is_optimal:
            # les colonnes extérieures rendent le maître toujours réalisable
            raise LPError(f"Problème maître non résolu : {result.status.value}")
        items = [(c.commodity, c.path, x) for c, x in zip(self.columns, result.x) if x > 0]
        duals = PricingDuals(
            demand={k.id: y for k, y in zip(commodities, result.duals_eq)},
            capacity={e: u for e, u in zip(edges, result.duals_ub) if u},
        )
        return Flow.from_items(items), result.objective, duals


def price_column(problem: Problem, commodity_id: str, duals: PricingDuals) -> Tuple[Path, Fraction]:
    """
    Colonne de coût réduit minimal : plus court chemin avec le poids −u_e
    ajouté sur chaque arête de conduite, diminué de y_i.
    """
    extra = {e: -u for e, u in duals.capacity.items()}
    path, value = shortest_strategy(problem, commodity_id, extra=extra)
    return path, value - duals.demand.get(commodity_id, ZERO)


def solve_system_optimum(
    problem: Problem,
    tolerance: Fraction = ZERO,
    capacities: Optional[Mapping[int, Fraction]] = None,
    demands: Optional[Mapping[str, Fraction]] = None,
    backend: Optional[LPBackend] = None,
    jobs: int = 1,
) -> Flow:
    """
    Optimum social par génération de colonnes.

    Args:
        tolerance: seuil de coût réduit ; 0 donne l'optimum exact
        capacities: capacités résiduelles remplaçant ν (démarrage à chaud)
        demands: demandes résiduelles remplaçant Q

    Returns:
        Un flot réalisable de coût social minimal.
    """
    graph = problem.graph
    capacities = capacities if capacities is not None else {e: graph.capacity(e) for e in graph.driving_edges}
    demands = demands if demands is not None else {c.id: c.demand for c in problem.commodities}
    master = RestrictedMaster(problem, capacities, demands)
    for commodity in problem.commodities:
        master.add(commodity.id, OUTSIDE)
        shortest = shortest_strategy(problem, commodity.id, allow_outside=False)
        if shortest is not None:
            master.add(commodity.id, shortest[0])

    logger.info(f"=== OPTIMUM SOCIAL : génération de colonnes sur {len(problem.commodities)} commodités ===")
    rounds = 0
    while True:
        rounds += 1
        flow, objective, duals = master.solve(backend)
        ids = [c.id for c in problem.commodities]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as executor:
                priced = list(executor.map(lambda i: price_column(problem, i, duals), ids))
        else:
            priced = [price_column(problem, i, duals) for i in ids]
        added = 0
        for commodity_id, (path, reduced) in zip(ids, priced):
            if reduced < -tolerance and master.add(commodity_id, path):
                added += 1
        logger.debug(f"Tour {rounds} : objectif {objective}, {added} colonne(s) ajoutée(s)")
        if not added:
            break
    logger.info(f"✅ Optimum social {objective} ({len(master.columns)} colonnes, {rounds} tours)")
    return flow


def system_optimum_by_enumeration(
    problem: Problem, path_cap: int = 10_000, backend: Optional[LPBackend] = None
) -> Flow:
    """Optimum social sur toutes les stratégies énumérées, sans génération de colonnes."""
    graph = problem.graph
    master = RestrictedMaster(
        problem,
        {e: graph.capacity(e) for e in graph.driving_edges},
        {c.id: c.demand for c in problem.commodities},
    )
    for commodity in problem.commodities:
        for path in enumerate_strategies(problem, commodity.id, path_cap):
            master.add(commodity.id, path)
    flow, _, _ = master.solve(backend)
    return flow


def residual_capacities(problem: Problem, flow: Flow) -> Dict[int, Fraction]:
    graph = problem.graph
    return {e: graph.capacity(e) - flow.load(e) for e in graph.driving_edges}
