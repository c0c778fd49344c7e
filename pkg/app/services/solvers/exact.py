"""
Calcul exact des équilibres par énumération des ensembles saturés E_S.

Pour chaque E_S, le système linéaire ℱ(E_S) fixe f_e = ν_e sur E_S,
borne f_e ≤ ν_e ailleurs et annule les stratégies bloquées 𝒫_i(E_S).
Tout point de ℱ(E_S) est un équilibre ; l'union des ℱ(E_S) les contient tous.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import islice
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

from app.core.config import Settings
from app.core.exceptions import InvariantViolation, PathEnumerationOverflow
from app.models.flow import OUTSIDE, Flow, Path, is_outside
from app.models.instance import Problem
from app.services.demand.costs import path_cost
from app.services.flow.verify import verify_equilibrium
from app.services.lp.simplex import LinearProgram, LPBackend, solve_lp
from app.services.network.paths import boarding_edges, driving_edges, enumerate_strategies, shortest_strategy
from app.utils.logs import logger

ZERO = Fraction(0)


class ExactStatus(str, Enum):
    EQUILIBRIUM = "equilibrium"
    NO_EQUILIBRIUM = "no-equilibrium"
    RESOURCE_LIMIT = "resource-limit"


class SearchStrategy(str, Enum):
    CARDINALITY = "cardinality"
    BRANCH = "branch"


class Objective(str, Enum):
    FEASIBILITY = "feasibility"
    MIN_COST = "min"
    MAX_COST = "max"


@dataclass(frozen=True)
class ExactLimits:
    edge_limit: int = 24
    path_cap: int = 1_000_000

    @classmethod
    def from_settings(cls, settings: Settings) -> "ExactLimits":
        return cls(edge_limit=settings.edge_limit, path_cap=settings.path_cap)


@dataclass(frozen=True)
class ExactResult:
    status: ExactStatus
    flow: Optional[Flow] = None
    saturated: FrozenSet[int] = frozenset()
    subsets_checked: int = 0
    detail: str = ""


@dataclass(frozen=True)
class EquilibriumCostRange:
    status: ExactStatus
    minimum: Optional[Fraction] = None
    maximum: Optional[Fraction] = None
    count: int = 0
    best_flow: Optional[Flow] = None
    detail: str = ""


@dataclass(frozen=True)
class StrategyClass:
    """Stratégies d'une commodité de même ensemble d'arêtes de conduite et de même coût."""

    commodity: str
    representative: Path
    driving: FrozenSet[int]
    cost: Fraction
    members: int = 1

    @property
    def is_outside(self) -> bool:
        return is_outside(self.representative)


def is_blocked_path(
    problem: Problem,
    commodity_id: str,
    path: Path,
    saturated: FrozenSet[int],
    cache: Optional[Dict] = None,
) -> bool:
    """
    p ∈ 𝒫_i(E_S) : une stratégie strictement moins chère existe une fois
    supprimées les montées e avec e⁺ ∈ E_S et e⁺ ∉ p.
    """
    graph = problem.graph
    relevant = frozenset(saturated - set(driving_edges(graph, path)))
    key = (commodity_id, relevant)
    best = cache.get(key) if cache is not None else None
    if best is None:
        blocked = frozenset(graph.boarding_of[e] for e in relevant)
        _, best = shortest_strategy(problem, commodity_id, blocked_edges=blocked)
        if cache is not None:
            cache[key] = best
    return best < path_cost(problem, commodity_id, path)


class FeasibilitySystem:
    """Variables agrégées par classe de stratégies et construction de ℱ(E_S)."""

    def __init__(
        self,
        problem: Problem,
        path_cap: int,
        forbid_outside: bool = False,
        backend: Optional[LPBackend] = None,
    ):
        self.problem = problem
        self.forbid_outside = forbid_outside
        self.backend = backend
        self.strategy_count = 0
        self.classes: List[StrategyClass] = []
        self._blocked_cache: Dict = {}

        graph = problem.graph
        boarded = set()
        for commodity in problem.commodities:
            strategies = enumerate_strategies(problem, commodity.id, path_cap - self.strategy_count)
            self.strategy_count += len(strategies)
            if self.strategy_count > path_cap:
                raise PathEnumerationOverflow(path_cap)
            grouped: Dict[Tuple[FrozenSet[int], Fraction], List[Path]] = {}
            for path in strategies:
                if is_outside(path):
                    continue
                boarded.update(graph.successor[e] for e in boarding_edges(graph, path))
                key = (frozenset(driving_edges(graph, path)), path_cost(problem, commodity.id, path))
                grouped.setdefault(key, []).append(path)
            self.classes.append(StrategyClass(commodity.id, OUTSIDE, frozenset(), commodity.outside_cost))
            for (driving, cost), members in sorted(grouped.items(), key=lambda item: min(item[1])):
                representative = min(members, key=lambda p: (len(boarding_edges(graph, p)), p))
                self.classes.append(StrategyClass(commodity.id, representative, driving, cost, len(members)))

        # seules les arêtes de conduite où l'on peut monter peuvent bloquer une stratégie,
        # et seules celles que la demande peut remplir peuvent être saturées
        reachable_load: Dict[int, Fraction] = {}
        for commodity in problem.commodities:
            for e in {e for c in self.classes if c.commodity == commodity.id for e in c.driving}:
                reachable_load[e] = reachable_load.get(e, ZERO) + commodity.demand
        self.candidates: Tuple[int, ...] = tuple(
            e for e in sorted(boarded) if reachable_load.get(e, ZERO) >= graph.capacity(e)
        )
        usage: Dict[int, List[int]] = {e: [] for e in self.candidates}
        for index, strategy_class in enumerate(self.classes):
            for e in strategy_class.driving:
                if e in usage:
                    usage[e].append(index)
        twins: Dict[Tuple[Tuple[int, ...], Fraction], List[int]] = {}
        for e in self.candidates:
            twins.setdefault((tuple(usage[e]), graph.capacity(e)), []).append(e)
        self.groups: Tuple[FrozenSet[int], ...] = tuple(
            frozenset(edges) for edges in sorted(twins.values(), key=min)
        )

    def edges_of(self, mask: int) -> FrozenSet[int]:
        edges = set()
        for index, group in enumerate(self.groups):
            if mask >> index & 1:
                edges.update(group)
        return frozenset(edges)

    def forced_zero(self, strategy_class: StrategyClass, saturated: FrozenSet[int]) -> bool:
        if self.forbid_outside and strategy_class.is_outside:
            return True
        return is_blocked_path(
            self.problem,
            strategy_class.commodity,
            strategy_class.representative,
            saturated,
            self._blocked_cache,
        )

    def solve(
        self,
        saturated: FrozenSet[int],
        zero_basis: Optional[FrozenSet[int]] = None,
        objective: Objective = Objective.FEASIBILITY,
    ) -> Optional[Tuple[Flow, Fraction]]:
        """
        Cherche un point de ℱ(E_S).

        Args:
            saturated: arêtes fixées à leur capacité
            zero_basis: ensemble servant au calcul des stratégies annulées
                (E_S par défaut ; plus grand pour une relaxation)
            objective: simple faisabilité, ou coût social minimal / maximal

        Returns:
            (flot, coût social) ou None si le système est vide.
        """
        problem, graph = self.problem, self.problem.graph
        basis = saturated if zero_basis is None else zero_basis
        variables = [c for c in self.classes if not self.forced_zero(c, basis)]

        served = {c.commodity for c in variables}
        if any(c.demand > 0 and c.id not in served for c in problem.commodities):
            return None
        used_edges = set()
        for strategy_class in variables:
            used_edges.update(strategy_class.driving)
        if not saturated <= used_edges:
            return None
        if not variables:
            return Flow(), ZERO

        a_eq: List[List[Fraction]] = []
        b_eq: List[Fraction] = []
        for commodity in problem.commodities:
            a_eq.append([Fraction(int(c.commodity == commodity.id)) for c in variables])
            b_eq.append(commodity.demand)
        for e in sorted(saturated):
            a_eq.append([Fraction(int(e in c.driving)) for c in variables])
            b_eq.append(graph.capacity(e))
        a_ub: List[List[Fraction]] = []
        b_ub: List[Fraction] = []
        for e in sorted(used_edges - saturated):
            a_ub.append([Fraction(int(e in c.driving)) for c in variables])
            b_ub.append(graph.capacity(e))

        if objective == Objective.FEASIBILITY:
            costs = [ZERO] * len(variables)
        elif objective == Objective.MIN_COST:
            costs = [c.cost for c in variables]
        else:
            costs = [-c.cost for c in variables]

        result = solve_lp(LinearProgram(c=costs, a_eq=a_eq, b_eq=b_eq, a_ub=a_ub, b_ub=b_ub), self.backend)
        if not result.is_optimal:
            return None
        items = [
            (c.commodity, c.representative, value)
            for c, value in zip(variables, result.x)
            if value > 0
        ]
        social = sum((c.cost * value for c, value in zip(variables, result.x)), ZERO)
        return Flow.from_items(items), social


def masks_by_cardinality(size: int) -> Iterator[int]:
    """Sous-ensembles de {0..size-1} par cardinal croissant, puis par masque croissant."""
    yield 0
    for k in range(1, size + 1):
        mask = (1 << k) - 1
        while mask < 1 << size:
            yield mask
            lowest = mask & -mask
            ripple = mask + lowest
            mask = (((ripple ^ mask) >> 2) // lowest) | ripple


def _prepare(
    problem: Problem,
    limits: ExactLimits,
    forbid_outside: bool,
    backend: Optional[LPBackend],
) -> Tuple[Optional[FeasibilitySystem], str]:
    try:
        system = FeasibilitySystem(problem, limits.path_cap, forbid_outside, backend)
    except PathEnumerationOverflow as e:
        logger.warning(f"⚠️ {e}")
        return None, f"path_cap={limits.path_cap}"
    if len(system.groups) > limits.edge_limit:
        logger.warning(
            f"⚠️ {len(system.groups)} groupes d'arêtes candidates pour une limite de {limits.edge_limit}"
        )
        return None, f"edge_limit={limits.edge_limit} (groupes={len(system.groups)})"
    logger.info(
        f"{system.strategy_count} stratégies, {len(system.classes)} classes, "
        f"{len(system.candidates)} arêtes candidates en {len(system.groups)} groupes"
    )
    return system, ""


def feasibility(
    problem: Problem,
    saturated: FrozenSet[int],
    path_cap: int = 1_000_000,
    forbid_outside: bool = False,
    backend: Optional[LPBackend] = None,
) -> Optional[Flow]:
    """Un point rationnel de ℱ(E_S), ou None si le système est vide."""
    system = FeasibilitySystem(problem, path_cap, forbid_outside, backend)
    solution = system.solve(frozenset(saturated))
    return solution[0] if solution else None


def _search_cardinality(
    system: FeasibilitySystem, jobs: int
) -> Tuple[Optional[Tuple[FrozenSet[int], Flow]], int]:
    def evaluate(mask: int) -> Optional[Flow]:
        solution = system.solve(system.edges_of(mask))
        return solution[0] if solution else None

    masks = masks_by_cardinality(len(system.groups))
    checked = 0
    if jobs <= 1:
        for mask in masks:
            checked += 1
            flow = evaluate(mask)
            if flow is not None:
                return (system.edges_of(mask), flow), checked
        return None, checked

    with ThreadPoolExecutor(max_workers=jobs) as executor:
        while True:
            batch = list(islice(masks, jobs * 8))
            if not batch:
                return None, checked
            for mask, flow in zip(batch, executor.map(evaluate, batch)):
                checked += 1
                if flow is not None:
                    return (system.edges_of(mask), flow), checked


def saturated_edges(problem: Problem, flow: Flow) -> FrozenSet[int]:
    graph = problem.graph
    return frozenset(e for e in graph.driving_edges if flow.load(e) == graph.capacity(e))


def _search_branch(system: FeasibilitySystem) -> Tuple[Optional[Tuple[FrozenSet[int], Flow]], int]:
    """
    Séparation-évaluation sur les groupes : un nœud fixe les groupes inclus,
    exclut les suivants décidés et relâche les autres.

    La relaxation annule les stratégies bloquées par inclus ∪ indécis ; comme
    le blocage décroît quand E_S grandit, elle contient tous les ℱ(E_S) du
    sous-arbre. Un point de relaxation qui vérifie l'équilibre termine la
    recherche.
    """
    problem = system.problem
    count = len(system.groups)
    full = (1 << count) - 1
    checked = 0

    def explore(included: int, depth: int) -> Optional[Tuple[FrozenSet[int], Flow]]:
        nonlocal checked
        checked += 1
        undecided = full & ~((1 << depth) - 1)
        saturated = system.edges_of(included)
        solution = system.solve(saturated, zero_basis=system.edges_of(included | undecided))
        if solution is None:
            return None
        flow = solution[0]
        if depth == count:
            return saturated, flow
        if verify_equilibrium(problem, flow).ok:
            return saturated_edges(problem, flow), flow
        return explore(included | 1 << depth, depth + 1) or explore(included, depth + 1)

    return explore(0, 0), checked


def solve_exact(
    problem: Problem,
    limits: Optional[ExactLimits] = None,
    strategy: SearchStrategy = SearchStrategy.BRANCH,
    forbid_outside: bool = False,
    jobs: int = 1,
    backend: Optional[LPBackend] = None,
) -> ExactResult:
    """
    Équilibre exact, ou certificat de non-existence après épuisement des E_S.

    Args:
        limits: nombre maximal de groupes d'arêtes candidates et de stratégies
        strategy: séparation-évaluation avec relaxation (défaut) ou ordre cardinal
        forbid_outside: ajoute f_{i,ô} = 0 à chaque système
        jobs: nombre de threads pour l'ordre cardinal

    Returns:
        ExactResult ; le statut RESOURCE_LIMIT nomme la borne dépassée.
    """
    limits = limits or ExactLimits()
    logger.info(f"=== DÉMARRAGE DU SOLVEUR EXACT ({strategy.value}) ===")
    system, detail = _prepare(problem, limits, forbid_outside, backend)
    if system is None:
        return ExactResult(status=ExactStatus.RESOURCE_LIMIT, detail=detail)

    if strategy == SearchStrategy.BRANCH:
        found, checked = _search_branch(system)
    else:
        found, checked = _search_cardinality(system, jobs)

    if found is None:
        logger.info(f"Aucun équilibre : {checked} systèmes examinés")
        return ExactResult(status=ExactStatus.NO_EQUILIBRIUM, subsets_checked=checked)

    saturated, flow = found
    if not verify_equilibrium(problem, flow).ok:
        raise InvariantViolation("Point de ℱ(E_S) qui n'est pas un équilibre")
    logger.info(f"✅ Équilibre trouvé après {checked} systèmes ({len(saturated)} arêtes saturées)")
    return ExactResult(
        status=ExactStatus.EQUILIBRIUM, flow=flow, saturated=saturated, subsets_checked=checked
    )


def enumerate_equilibrium_costs(
    problem: Problem,
    limits: Optional[ExactLimits] = None,
    forbid_outside: bool = False,
    jobs: int = 1,
    backend: Optional[LPBackend] = None,
) -> EquilibriumCostRange:
    """Coûts sociaux minimal et maximal des équilibres, sur tous les ℱ(E_S) non vides."""
    limits = limits or ExactLimits()
    system, detail = _prepare(problem, limits, forbid_outside, backend)
    if system is None:
        return EquilibriumCostRange(status=ExactStatus.RESOURCE_LIMIT, detail=detail)

    def evaluate(mask: int):
        saturated = system.edges_of(mask)
        lowest = system.solve(saturated, objective=Objective.MIN_COST)
        if lowest is None:
            return None
        highest = system.solve(saturated, objective=Objective.MAX_COST)
        return lowest, highest

    masks = list(masks_by_cardinality(len(system.groups)))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            outcomes: Sequence = list(executor.map(evaluate, masks))
    else:
        outcomes = [evaluate(mask) for mask in masks]

    minimum = maximum = best_flow = None
    count = 0
    for outcome in outcomes:
        if outcome is None:
            continue
        (flow, low), (_, high) = outcome
        count += 1
        if minimum is None or low < minimum:
            minimum, best_flow = low, flow
        if maximum is None or high > maximum:
            maximum = high
    if count == 0:
        return EquilibriumCostRange(status=ExactStatus.NO_EQUILIBRIUM)
    logger.info(f"Coûts d'équilibre dans [{minimum}, {maximum}] sur {count} ensembles saturés")
    return EquilibriumCostRange(
        status=ExactStatus.EQUILIBRIUM, minimum=minimum, maximum=maximum, count=count, best_flow=best_flow
    )
