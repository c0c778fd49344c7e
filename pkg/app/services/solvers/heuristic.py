"""
Heuristique multi-commodité : directions réparées, pas maximal, solution
initiale fixe, démarrage à chaud et traitement des cycles.
"""

import random
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Deque, Dict, List, Mapping, Optional, Set, Tuple

import pandas as pd

from app.core.config import Settings
from app.core.exceptions import DirectionError, InvariantViolation, UnboundedStepError
from app.models.flow import OUTSIDE, Direction, Flow, Key, Path
from app.models.instance import Problem
from app.services.demand.costs import path_cost
from app.services.flow.deviation import best_available_alternative
from app.services.flow.metrics import MetricsReport, metrics
from app.services.flow.verify import is_feasible, verify_equilibrium
from app.services.network.paths import boarding_edges, driving_edges, shortest_strategy
from app.services.solvers.sysopt import residual_capacities, solve_system_optimum
from app.utils.logs import logger
from app.utils.rational import format_optional, format_rational

ZERO = Fraction(0)

TRACE_COLUMNS = ["iter", "selected_commodity", "regret", "lambda", "mean_rho", "p99_rho", "social_cost"]

# garde-fou de la boucle de réparation, qui termine en théorie
MAX_REPAIR_PASSES = 100_000


class Selection(str, Enum):
    MAX_REGRET = "max-regret"
    RANDOM = "random"


class Outcome(str, Enum):
    EQUILIBRIUM = "equilibrium"
    BEST_EFFORT = "best-effort"


class CycleAction(str, Enum):
    COMPRESSED = "compressed"
    RANDOMIZED = "randomized"
    RESTARTED = "restarted"


@dataclass(frozen=True)
class HeuristicConfig:
    budget_secs: float = 60
    iter_cap: int = 10_000
    seed: int = 0
    selection: Selection = Selection.MAX_REGRET
    cycle_window: int = 64
    restarts: int = 64
    prefill: bool = True
    warm_start: bool = True
    compress_cycles: bool = True
    check_invariants: bool = True
    jobs: int = 1

    def __post_init__(self):
        for name in ("budget_secs", "iter_cap", "cycle_window"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} doit être strictement positif")
        if self.restarts < 0:
            raise ValueError("restarts doit être positif ou nul")

    @classmethod
    def from_settings(cls, settings: Settings, **overrides) -> "HeuristicConfig":
        values = dict(
            budget_secs=settings.budget_secs,
            iter_cap=settings.iter_cap,
            seed=settings.seed,
            cycle_window=settings.cycle_window,
            restarts=settings.restarts,
            jobs=settings.jobs,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class FixedInitialSolution:
    """Partie pré-affectée du flot, jamais diminuée par l'heuristique."""

    flow: Flow = field(default_factory=Flow)

    @property
    def volume(self) -> Fraction:
        return sum(self.flow.entries.values(), ZERO)


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    commodity: str
    regret: Fraction
    step: Fraction
    mean_rho: Optional[Fraction]
    p99_rho: Optional[Fraction]
    social_cost: Fraction


@dataclass(frozen=True)
class CycleEvent:
    iteration: int
    period: int
    action: CycleAction


@dataclass
class HeuristicResult:
    flow: Flow
    report: MetricsReport
    trace: List[TraceRow]
    iterations: int
    restarts: int
    cycle_events: List[CycleEvent]
    outcome: Outcome
    fixed: FixedInitialSolution


def _free(flow: Flow, frozen: Optional[Flow], key: Key) -> Fraction:
    value = flow.entries.get(key, ZERO)
    return value - frozen.entries.get(key, ZERO) if frozen is not None else value


def _check_support(flow: Flow, direction: Direction, frozen: Optional[Flow]) -> None:
    if not direction.is_balanced():
        raise DirectionError("Direction non équilibrée")
    for key, value in direction.entries.items():
        if value < 0 and _free(flow, frozen, key) <= 0:
            raise DirectionError(f"Direction négative sur {key} sans volume disponible")


def offending_boardings(problem: Problem, flow: Flow, direction: Direction) -> List[int]:
    """Montées e telles que f_{e⁺} = ν, d_{e⁺} > 0 et (f_e > 0 ou d_e > 0)."""
    graph = problem.graph
    deltas = direction.edge_deltas()
    found = []
    for edge_id, delta in deltas.items():
        if delta <= 0 or not graph.is_driving(edge_id):
            continue
        if flow.load(edge_id) != graph.capacity(edge_id):
            continue
        boarding = graph.boarding_of[edge_id]
        if flow.load(boarding) > 0 or deltas.get(boarding, ZERO) > 0:
            found.append(boarding)
    return sorted(found)


def is_feasible_direction(
    problem: Problem, flow: Flow, direction: Direction, frozen: Optional[Flow] = None
) -> bool:
    """
    Un pas f + λ·d reste réalisable pour λ > 0 assez petit.

    Raises:
        DirectionError: direction non équilibrée ou négative hors du support.
    """
    _check_support(flow, direction, frozen)
    return not offending_boardings(problem, flow, direction)


def repair_direction(
    problem: Problem,
    flow: Flow,
    direction: Direction,
    frozen: Optional[Flow] = None,
    tie_rank: Optional[Mapping[int, int]] = None,
) -> Direction:
    """
    Rend une direction réalisable en reportant le volume des porteurs des
    montées fautives vers leur meilleure alternative.

    Les montées fautives sont recherchées à nouveau après chaque passe.

    Raises:
        DirectionError: aucune stratégie porteuse ne peut céder de volume.
    """
    _check_support(flow, direction, frozen)
    graph = problem.graph
    entries: Dict[Key, Fraction] = dict(direction.entries)

    for _ in range(MAX_REPAIR_PASSES):
        current = Direction(entries)
        offending = offending_boardings(problem, flow, current)
        if not offending:
            return current
        boarding = offending[0]
        driving = graph.successor[boarding]
        d_driving = current.edge_delta(driving)

        carriers = []
        for key in set(flow.entries) | set(entries):
            if boarding not in key[1]:
                continue
            free, delta = _free(flow, frozen, key), entries.get(key, ZERO)
            if free > 0 or delta > 0:
                carriers.append((delta <= 0, -flow.value(*key), problem.order_key(*key), key, free, delta))
        if not carriers:
            raise DirectionError(f"Aucune stratégie porteuse pour la montée {boarding}")
        _, _, _, carrier, free, delta = min(carriers)
        commodity_id, _ = carrier
        amount = d_driving if free > 0 else min(d_driving, delta)
        entries[carrier] = delta - amount

        while amount > 0:
            current = Direction(entries)
            deltas = current.edge_deltas()
            full = frozenset(
                e
                for e in graph.driving_edges
                if flow.load(e) == graph.capacity(e) and deltas.get(e, ZERO) >= 0
            )
            target, _ = shortest_strategy(problem, commodity_id, blocked_edges=full, tie_rank=tie_rank)
            chunk = min(
                [amount]
                + [-deltas.get(e, ZERO) for e in driving_edges(graph, target) if flow.load(e) == graph.capacity(e)]
            )
            key = (commodity_id, target)
            entries[key] = entries.get(key, ZERO) + chunk
            amount -= chunk
    raise DirectionError("La réparation de la direction ne termine pas")


def max_step(problem: Problem, flow: Flow, direction: Direction, frozen: Optional[Flow] = None) -> Fraction:
    """
    Plus grand λ tel que f + λ·d reste réalisable.

    Raises:
        UnboundedStepError: aucune contrainte ne borne le pas.
        DirectionError: la direction n'admet aucun pas strictement positif.
    """
    graph = problem.graph
    bounds = [
        _free(flow, frozen, key) / -value for key, value in direction.entries.items() if value < 0
    ]
    for edge_id, delta in direction.edge_deltas().items():
        if delta > 0 and graph.is_driving(edge_id):
            bounds.append((graph.capacity(edge_id) - flow.load(edge_id)) / delta)
    if not bounds:
        raise UnboundedStepError("Aucune contrainte ne borne le pas")
    step = min(bounds)
    if step <= 0:
        raise DirectionError(f"Pas maximal nul pour la direction {direction!r}")
    return step


def is_uninterruptible(problem: Problem, fixed: Flow, path: Path) -> bool:
    """Chaque montée suit une arête de conduite déjà saturée par `fixed`, si elle existe."""
    graph = problem.graph
    for boarding in boarding_edges(graph, path):
        previous = graph.previous_driving[graph.successor[boarding]]
        if previous is not None and fixed.load(previous) < graph.capacity(previous):
            return False
    return True


def fixed_initial_solution(problem: Problem) -> FixedInitialSolution:
    """Remplit les stratégies ininterruptibles moins chères que l'option extérieure."""
    graph = problem.graph
    fixed = Flow()
    changed = True
    while changed:
        changed = False
        for commodity in problem.commodities:
            residual = commodity.demand - fixed.volume(commodity.id)
            if residual <= 0:
                continue
            saturated = frozenset(
                graph.boarding_of[e] for e in graph.driving_edges if fixed.load(e) >= graph.capacity(e)
            )
            found = shortest_strategy(problem, commodity.id, blocked_edges=saturated, allow_outside=False)
            if found is None:
                continue
            path, cost = found
            if cost >= commodity.outside_cost or not is_uninterruptible(problem, fixed, path):
                continue
            step = min([graph.capacity(e) - fixed.load(e) for e in driving_edges(graph, path)] + [residual])
            if step <= 0:
                continue
            fixed = fixed.add(commodity.id, path, step)
            changed = True
    solution = FixedInitialSolution(fixed)
    logger.info(f"Solution initiale fixe : volume {solution.volume} sur {problem.total_demand}")
    return solution


def warm_start(problem: Problem, fixed: Flow) -> Flow:
    """Complète `fixed` par un optimum social sur les capacités et demandes résiduelles."""
    demands = {c.id: c.demand - fixed.volume(c.id) for c in problem.commodities}
    if not any(demands.values()):
        return fixed
    rest = solve_system_optimum(problem, capacities=residual_capacities(problem, fixed), demands=demands)
    return fixed.apply(rest.entries)


def _all_outside(problem: Problem, fixed: Flow) -> Flow:
    return fixed.apply(
        {(c.id, OUTSIDE): c.demand - fixed.volume(c.id) for c in problem.commodities}
    )


@dataclass(frozen=True)
class _Candidate:
    key: Key
    alternative: Path
    regret: Fraction


def _candidates(
    problem: Problem,
    flow: Flow,
    frozen: Flow,
    tie_rank: Optional[Mapping[int, int]],
    tabu: Set[Tuple[str, Path, Path]],
    jobs: int,
) -> List[_Candidate]:
    keys = sorted(
        (key for key in flow.entries if _free(flow, frozen, key) > 0),
        key=lambda key: problem.order_key(*key),
    )

    def evaluate(key: Key) -> Optional[_Candidate]:
        commodity_id, path = key
        alternative, best = best_available_alternative(problem, flow, commodity_id, path, tie_rank)
        regret = path_cost(problem, commodity_id, path) - best
        if regret <= 0 or (commodity_id, path, alternative) in tabu:
            return None
        return _Candidate(key, alternative, regret)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            found = list(executor.map(evaluate, keys))
    else:
        found = [evaluate(key) for key in keys]
    return [c for c in found if c is not None]


def detect_period(window: Deque[Tuple]) -> Optional[int]:
    """Plus petite période p telle que les p dernières clés répètent les p précédentes."""
    keys = list(window)
    for period in range(1, len(keys) // 2 + 1):
        if keys[-period:] == keys[-2 * period : -period]:
            return period
    return None


def _mean_key(report: MetricsReport):
    return (report.mean_rho is None, report.mean_rho or ZERO)


def trace_frame(trace: List[TraceRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "iter": row.iteration,
                "selected_commodity": row.commodity,
                "regret": format_rational(row.regret),
                "lambda": format_rational(row.step),
                "mean_rho": format_optional(row.mean_rho),
                "p99_rho": format_optional(row.p99_rho),
                "social_cost": format_rational(row.social_cost),
            }
            for row in trace
        ],
        columns=TRACE_COLUMNS,
    )


def write_trace_csv(trace: List[TraceRow], output_path: str) -> str:
    """Exporte la trace d'itérations au format CSV."""
    try:
        trace_frame(trace).to_csv(output_path, index=False)
        logger.info(f"✅ Trace écrite : {output_path} ({len(trace)} lignes)")
        return output_path
    except Exception as e:
        logger.error(f"Erreur lors de l'écriture de la trace : {e}", exc_info=True)
        raise


def solve_heuristic(problem: Problem, config: Optional[HeuristicConfig] = None) -> HeuristicResult:
    """
    Tant qu'une stratégie utilisée admet une alternative disponible moins
    chère, déplace du volume le long de la direction réparée.

    Args:
        problem: instance quelconque (multi-commodité, départs libres)
        config: budget, règle de sélection, fenêtre de cycles, options

    Returns:
        HeuristicResult avec le meilleur flot rencontré (facteur moyen minimal).
    """
    config = config or HeuristicConfig()
    started = time.monotonic()
    logger.info(f"=== DÉMARRAGE DE L'HEURISTIQUE (sélection {config.selection.value}, graine {config.seed}) ===")

    fixed = fixed_initial_solution(problem) if config.prefill else FixedInitialSolution()
    frozen = fixed.flow
    initial = warm_start(problem, frozen) if config.warm_start else _all_outside(problem, frozen)

    selection = config.selection
    rng = random.Random(config.seed)
    edge_count = len(problem.graph.edges)

    def random_ranks() -> Dict[int, int]:
        order = list(range(edge_count))
        rng.shuffle(order)
        return {e: rank for rank, e in enumerate(order)}

    tie_rank = random_ranks() if selection == Selection.RANDOM else None
    flow = initial
    report = metrics(problem, flow, config.jobs)
    best_flow, best_report = flow, report
    trace = [TraceRow(0, "", ZERO, ZERO, report.mean_rho, report.p99_rho, report.social_cost)]
    window: Deque[Tuple] = deque(maxlen=config.cycle_window)
    directions: Deque[Direction] = deque(maxlen=config.cycle_window)
    tabu: Set[Tuple[str, Path, Path]] = set()
    cycle_events: List[CycleEvent] = []
    restarts = 0
    iteration = 0
    outcome = Outcome.BEST_EFFORT

    def record(commodity_id: str, regret: Fraction, step: Fraction) -> None:
        nonlocal report, best_flow, best_report
        if config.check_invariants:
            if not is_feasible(problem, flow):
                raise InvariantViolation(f"Flot irréalisable à l'itération {iteration}")
            if any(flow.value(*key) < value for key, value in frozen.entries.items()):
                raise InvariantViolation(f"Solution initiale fixe diminuée à l'itération {iteration}")
        report = metrics(problem, flow, config.jobs)
        trace.append(
            TraceRow(iteration, commodity_id, regret, step, report.mean_rho, report.p99_rho, report.social_cost)
        )
        if _mean_key(report) < _mean_key(best_report):
            best_flow, best_report = flow, report

    while True:
        if time.monotonic() - started > config.budget_secs:
            logger.warning(f"⚠️ Budget de {config.budget_secs} s épuisé")
            break
        if iteration >= config.iter_cap:
            logger.warning(f"⚠️ Plafond de {config.iter_cap} itérations atteint")
            break

        candidates = _candidates(problem, flow, frozen, tie_rank, tabu, config.jobs)
        if not candidates:
            if verify_equilibrium(problem, flow).ok:
                outcome = Outcome.EQUILIBRIUM
                best_flow, best_report = flow, report
            else:
                logger.warning("⚠️ Plus aucune direction exploitable sans équilibre")
            break

        if selection == Selection.RANDOM:
            chosen = rng.choice(candidates)
        else:
            top = max(c.regret for c in candidates)
            chosen = next(c for c in candidates if c.regret == top)
        commodity_id, path = chosen.key

        try:
            direction = repair_direction(
                problem, flow, Direction.elementary(commodity_id, path, chosen.alternative), frozen, tie_rank
            )
            if direction.is_zero():
                raise DirectionError("Direction réparée nulle")
            step = max_step(problem, flow, direction, frozen)
        except (DirectionError, UnboundedStepError) as e:
            logger.debug(f"Candidat écarté ({commodity_id}) : {e}")
            tabu.add((commodity_id, path, chosen.alternative))
            continue

        iteration += 1
        tabu.clear()
        flow = flow.apply(direction.entries, step)
        record(commodity_id, chosen.regret, step)
        logger.debug(f"Itération {iteration} : {commodity_id}, regret {chosen.regret}, λ = {step}")

        window.append(direction.key())
        directions.append(direction)
        period = detect_period(window)
        if period is None:
            continue
        combined = Direction()
        for past in list(directions)[-period:]:
            combined = combined + past
        window.clear()
        directions.clear()

        if not combined.is_zero():
            if not config.compress_cycles:
                continue
            try:
                if not is_feasible_direction(problem, flow, combined, frozen):
                    continue
                step = max_step(problem, flow, combined, frozen)
            except (DirectionError, UnboundedStepError):
                continue
            iteration += 1
            flow = flow.apply(combined.entries, step)
            cycle_events.append(CycleEvent(iteration, period, CycleAction.COMPRESSED))
            logger.info(f"Cycle de période {period} compressé : λ = {step}")
            record("", ZERO, step)
        elif selection == Selection.MAX_REGRET:
            selection = Selection.RANDOM
            tie_rank = random_ranks()
            cycle_events.append(CycleEvent(iteration, period, CycleAction.RANDOMIZED))
            logger.warning(f"⚠️ Cycle sans issue de période {period} : sélection aléatoire")
        else:
            restarts += 1
            if restarts > config.restarts:
                logger.warning(f"⚠️ Limite de {config.restarts} redémarrages atteinte")
                break
            rng = random.Random(config.seed + restarts)
            tie_rank = random_ranks()
            flow = initial
            report = metrics(problem, flow, config.jobs)
            tabu.clear()
            cycle_events.append(CycleEvent(iteration, period, CycleAction.RESTARTED))
            logger.warning(f"⚠️ Cycle sans issue : redémarrage n°{restarts}")

    elapsed = time.monotonic() - started
    logger.info(
        f"✅ Heuristique terminée : {outcome.value}, {iteration} itérations, "
        f"{restarts} redémarrage(s), {elapsed:.2f} s"
    )
    return HeuristicResult(
        flow=best_flow,
        report=best_report,
        trace=trace,
        iterations=iteration,
        restarts=restarts,
        cycle_events=cycle_events,
        outcome=outcome,
        fixed=fixed,
    )
