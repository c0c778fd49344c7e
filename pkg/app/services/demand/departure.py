from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

from app.core.exceptions import DepartureTimeError
from app.models.demand import TimeWindow
from app.models.flow import Flow, is_outside
from app.models.instance import Problem
from app.services.network.paths import waiting_walk, start_node
from app.utils.logs import logger


@dataclass(frozen=True)
class FdtTransform:
    """Instance à départ fixe équivalente, avec l'instant de départ retenu par commodité."""

    original: Problem
    problem: Problem
    start_times: Dict[str, Optional[int]]
    negative_earliness: Tuple[str, ...]


def fdt_transform(problem: Problem) -> FdtTransform:
    """
    Ramène chaque commodité à un départ fixe au premier quai admissible θ′.

    Les coefficients deviennent γ⁺ + β (retard) et γ⁻ − β (avance), β′ = 0, et
    l'option extérieure est décalée de −β·(T − θ′) : chaque stratégie perd la même
    constante, les équilibres sont donc inchangés.

    Raises:
        DepartureTimeError: plusieurs instants de départ admissibles avec β > 0.
    """
    graph = problem.graph
    commodities = []
    start_times: Dict[str, Optional[int]] = {}
    flagged = []
    for commodity in problem.commodities:
        times = sorted({graph.time(n) for n in problem.starts(commodity.id)})
        if not times:
            start_times[commodity.id] = None
            commodities.append(commodity)
            continue
        if len(times) > 1 and commodity.beta > 0:
            raise DepartureTimeError(
                f"La commodité {commodity.id!r} a {len(times)} instants de départ admissibles avec β > 0"
            )
        theta = times[0]
        start_times[commodity.id] = theta
        earliness = commodity.gamma_early - commodity.beta
        if earliness < 0 and commodity.target > theta:
            flagged.append(commodity.id)
            logger.warning(
                f"⚠️ Coefficient d'avance négatif ({earliness}) pour la commodité {commodity.id}"
            )
        commodities.append(
            commodity.with_changes(
                window=TimeWindow.at(theta),
                beta=Fraction(0),
                gamma_late=commodity.gamma_late + commodity.beta,
                gamma_early=earliness,
                outside_cost=commodity.outside_cost - commodity.beta * (commodity.target - theta),
            )
        )
    return FdtTransform(
        original=problem,
        problem=problem.with_commodities(commodities),
        start_times=start_times,
        negative_earliness=tuple(flagged),
    )


def extend_flow(transform: FdtTransform, flow: Flow) -> Flow:
    """Prolonge chaque stratégie par l'attente depuis θ′ (le flot f̄ de l'instance transformée)."""
    graph = transform.original.graph
    items = []
    for (commodity_id, path), value in flow.entries.items():
        if is_outside(path):
            items.append((commodity_id, path, value))
            continue
        commodity = transform.original.commodity(commodity_id)
        theta = transform.start_times[commodity_id]
        origin = graph.platform_index[(commodity.origin, theta)]
        prefix = waiting_walk(graph, origin, start_node(graph, path))
        items.append((commodity_id, prefix + path, value))
    return Flow.from_items(items)
