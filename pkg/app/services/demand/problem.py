from typing import List

from app.core.exceptions import CostEnumerationOverflow
from app.models.demand import Commodity
from app.models.instance import Instance, Problem
from app.services.demand.costs import discretize_elastic, enumerate_distinct_costs
from app.services.network.builder import build_time_expanded, unroll_periodic
from app.utils.logs import logger


def instance_trips(instance: Instance) -> list:
    """Courses explicites suivies des copies déroulées du bloc périodique."""
    trips = list(instance.trips)
    if instance.periodic is not None:
        block = instance.periodic
        trips.extend(unroll_periodic(block.templates, block.period, block.horizon))
    return trips


def build_problem(instance: Instance, cost_cap: int = 10_000) -> Problem:
    """
    Construit le problème résolu par les solveurs à partir d'une instance.

    Les groupes élastiques sont discrétisés en bandes placées après les
    commodités déclarées.

    Raises:
        CostEnumerationOverflow: plus de `cost_cap` coûts distincts pour un groupe.
    """
    logger.info(f"=== CONSTRUCTION DU PROBLÈME {instance.name!r} ===")
    graph = build_time_expanded(instance.stations, instance_trips(instance))
    commodities: List[Commodity] = list(instance.commodities)
    for group in instance.groups:
        distinct = enumerate_distinct_costs(group, graph, cost_cap)
        if distinct.truncated:
            raise CostEnumerationOverflow(group.id, cost_cap)
        bands = discretize_elastic(group, distinct.values)
        logger.debug(f"Groupe {group.id} : {len(distinct.values)} coûts, {len(bands)} bandes")
        commodities.extend(bands)
    if instance.od_demands:
        logger.warning(
            f"⚠️ {len(instance.od_demands)} demandes OD nominales ignorées : "
            "appliquer un profil de demande pour les convertir"
        )
    problem = Problem(graph=graph, commodities=tuple(commodities), name=instance.name)
    counts = graph.count_by_kind()
    logger.info(
        f"✅ Problème prêt : {len(graph.nodes)} nœuds, {len(graph.edges)} arêtes "
        f"({counts.get('driving', 0)} de roulage), {len(commodities)} commodités"
    )
    return problem
