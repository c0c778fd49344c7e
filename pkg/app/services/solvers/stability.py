from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from app.models.flow import Flow
from app.models.instance import Problem
from app.services.flow.metrics import social_cost
from app.services.lp.simplex import LPBackend
from app.services.solvers.exact import ExactLimits, ExactStatus, enumerate_equilibrium_costs
from app.services.solvers.sysopt import solve_system_optimum
from app.utils.logs import logger


class StabilityStatus(str, Enum):
    DEFINED = "defined"
    UNDEFINED = "undefined"
    UNBOUNDED = "unbounded"
    RESOURCE_LIMIT = "resource-limit"


@dataclass(frozen=True)
class PriceOfStability:
    status: StabilityStatus
    value: Optional[Fraction] = None
    best_equilibrium_cost: Optional[Fraction] = None
    system_optimum_cost: Optional[Fraction] = None
    best_equilibrium: Optional[Flow] = None
    system_optimum: Optional[Flow] = None


def price_of_stability(
    problem: Problem,
    limits: Optional[ExactLimits] = None,
    jobs: int = 1,
    backend: Optional[LPBackend] = None,
) -> PriceOfStability:
    """
    Rapport entre le meilleur coût social d'équilibre et l'optimum social.

    Sans équilibre, le rapport n'est pas défini ; un optimum nul avec un
    équilibre de coût positif le rend infini, et 0/0 vaut 1.
    """
    logger.info("=== PRIX DE LA STABILITÉ ===")
    costs = enumerate_equilibrium_costs(problem, limits, jobs=jobs, backend=backend)
    if costs.status == ExactStatus.RESOURCE_LIMIT:
        return PriceOfStability(status=StabilityStatus.RESOURCE_LIMIT)

    optimum = solve_system_optimum(problem, backend=backend, jobs=jobs)
    optimum_cost = social_cost(problem, optimum)
    if costs.status == ExactStatus.NO_EQUILIBRIUM:
        logger.warning("⚠️ Aucun équilibre : prix de la stabilité non défini")
        return PriceOfStability(
            status=StabilityStatus.UNDEFINED, system_optimum_cost=optimum_cost, system_optimum=optimum
        )

    best = costs.minimum
    if optimum_cost == 0:
        status = StabilityStatus.DEFINED if best == 0 else StabilityStatus.UNBOUNDED
        value = Fraction(1) if best == 0 else None
    else:
        status, value = StabilityStatus.DEFINED, best / optimum_cost
    logger.info(f"✅ Prix de la stabilité : {value} ({best} / {optimum_cost})")
    return PriceOfStability(
        status=status,
        value=value,
        best_equilibrium_cost=best,
        system_optimum_cost=optimum_cost,
        best_equilibrium=costs.best_flow,
        system_optimum=optimum,
    )
