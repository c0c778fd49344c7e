from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import pandas as pd

from app.models.flow import Flow, Path, is_outside
from app.models.instance import Problem
from app.services.demand.costs import path_cost
from app.services.flow.deviation import best_available_alternative
from app.services.flow.verify import capacity_violations
from app.utils.logs import logger
from app.utils.rational import format_optional, format_rational

P99_SHARE = Fraction(99, 100)

CSV_COLUMNS = [
    "commodity",
    "path_id",
    "volume",
    "cost",
    "best_alt_cost",
    "regret",
    "approx_factor",
]
SUMMARY_COLUMNS = ["mean_rho", "p99_rho", "share_zero_regret", "social_cost"]


def path_id(path: Path) -> str:
    return "outside" if is_outside(path) else "-".join(str(e) for e in path)


@dataclass(frozen=True)
class PathMetric:
    commodity: str
    path: Path
    volume: Fraction
    cost: Fraction
    best_alternative_cost: Fraction
    regret: Fraction
    # None : facteur infini (π* nul ou négatif avec regret positif)
    approximation_factor: Optional[Fraction]

    @property
    def path_id(self) -> str:
        return path_id(self.path)


@dataclass(frozen=True)
class MetricsReport:
    rows: Tuple[PathMetric, ...]
    mean_rho: Optional[Fraction]
    p99_rho: Optional[Fraction]
    share_zero_regret: Fraction
    social_cost: Fraction
    infinite_volume: Fraction = Fraction(0)

    @property
    def total_volume(self) -> Fraction:
        return sum((row.volume for row in self.rows), Fraction(0))


def social_cost(problem: Problem, flow: Flow) -> Fraction:
    """Somme des coûts de toutes les stratégies, pondérée par les volumes."""
    return sum(
        (value * path_cost(problem, i, p) for (i, p), value in flow.entries.items()),
        Fraction(0),
    )


def approximation_factor(cost: Fraction, best: Fraction) -> Optional[Fraction]:
    if cost == best:
        return Fraction(1)
    if best <= 0:
        return None
    return cost / best


def _path_metric(problem: Problem, flow: Flow, key) -> PathMetric:
    commodity_id, path = key
    cost = path_cost(problem, commodity_id, path)
    _, best = best_available_alternative(problem, flow, commodity_id, path)
    return PathMetric(
        commodity=commodity_id,
        path=path,
        volume=flow.value(commodity_id, path),
        cost=cost,
        best_alternative_cost=best,
        regret=cost - best,
        approximation_factor=approximation_factor(cost, best),
    )


def weighted_quantile(rows: List[PathMetric], share: Fraction) -> Optional[Fraction]:
    """Plus petite valeur v telle qu'au moins `share` du volume ait ρ ≤ v (None = ∞)."""
    total = sum((row.volume for row in rows), Fraction(0))
    ordered = sorted(
        rows,
        key=lambda r: (r.approximation_factor is None, r.approximation_factor or Fraction(0)),
    )
    covered = Fraction(0)
    for row in ordered:
        covered += row.volume
        if covered >= share * total:
            return row.approximation_factor
    return ordered[-1].approximation_factor


def metrics(problem: Problem, flow: Flow, jobs: int = 1) -> MetricsReport:
    """
    Regret et facteur d'approximation par stratégie utilisée, agrégés par volume.

    Les particules sur l'option extérieure sont incluses ; les facteurs infinis
    sont exclus de la moyenne.
    """
    if capacity_violations(problem, flow):
        logger.warning("⚠️ Métriques calculées sur un flot qui dépasse les capacités")
    keys = sorted(flow.entries, key=lambda key: problem.order_key(*key))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            rows = list(executor.map(lambda key: _path_metric(problem, flow, key), keys))
    else:
        rows = [_path_metric(problem, flow, key) for key in keys]

    total = sum((row.volume for row in rows), Fraction(0))
    cost = social_cost(problem, flow)
    if total == 0:
        return MetricsReport(tuple(rows), Fraction(1), Fraction(1), Fraction(1), cost)

    finite = [row for row in rows if row.approximation_factor is not None]
    infinite_volume = total - sum((row.volume for row in finite), Fraction(0))
    if infinite_volume:
        logger.warning(f"⚠️ Volume {infinite_volume} avec facteur d'approximation infini exclu de la moyenne")
    finite_volume = total - infinite_volume
    mean = (
        sum((row.volume * row.approximation_factor for row in finite), Fraction(0)) / finite_volume
        if finite_volume
        else None
    )
    zero_regret = sum((row.volume for row in rows if row.regret == 0), Fraction(0))
    return MetricsReport(
        rows=tuple(rows),
        mean_rho=mean,
        p99_rho=weighted_quantile(rows, P99_SHARE),
        share_zero_regret=zero_regret / total,
        social_cost=cost,
        infinite_volume=infinite_volume,
    )


def metrics_frame(report: MetricsReport) -> pd.DataFrame:
    records = [
        {
            "commodity": row.commodity,
            "path_id": row.path_id,
            "volume": format_rational(row.volume),
            "cost": format_rational(row.cost),
            "best_alt_cost": format_rational(row.best_alternative_cost),
            "regret": format_rational(row.regret),
            "approx_factor": format_optional(row.approximation_factor),
        }
        for row in report.rows
    ]
    return pd.DataFrame(records, columns=CSV_COLUMNS)


def summary_frame(report: MetricsReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "mean_rho": format_optional(report.mean_rho, "na"),
                "p99_rho": format_optional(report.p99_rho, "na"),
                "share_zero_regret": format_rational(report.share_zero_regret),
                "social_cost": format_rational(report.social_cost),
            }
        ],
        columns=SUMMARY_COLUMNS,
    )


def write_metrics_csv(report: MetricsReport, output_path: str) -> str:
    """Écrit le tableau par stratégie puis la ligne de synthèse."""
    try:
        metrics_frame(report).to_csv(output_path, index=False)
        with open(output_path, "a", encoding="utf-8", newline="") as handle:
            summary_frame(report).to_csv(handle, index=False)
        logger.info(f"Métriques écrites dans {output_path}")
        return output_path
    except Exception as e:
        logger.error(f"Erreur lors de l'écriture des métriques : {e}", exc_info=True)
        raise
