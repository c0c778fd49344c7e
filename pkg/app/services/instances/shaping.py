"""
Mise en forme de la demande : profil horaire et mise à l'échelle.
"""

from dataclasses import replace
from fractions import Fraction
from typing import List, Sequence, Tuple

import pandas as pd

from app.core.exceptions import DemandProfileError
from app.models.demand import Commodity, ElasticCurve, TimeWindow
from app.models.instance import Instance
from app.utils.logs import logger
from app.utils.rational import parse_rational

HOURS = 24
DAY = 86_400
PER_MINUTE = Fraction(1, 60)


def validate_shares(shares: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    if len(shares) != HOURS:
        raise DemandProfileError(f"{HOURS} parts horaires attendues, {len(shares)} reçues")
    values = tuple(Fraction(share) for share in shares)
    if any(share < 0 for share in values):
        raise DemandProfileError("Part horaire négative")
    total = sum(values, Fraction(0))
    if total != 1:
        raise DemandProfileError(f"Les parts horaires somment à {total}, pas à 1")
    return values


def load_shares(path: str) -> Tuple[Fraction, ...]:
    """
    Lit un profil horaire CSV (colonnes hour,share ; 24 lignes).

    Les parts sont lues comme des rationnels exacts ("1/24" ou "0.05").
    """
    try:
        frame = pd.read_csv(path, dtype=str, comment="#")
    except Exception as e:
        logger.error(f"Erreur lors de la lecture du profil {path} : {e}", exc_info=True)
        raise
    if list(frame.columns[:2]) != ["hour", "share"]:
        raise DemandProfileError(f"Colonnes attendues hour,share dans {path}")
    frame = frame.assign(hour=frame["hour"].astype(int)).sort_values("hour")
    if list(frame["hour"]) != list(range(HOURS)):
        raise DemandProfileError(f"Heures 0..23 attendues une fois chacune dans {path}")
    try:
        shares = [parse_rational(value) for value in frame["share"]]
    except ValueError as e:
        raise DemandProfileError(str(e)) from e
    return validate_shares(shares)


def apply_demand_profile(
    instance: Instance,
    shares: Sequence[Fraction],
    slot: int = 600,
    mode: str = "dtc",
    horizon: Tuple[int, int] = (0, DAY),
) -> Instance:
    """
    Répartit la demande nominale par OD en une commodité par créneau.

    La demande d'un créneau vaut volume · part(heure du créneau) · slot / 3600 ;
    les créneaux de demande nulle sont omis.

    Args:
        shares: 24 parts horaires positives sommant à 1
        slot: durée d'un créneau en secondes, diviseur de 3600
        mode: "dtc" (fenêtre = horizon, pénalités d'étude) ou "fdt" (départ fixe)
        horizon: intervalle [début, fin) des créneaux

    Raises:
        DemandProfileError: parts invalides, créneau ou mode invalide.
    """
    values = validate_shares(shares)
    if slot <= 0 or 3600 % slot:
        raise DemandProfileError(f"Durée de créneau invalide : {slot} s (diviseur de 3600 attendu)")
    if mode not in ("dtc", "fdt"):
        raise DemandProfileError(f"Mode inconnu {mode!r}")
    start, end = horizon
    if not 0 <= start < end:
        raise DemandProfileError(f"Horizon invalide : [{start}, {end})")
    if not instance.od_demands:
        logger.warning("⚠️ Aucune demande OD nominale : profil sans effet")

    fraction_of_hour = Fraction(slot, 3600)
    commodities: List[Commodity] = list(instance.commodities)
    for od in instance.od_demands:
        for t in range(start, end, slot):
            demand = od.volume * values[(t // 3600) % HOURS] * fraction_of_hour
            if demand == 0:
                continue
            if mode == "dtc":
                window, target = TimeWindow(start, end - 1), t
                beta, late, early = PER_MINUTE, 3 * PER_MINUTE, PER_MINUTE
            else:
                window, target = TimeWindow.at(t), t
                beta, late, early = PER_MINUTE, Fraction(0), Fraction(0)
            commodities.append(
                Commodity(
                    id=f"{od.origin}-{od.destination}@{t}",
                    origin=od.origin,
                    destination=od.destination,
                    window=window,
                    target=target,
                    beta=beta,
                    gamma_late=late,
                    gamma_early=early,
                    demand=demand,
                    outside_cost=instance.defaults.outside_cost,
                )
            )
    logger.info(
        f"Profil de demande ({mode}) : {len(instance.od_demands)} OD -> "
        f"{len(commodities) - len(instance.commodities)} commodités"
    )
    return replace(instance, commodities=tuple(commodities), od_demands=())


def scale_demand(instance: Instance, factor: Fraction) -> Instance:
    """Multiplie toutes les demandes (commodités, OD nominales, courbes élastiques) par `factor`."""
    factor = Fraction(factor)
    if factor <= 0:
        raise ValueError(f"Le facteur doit être strictement positif : {factor}")
    groups = tuple(
        replace(
            group,
            curve=ElasticCurve(tuple((cost, volume * factor) for cost, volume in group.curve.breakpoints)),
        )
        for group in instance.groups
    )
    return replace(
        instance,
        commodities=tuple(c.with_changes(demand=c.demand * factor) for c in instance.commodities),
        od_demands=tuple(replace(od, volume=od.volume * factor) for od in instance.od_demands),
        groups=groups,
    )
