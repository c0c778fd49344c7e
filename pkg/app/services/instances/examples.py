"""
Réseaux d'exemple du catalogue.

Les horaires sont exprimés en heures (rationnelles) puis convertis en
secondes ; la capacité vaut 1 sauf mention contraire.
"""

from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

from app.models.demand import Commodity, TimeWindow
from app.models.instance import Instance, PenaltyDefaults
from app.models.network import Station, Stop, Trip

HOUR = 3600
PER_HOUR = Fraction(1, HOUR)

Hours = Union[int, Fraction]
StopSpec = Tuple[str, Optional[Hours], Optional[Hours]]


def seconds(hours: Hours) -> int:
    value = Fraction(hours) * HOUR
    if value.denominator != 1:
        raise ValueError(f"Horaire non entier en secondes : {hours} h")
    return int(value)


def _trip(trip_id: str, *stops: StopSpec, capacity: Fraction = Fraction(1)) -> Trip:
    return Trip(
        id=trip_id,
        capacity=capacity,
        stops=tuple(
            Stop(
                station,
                None if arrival is None else seconds(arrival),
                None if departure is None else seconds(departure),
            )
            for station, arrival, departure in stops
        ),
    )


def _commodity(
    commodity_id: str,
    origin: str,
    destination: str,
    window: Tuple[Hours, Hours],
    demand: Fraction,
    outside_cost: Fraction,
    beta: Fraction = Fraction(0),
    gamma_late: Fraction = Fraction(0),
    target: Hours = 0,
) -> Commodity:
    return Commodity(
        id=commodity_id,
        origin=origin,
        destination=destination,
        window=TimeWindow(seconds(window[0]), seconds(window[1])),
        target=seconds(target),
        beta=beta,
        gamma_late=gamma_late,
        gamma_early=Fraction(0),
        demand=Fraction(demand),
        outside_cost=Fraction(outside_cost),
    )


def _stations(*names: str) -> Tuple[Station, ...]:
    return tuple(Station(name) for name in names)


def fig1() -> Instance:
    """Deux courses, une commodité a→c de demande 2 ; coût = retard à l'arrivée."""
    return Instance(
        name="fig1",
        description="Deux courses planifiées ; coût social attendu 10,5",
        stations=_stations("a", "b", "c", "d"),
        trips=(
            _trip("red", ("a", None, 1), ("b", 3, 4), ("c", 6, 7), ("d", 8, None)),
            _trip("blue", ("a", None, Fraction(5, 2)), ("c", Fraction(9, 2), None)),
        ),
        commodities=(
            _commodity("ac", "a", "c", (1, 1), Fraction(2), Fraction(100), gamma_late=PER_HOUR),
        ),
        defaults=PenaltyDefaults(gamma_late=PER_HOUR, outside_cost=Fraction(100)),
    )


def fig4() -> Instance:
    """Choix de l'heure de départ sans équilibre : trois stratégies utiles."""
    return Instance(
        name="fig4",
        description="Aucun équilibre avec choix de l'heure de départ",
        stations=_stations("s", "v", "t"),
        trips=(
            _trip("blue", ("s", None, 1), ("v", 2, 2), ("s", 3, 3), ("t", 4, None)),
            _trip("red", ("s", None, 1), ("t", 5, None)),
        ),
        commodities=(
            _commodity("st", "s", "t", (0, 6), Fraction(2), Fraction(100), beta=PER_HOUR),
        ),
        defaults=PenaltyDefaults(beta=PER_HOUR, outside_cost=Fraction(100)),
    )


def fig6() -> Instance:
    """Deux équilibres de coûts sociaux 6 et 7."""
    return Instance(
        name="fig6",
        description="Deux équilibres de coûts sociaux différents",
        stations=_stations("s", "v", "t"),
        trips=(
            _trip("blue", ("s", None, 1), ("v", Fraction(3, 2), Fraction(3, 2)), ("s", 2, None)),
            _trip("red", ("v", None, 2), ("t", Fraction(9, 2), None)),
            _trip("green", ("s", None, Fraction(5, 2)), ("t", Fraction(7, 2), None)),
            _trip("pink", ("s", None, Fraction(9, 2)), ("t", Fraction(11, 2), None)),
        ),
        commodities=(
            _commodity("st", "s", "t", (1, 1), Fraction(2), Fraction(100), beta=PER_HOUR, target=1),
        ),
        defaults=PenaltyDefaults(beta=PER_HOUR, outside_cost=Fraction(100)),
    )


def fig7(delta: Hours = 1) -> Instance:
    """
    Prix de la stabilité non borné : l'équilibre coûte 9 + Δ, l'optimum 9.

    Args:
        delta: retard (en heures) de la course rouge, Δ·3600 entier.
    """
    delta = Fraction(delta)
    if delta < 0:
        raise ValueError(f"Δ doit être positif ou nul : {delta}")
    return Instance(
        name=f"fig7-{delta}".replace("/", "_"),
        description=f"Prix de la stabilité (9 + {delta}) / 9",
        stations=_stations("s", "v", "t"),
        trips=(
            _trip("blue", ("s", None, 1), ("v", 2, 2), ("t", 5, None)),
            _trip("pink", ("v", None, 2), ("s", 3, 3), ("t", 4, None)),
            _trip("red", ("s", None, 4), ("t", 5 + delta, None)),
        ),
        commodities=(
            _commodity("st", "s", "t", (1, 1), Fraction(2), Fraction(1000), gamma_late=PER_HOUR),
        ),
        defaults=PenaltyDefaults(gamma_late=PER_HOUR, outside_cost=Fraction(1000)),
    )


def fig9(epsilon: Fraction = Fraction(1, 64)) -> Instance:
    """Petits pas de l'heuristique : la course verte a une capacité 1 − ε."""
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ValueError(f"ε doit appartenir à ]0, 1[ : {epsilon}")
    outside = {"c1": 50, "c2": 90, "c3": 100, "c4": 50}
    layout = (
        ("c1", "s1", "t13", 1),
        ("c2", "s2", "t24", 3),
        ("c3", "s3", "t13", 3),
        ("c4", "s4", "t24", 1),
    )
    return Instance(
        name=f"fig9-{epsilon}".replace("/", "_"),
        description=f"Petits pas de l'heuristique (ε = {epsilon})",
        stations=_stations("s1", "s2", "s3", "s4", "v", "t13", "t24"),
        trips=(
            _trip("red", ("s1", None, 1), ("s2", 2, 3), ("v", 4, 5), ("t24", 6, None)),
            _trip("green", ("s4", None, 1), ("s3", 2, 3), ("v", 4, None), capacity=1 - epsilon),
            _trip("blue", ("v", None, 5), ("t13", 6, None)),
        ),
        commodities=tuple(
            _commodity(cid, o, d, (hour, hour), Fraction(1), Fraction(outside[cid]), beta=PER_HOUR)
            for cid, o, d, hour in layout
        ),
        defaults=PenaltyDefaults(beta=PER_HOUR),
    )


def fig10() -> Instance:
    """Comportement cyclique de l'heuristique, trois commodités de demande 1."""
    layout = (
        ("c1", "s1", "t1", 1),
        ("c2", "s2", "t23", 2),
        ("c3", "s3", "t23", 5),
    )
    return Instance(
        name="fig10",
        description="Cycle infini de l'heuristique sans détection",
        stations=_stations("s1", "s2", "s3", "u", "v", "w", "t1", "t23"),
        trips=(
            _trip("green", ("s1", None, 1), ("s2", 2, 2), ("u", 4, 4), ("v", 5, None)),
            _trip("blue", ("s3", None, 5), ("v", 7, 7), ("t1", 8, 8), ("w", 9, None)),
            _trip("red", ("u", None, 8), ("w", 11, 11), ("t23", 12, None)),
        ),
        commodities=tuple(
            _commodity(cid, o, d, (hour, hour), Fraction(1), Fraction(100), gamma_late=PER_HOUR)
            for cid, o, d, hour in layout
        ),
        defaults=PenaltyDefaults(gamma_late=PER_HOUR, outside_cost=Fraction(100)),
    )


CATALOGUE: Dict[str, Callable[..., Instance]] = {
    "fig1": fig1,
    "fig4": fig4,
    "fig6": fig6,
    "fig7": fig7,
    "fig9": fig9,
    "fig10": fig10,
}
PARAMETRIC = {"fig7", "fig9"}


def gen_example(name: str, param: Optional[Fraction] = None) -> Instance:
    """
    Instance du catalogue par nom.

    Raises:
        KeyError: nom inconnu.
        ValueError: paramètre fourni pour un exemple non paramétré, ou hors domaine.
    """
    if name not in CATALOGUE:
        known = ", ".join(sorted(CATALOGUE))
        raise KeyError(f"Exemple inconnu {name!r} (disponibles : {known})")
    if param is None:
        return CATALOGUE[name]()
    if name not in PARAMETRIC:
        raise ValueError(f"L'exemple {name} n'accepte pas de paramètre")
    return CATALOGUE[name](Fraction(param))


def catalogue_names() -> Sequence[str]:
    return tuple(CATALOGUE)
