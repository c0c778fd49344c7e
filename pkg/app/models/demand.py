from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Tuple


@dataclass(frozen=True)
class TimeWindow:
    """Intervalle entier fermé [lo, hi] des instants de départ admissibles."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"Fenêtre de départ vide : [{self.lo}, {self.hi}]")

    def __contains__(self, time: int) -> bool:
        return self.lo <= time <= self.hi

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    @classmethod
    def at(cls, time: int) -> "TimeWindow":
        return cls(time, time)


@dataclass(frozen=True)
class Commodity:
    id: str
    origin: str
    destination: str
    window: TimeWindow
    target: int
    beta: Fraction
    gamma_late: Fraction
    gamma_early: Fraction
    demand: Fraction
    outside_cost: Fraction

    def with_changes(self, **changes) -> "Commodity":
        return replace(self, **changes)


@dataclass(frozen=True)
class ElasticCurve:
    """
    Fonction en escalier non croissante coût -> volume, continue à droite.

    Args:
        breakpoints: couples (coût, volume), le premier coût vaut 0 et le
            dernier volume vaut 0 (son coût est π_max).
    """

    breakpoints: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        points = self.breakpoints
        if len(points) < 2:
            raise ValueError("Une courbe élastique demande au moins deux points")
        if points[0][0] != 0:
            raise ValueError("Le premier point de la courbe doit être au coût 0")
        if points[-1][1] != 0:
            raise ValueError("Le dernier point de la courbe doit avoir un volume nul")
        for (c0, v0), (c1, v1) in zip(points, points[1:]):
            if c1 <= c0:
                raise ValueError("Les coûts de la courbe doivent être strictement croissants")
            if v1 > v0:
                raise ValueError("La courbe élastique doit être non croissante")
        if any(volume < 0 for _, volume in points):
            raise ValueError("Volume négatif dans la courbe élastique")

    @property
    def max_cost(self) -> Fraction:
        return self.breakpoints[-1][0]

    def value(self, cost: Fraction) -> Fraction:
        result = self.breakpoints[0][1]
        for breakpoint_cost, volume in self.breakpoints:
            if breakpoint_cost <= cost:
                result = volume
            else:
                break
        return result


@dataclass(frozen=True)
class Group:
    id: str
    origin: str
    destination: str
    window: TimeWindow
    target: int
    beta: Fraction
    gamma_late: Fraction
    gamma_early: Fraction
    curve: ElasticCurve


@dataclass(frozen=True)
class OdDemand:
    origin: str
    destination: str
    volume: Fraction
