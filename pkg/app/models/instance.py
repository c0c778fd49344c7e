from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from app.models.demand import Commodity, Group, OdDemand
from app.models.network import Station, TimeExpandedGraph, Trip


@dataclass(frozen=True)
class PenaltyDefaults:
    beta: Fraction = Fraction(0)
    gamma_late: Fraction = Fraction(0)
    gamma_early: Fraction = Fraction(0)
    outside_cost: Fraction = Fraction(0)


@dataclass(frozen=True)
class PeriodicBlock:
    period: int
    horizon: Tuple[int, int]
    templates: Tuple[Trip, ...]


@dataclass(frozen=True)
class Instance:
    """Contenu d'un fichier d'instance, après validation."""

    name: str
    stations: Tuple[Station, ...]
    trips: Tuple[Trip, ...] = ()
    commodities: Tuple[Commodity, ...] = ()
    groups: Tuple[Group, ...] = ()
    od_demands: Tuple[OdDemand, ...] = ()
    periodic: Optional[PeriodicBlock] = None
    defaults: PenaltyDefaults = PenaltyDefaults()
    description: str = ""


@dataclass
class Problem:
    """
    Graphe espace-temps et commodités discrétisées : l'entrée de tous les solveurs.

    L'ordre canonique des commodités est leur ordre de déclaration.
    """

    graph: TimeExpandedGraph
    commodities: Tuple[Commodity, ...]
    name: str = ""
    index: Dict[str, int] = field(init=False, repr=False)
    _starts: Dict[str, Tuple[int, ...]] = field(init=False, repr=False)
    _destinations: Dict[str, Tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        self.commodities = tuple(self.commodities)
        self.index = {}
        for position, commodity in enumerate(self.commodities):
            if commodity.id in self.index:
                raise ValueError(f"Identifiant de commodité dupliqué : {commodity.id!r}")
            self.index[commodity.id] = position
        self._starts = {}
        self._destinations = {}
        for commodity in self.commodities:
            platforms = self.graph.platforms.get(commodity.origin, ())
            self._starts[commodity.id] = tuple(
                n for n in platforms if self.graph.time(n) in commodity.window
            )
            self._destinations[commodity.id] = self.graph.platforms.get(commodity.destination, ())

    def commodity(self, commodity_id: str) -> Commodity:
        return self.commodities[self.index[commodity_id]]

    def starts(self, commodity_id: str) -> Tuple[int, ...]:
        """Nœuds de quai de l'origine dont l'instant appartient à la fenêtre."""
        return self._starts[commodity_id]

    def destinations(self, commodity_id: str) -> Tuple[int, ...]:
        return self._destinations[commodity_id]

    def order_key(self, commodity_id: str, path: Tuple[int, ...]):
        return (self.index[commodity_id], path)

    def with_commodities(self, commodities: Sequence[Commodity]) -> "Problem":
        return Problem(graph=self.graph, commodities=tuple(commodities), name=self.name)

    @property
    def total_demand(self) -> Fraction:
        return sum((c.demand for c in self.commodities), Fraction(0))
