from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple

Path = Tuple[int, ...]
Key = Tuple[str, Path]

# L'option extérieure ne charge aucune arête
OUTSIDE: Path = ()

ZERO = Fraction(0)


def is_outside(path: Path) -> bool:
    return len(path) == 0


class Flow:
    """
    Flot par chemins : (commodité, stratégie) -> volume rationnel positif.

    Les charges d'arêtes sont maintenues incrémentalement. Un Flow est
    immuable ; `add` et `apply` retournent de nouveaux instantanés.
    """

    __slots__ = ("_entries", "_loads")

    def __init__(self, entries: Optional[Mapping[Key, Fraction]] = None, _loads=None):
        clean: Dict[Key, Fraction] = {}
        for key, value in (entries or {}).items():
            value = Fraction(value)
            if value < 0:
                raise ValueError(f"Volume négatif pour {key} : {value}")
            if value != 0:
                clean[key] = value
        self._entries = clean
        if _loads is None:
            _loads = {}
            for (_, path), value in clean.items():
                for edge_id in path:
                    _loads[edge_id] = _loads.get(edge_id, ZERO) + value
            _loads = {e: v for e, v in _loads.items() if v != 0}
        self._loads = _loads

    @property
    def entries(self) -> Mapping[Key, Fraction]:
        return MappingProxyType(self._entries)

    @property
    def loads(self) -> Mapping[int, Fraction]:
        return MappingProxyType(self._loads)

    def value(self, commodity_id: str, path: Path) -> Fraction:
        return self._entries.get((commodity_id, path), ZERO)

    def load(self, edge_id: int) -> Fraction:
        return self._loads.get(edge_id, ZERO)

    def volume(self, commodity_id: str) -> Fraction:
        return sum(
            (v for (i, _), v in self._entries.items() if i == commodity_id), ZERO
        )

    def paths_of(self, commodity_id: str) -> Dict[Path, Fraction]:
        return {p: v for (i, p), v in self._entries.items() if i == commodity_id}

    def add(self, commodity_id: str, path: Path, delta: Fraction) -> "Flow":
        """Ajoute `delta` (éventuellement négatif) à une entrée."""
        return self.apply({(commodity_id, path): Fraction(delta)})

    def apply(self, changes: Mapping[Key, Fraction], step: Fraction = Fraction(1)) -> "Flow":
        entries = dict(self._entries)
        loads = dict(self._loads)
        for key, delta in changes.items():
            delta = delta * step
            if delta == 0:
                continue
            value = entries.get(key, ZERO) + delta
            if value < 0:
                raise ValueError(f"Volume négatif après modification de {key} : {value}")
            if value == 0:
                entries.pop(key, None)
            else:
                entries[key] = value
            for edge_id in key[1]:
                load = loads.get(edge_id, ZERO) + delta
                if load == 0:
                    loads.pop(edge_id, None)
                else:
                    loads[edge_id] = load
        flow = Flow.__new__(Flow)
        flow._entries = entries
        flow._loads = loads
        return flow

    def used(self) -> Iterator[Key]:
        return iter(self._entries)

    def __iter__(self) -> Iterator[Key]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, Flow) and self._entries == other._entries

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        return f"Flow({self._entries!r})"

    @classmethod
    def from_items(cls, items: Iterable[Tuple[str, Path, Fraction]]) -> "Flow":
        entries: Dict[Key, Fraction] = {}
        for commodity_id, path, value in items:
            key = (commodity_id, tuple(path))
            entries[key] = entries.get(key, ZERO) + Fraction(value)
        return cls(entries)


class Direction:
    """
    Variation signée et creuse du flot par chemins.

    Équilibrée si, pour chaque commodité, la somme des variations est nulle.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Optional[Mapping[Key, Fraction]] = None):
        self._entries: Dict[Key, Fraction] = {
            key: Fraction(v) for key, v in (entries or {}).items() if v != 0
        }

    @classmethod
    def elementary(cls, commodity_id: str, source: Path, target: Path) -> "Direction":
        if source == target:
            return cls()
        return cls({(commodity_id, target): Fraction(1), (commodity_id, source): Fraction(-1)})

    @property
    def entries(self) -> Mapping[Key, Fraction]:
        return MappingProxyType(self._entries)

    def value(self, commodity_id: str, path: Path) -> Fraction:
        return self._entries.get((commodity_id, path), ZERO)

    def edge_delta(self, edge_id: int) -> Fraction:
        return sum((v for (_, p), v in self._entries.items() if edge_id in p), ZERO)

    def edge_deltas(self) -> Dict[int, Fraction]:
        deltas: Dict[int, Fraction] = {}
        for (_, path), value in self._entries.items():
            for edge_id in path:
                deltas[edge_id] = deltas.get(edge_id, ZERO) + value
        return deltas

    def is_balanced(self) -> bool:
        totals: Dict[str, Fraction] = {}
        for (commodity_id, _), value in self._entries.items():
            totals[commodity_id] = totals.get(commodity_id, ZERO) + value
        return all(total == 0 for total in totals.values())

    def is_zero(self) -> bool:
        return not self._entries

    def add(self, commodity_id: str, path: Path, delta: Fraction) -> "Direction":
        entries = dict(self._entries)
        entries[(commodity_id, path)] = entries.get((commodity_id, path), ZERO) + delta
        return Direction(entries)

    def scaled(self, factor: Fraction) -> "Direction":
        return Direction({k: v * factor for k, v in self._entries.items()})

    def __add__(self, other: "Direction") -> "Direction":
        entries = dict(self._entries)
        for key, value in other._entries.items():
            entries[key] = entries.get(key, ZERO) + value
        return Direction(entries)

    def key(self) -> Tuple[Tuple[str, Path, Fraction], ...]:
        """
        Forme normalisée utilisée pour détecter les cycles : entrées triées,
        divisées par la plus grande valeur absolue. Deux directions
        colinéaires de même sens ont la même clé.
        """
        if not self._entries:
            return ()
        scale = max(abs(v) for v in self._entries.values())
        return tuple(sorted((i, p, v / scale) for (i, p), v in self._entries.items()))

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, Direction) and self._entries == other._entries

    def __hash__(self):
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Direction({self._entries!r})"
