import random
from fractions import Fraction
from typing import List

from app.models.demand import Commodity, TimeWindow
from app.models.instance import Instance, PenaltyDefaults
from app.models.network import Station, Stop, Trip

MINUTE = 60


def random_instance(
    rng: random.Random,
    stations: int = 4,
    trips: int = 5,
    commodities: int = 2,
    departure_choice: bool = False,
    max_stops: int = 3,
) -> Instance:
    """
    Petite instance aléatoire pour les tests de propriétés et `gen --random`.

    Les horaires sont tirés en minutes, les capacités et demandes parmi de
    petits rationnels. Chaque origine de commodité est une station d'où part
    au moins une course, à un instant de départ réel.

    Args:
        rng: générateur pseudo-aléatoire (graine maîtrisée par l'appelant)
        departure_choice: fenêtre de départ d'une heure au lieu d'un départ fixe
    """
    if stations < 2 or trips < 1 or commodities < 1 or max_stops < 2:
        raise ValueError("Paramètres de génération trop petits")
    names = [f"S{k}" for k in range(stations)]
    built: List[Trip] = []
    for k in range(trips):
        count = rng.randint(2, max_stops)
        route = [rng.choice(names)]
        while len(route) < count:
            route.append(rng.choice([name for name in names if name != route[-1]]))
        time = rng.randint(0, 60) * MINUTE
        stops = []
        for index, station in enumerate(route):
            arrival = None if index == 0 else time
            if index == count - 1:
                departure = None
            else:
                time += rng.randint(0, 2) * MINUTE if index > 0 else 0
                departure = time
                time += rng.randint(5, 30) * MINUTE
            stops.append(Stop(station, arrival, departure))
        capacity = Fraction(rng.randint(1, 4), rng.choice((1, 2)))
        built.append(Trip(f"T{k}", capacity, tuple(stops)))

    events = [(stop.station, stop.departure) for trip in built for stop in trip.stops if stop.departure is not None]
    demand_list: List[Commodity] = []
    for k in range(commodities):
        origin, departure = rng.choice(events)
        destination = rng.choice([name for name in names if name != origin])
        if departure_choice:
            window = TimeWindow(max(0, departure - 30 * MINUTE), departure + 30 * MINUTE)
            gamma_late, gamma_early = Fraction(3, MINUTE), Fraction(1, MINUTE)
        else:
            window = TimeWindow.at(departure)
            gamma_late = gamma_early = Fraction(0)
        demand_list.append(
            Commodity(
                id=f"K{k}",
                origin=origin,
                destination=destination,
                window=window,
                target=departure + rng.randint(10, 90) * MINUTE,
                beta=Fraction(1, MINUTE),
                gamma_late=gamma_late,
                gamma_early=gamma_early,
                demand=Fraction(rng.randint(1, 6), 2),
                outside_cost=Fraction(rng.randint(120, 400)),
            )
        )
    return Instance(
        name=f"random-{'dtc' if departure_choice else 'fdt'}",
        stations=tuple(Station(name) for name in names),
        trips=tuple(built),
        commodities=tuple(demand_list),
        defaults=PenaltyDefaults(beta=Fraction(1, MINUTE), outside_cost=Fraction(200)),
    )
