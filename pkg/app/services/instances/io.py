"""
Lecture et écriture des fichiers d'instance et de flot (JSON), import CSV.

Le chemin "-" désigne l'entrée ou la sortie standard.
"""

import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from app.core.exceptions import InstanceFormatError
from app.models.demand import Commodity, ElasticCurve, Group, OdDemand, TimeWindow
from app.models.flow import OUTSIDE, Flow, is_outside
from app.models.instance import Instance, PenaltyDefaults, PeriodicBlock
from app.models.network import Station, Stop, Trip
from app.schemas.instance import (
    CommoditySchema,
    DefaultsSchema,
    FlowEntrySchema,
    FlowFile,
    GroupSchema,
    InstanceFile,
    OdDemandSchema,
    PeriodicSchema,
    StationSchema,
    StopSchema,
    TripSchema,
)
from app.utils.logs import logger
from app.utils.rational import parse_rational

TRIPS_COLUMNS = ["trip_id", "seq", "station", "arr_sec", "dep_sec", "capacity"]
DEMAND_COLUMNS = ["origin", "destination", "volume"]
STATIONS_COLUMNS = ["station_id", "name"]


def _location(loc: Sequence) -> str:
    text = ""
    for part in loc:
        text += f"[{part}]" if isinstance(part, int) else (f".{part}" if text else str(part))
    return text


def _format_error(error: ValidationError) -> InstanceFormatError:
    first = error.errors()[0]
    return InstanceFormatError(_location(first["loc"]), first["msg"])


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def _write_text(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text + "\n")
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text + "\n")


# --- Instances -------------------------------------------------------------


def _trip(schema: TripSchema) -> Trip:
    return Trip(
        id=schema.id,
        capacity=schema.capacity,
        stops=tuple(Stop(s.station, s.arrival, s.departure) for s in schema.stops),
    )


def _check_station(station: str, known: set, path: str) -> None:
    if station not in known:
        raise InstanceFormatError(path, f"station inconnue {station!r}")


def to_instance(document: InstanceFile) -> Instance:
    """Résout les valeurs par défaut et les références de stations d'un document validé."""
    known = {s.id for s in document.stations}
    if len(known) != len(document.stations):
        raise InstanceFormatError("stations", "identifiants de station dupliqués")
    defaults = document.defaults

    for k, trip in enumerate(document.trips):
        for m, stop in enumerate(trip.stops):
            _check_station(stop.station, known, f"trips[{k}].stops[{m}].station")
    if document.periodic is not None:
        for k, trip in enumerate(document.periodic.templates):
            for m, stop in enumerate(trip.stops):
                _check_station(stop.station, known, f"periodic.templates[{k}].stops[{m}].station")
    for field_name in ("commodities", "groups", "od_demands"):
        for k, entry in enumerate(getattr(document, field_name)):
            _check_station(entry.origin, known, f"{field_name}[{k}].origin")
            _check_station(entry.destination, known, f"{field_name}[{k}].destination")

    def pick(value: Optional[Fraction], default: Fraction) -> Fraction:
        return default if value is None else value

    commodities = tuple(
        Commodity(
            id=c.id,
            origin=c.origin,
            destination=c.destination,
            window=TimeWindow(*c.window),
            target=c.target,
            beta=pick(c.beta, defaults.beta),
            gamma_late=pick(c.gamma_late, defaults.gamma_late),
            gamma_early=pick(c.gamma_early, defaults.gamma_early),
            demand=c.demand,
            outside_cost=pick(c.outside_cost, defaults.outside_cost),
        )
        for c in document.commodities
    )
    groups = []
    for k, g in enumerate(document.groups):
        try:
            curve = ElasticCurve(tuple((cost, volume) for cost, volume in g.elastic))
        except ValueError as e:
            raise InstanceFormatError(f"groups[{k}].elastic", str(e)) from e
        groups.append(
            Group(
                id=g.id,
                origin=g.origin,
                destination=g.destination,
                window=TimeWindow(*g.window),
                target=g.target,
                beta=pick(g.beta, defaults.beta),
                gamma_late=pick(g.gamma_late, defaults.gamma_late),
                gamma_early=pick(g.gamma_early, defaults.gamma_early),
                curve=curve,
            )
        )
    periodic = None
    if document.periodic is not None:
        periodic = PeriodicBlock(
            period=document.periodic.period,
            horizon=tuple(document.periodic.horizon),
            templates=tuple(_trip(t) for t in document.periodic.templates),
        )
    return Instance(
        name=document.name,
        description=document.description,
        stations=tuple(Station(s.id, s.name) for s in document.stations),
        trips=tuple(_trip(t) for t in document.trips),
        commodities=commodities,
        groups=tuple(groups),
        od_demands=tuple(OdDemand(o.origin, o.destination, o.volume) for o in document.od_demands),
        periodic=periodic,
        defaults=PenaltyDefaults(
            beta=defaults.beta,
            gamma_late=defaults.gamma_late,
            gamma_early=defaults.gamma_early,
            outside_cost=defaults.outside_cost,
        ),
    )


def _trip_schema(trip: Trip) -> TripSchema:
    return TripSchema(
        id=trip.id,
        capacity=trip.capacity,
        stops=[StopSchema(station=s.station, arrival=s.arrival, departure=s.departure) for s in trip.stops],
    )


def to_document(instance: Instance) -> InstanceFile:
    """Forme fichier d'une instance ; tous les coefficients sont écrits explicitement."""
    defaults = instance.defaults
    return InstanceFile(
        name=instance.name,
        description=instance.description,
        defaults=DefaultsSchema(
            beta=defaults.beta,
            gamma_late=defaults.gamma_late,
            gamma_early=defaults.gamma_early,
            outside_cost=defaults.outside_cost,
        ),
        stations=[StationSchema(id=s.id, name=s.name) for s in instance.stations],
        trips=[_trip_schema(t) for t in instance.trips],
        periodic=(
            PeriodicSchema(
                period=instance.periodic.period,
                horizon=instance.periodic.horizon,
                templates=[_trip_schema(t) for t in instance.periodic.templates],
            )
            if instance.periodic is not None
            else None
        ),
        commodities=[
            CommoditySchema(
                id=c.id,
                origin=c.origin,
                destination=c.destination,
                window=(c.window.lo, c.window.hi),
                target=c.target,
                beta=c.beta,
                gamma_late=c.gamma_late,
                gamma_early=c.gamma_early,
                demand=c.demand,
                outside_cost=c.outside_cost,
            )
            for c in instance.commodities
        ],
        groups=[
            GroupSchema(
                id=g.id,
                origin=g.origin,
                destination=g.destination,
                window=(g.window.lo, g.window.hi),
                target=g.target,
                beta=g.beta,
                gamma_late=g.gamma_late,
                gamma_early=g.gamma_early,
                elastic=list(g.curve.breakpoints),
            )
            for g in instance.groups
        ],
        od_demands=[
            OdDemandSchema(origin=o.origin, destination=o.destination, volume=o.volume)
            for o in instance.od_demands
        ],
    )


def parse_instance(text: str) -> Instance:
    """
    Lit un document d'instance JSON.

    Raises:
        InstanceFormatError: document invalide, avec le chemin de l'élément fautif.
    """
    try:
        document = InstanceFile.model_validate_json(text)
    except ValidationError as e:
        raise _format_error(e) from e
    return to_instance(document)


def serialize_instance(instance: Instance) -> str:
    return to_document(instance).model_dump_json(indent=2)


def load_instance(path: str) -> Instance:
    try:
        instance = parse_instance(_read_text(path))
    except InstanceFormatError:
        raise
    except Exception as e:
        logger.error(f"Erreur lors de la lecture de l'instance {path} : {e}", exc_info=True)
        raise
    logger.info(f"Instance {instance.name or path!r} chargée : {len(instance.trips)} courses")
    return instance


def save_instance(instance: Instance, path: str) -> str:
    try:
        _write_text(serialize_instance(instance), path)
        logger.debug(f"Instance écrite : {path}")
        return path
    except Exception as e:
        logger.error(f"Erreur lors de l'écriture de l'instance {path} : {e}", exc_info=True)
        raise


# --- Flots -----------------------------------------------------------------


def parse_flow(text: str) -> Flow:
    try:
        document = FlowFile.model_validate_json(text)
    except ValidationError as e:
        raise _format_error(e) from e
    return Flow.from_items(
        (entry.commodity, OUTSIDE if entry.path == "outside" else tuple(entry.path), entry.volume)
        for entry in document.entries
    )


def serialize_flow(flow: Flow, instance_name: str = "") -> str:
    entries = [
        FlowEntrySchema(
            commodity=commodity_id,
            path="outside" if is_outside(path) else list(path),
            volume=value,
        )
        for (commodity_id, path), value in sorted(flow.entries.items())
    ]
    return FlowFile(instance=instance_name, entries=entries).model_dump_json(indent=2)


def load_flow(path: str) -> Flow:
    try:
        return parse_flow(_read_text(path))
    except InstanceFormatError:
        raise
    except Exception as e:
        logger.error(f"Erreur lors de la lecture du flot {path} : {e}", exc_info=True)
        raise


def save_flow(flow: Flow, path: str, instance_name: str = "") -> str:
    try:
        _write_text(serialize_flow(flow, instance_name), path)
        logger.info(f"✅ Flot écrit : {path} ({len(flow)} entrées)")
        return path
    except Exception as e:
        logger.error(f"Erreur lors de l'écriture du flot {path} : {e}", exc_info=True)
        raise


# --- Import CSV ------------------------------------------------------------


def _require_columns(frame: pd.DataFrame, columns: List[str], path: str) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InstanceFormatError(path, f"colonnes manquantes : {', '.join(missing)}")


def _optional_int(value) -> Optional[int]:
    if pd.isna(value) or str(value).strip() == "":
        return None
    return int(value)


def import_csv(
    stations_path: str,
    trips_path: str,
    demand_path: str,
    name: str = "",
    defaults: Optional[PenaltyDefaults] = None,
) -> Instance:
    """
    Construit une instance à partir de trois fichiers CSV.

    Args:
        stations_path: colonnes station_id,name
        trips_path: colonnes trip_id,seq,station,arr_sec,dep_sec,capacity
        demand_path: colonnes origin,destination,volume (demande nominale par OD)

    Returns:
        Une instance sans commodités ; la demande nominale est portée par
        `od_demands`, à répartir avec apply_demand_profile.
    """
    try:
        stations_frame = pd.read_csv(stations_path, dtype=str, keep_default_na=False)
        trips_frame = pd.read_csv(trips_path, dtype=str, keep_default_na=False)
        demand_frame = pd.read_csv(demand_path, dtype=str, keep_default_na=False)
    except Exception as e:
        logger.error(f"Erreur lors de la lecture des fichiers CSV : {e}", exc_info=True)
        raise

    _require_columns(stations_frame, STATIONS_COLUMNS[:1], stations_path)
    _require_columns(trips_frame, TRIPS_COLUMNS, trips_path)
    _require_columns(demand_frame, DEMAND_COLUMNS, demand_path)

    stations = tuple(
        Station(row["station_id"], row.get("name", "") or "") for _, row in stations_frame.iterrows()
    )
    known = {s.id for s in stations}

    trips: List[Trip] = []
    trips_frame = trips_frame.assign(seq=trips_frame["seq"].astype(int))
    for trip_id, rows in trips_frame.sort_values(["trip_id", "seq"]).groupby("trip_id", sort=False):
        capacities = set(rows["capacity"])
        if len(capacities) != 1:
            raise InstanceFormatError(f"{trips_path}:{trip_id}", "capacité non constante sur la course")
        stops = []
        for _, row in rows.iterrows():
            _check_station(row["station"], known, f"{trips_path}:{trip_id}")
            stops.append(Stop(row["station"], _optional_int(row["arr_sec"]), _optional_int(row["dep_sec"])))
        trips.append(Trip(id=str(trip_id), capacity=parse_rational(capacities.pop()), stops=tuple(stops)))

    od_demands = []
    for k, row in demand_frame.iterrows():
        _check_station(row["origin"], known, f"{demand_path}[{k}].origin")
        _check_station(row["destination"], known, f"{demand_path}[{k}].destination")
        od_demands.append(OdDemand(row["origin"], row["destination"], parse_rational(row["volume"])))

    logger.info(f"Import CSV : {len(stations)} stations, {len(trips)} courses, {len(od_demands)} OD")
    return Instance(
        name=name,
        stations=stations,
        trips=tuple(trips),
        od_demands=tuple(od_demands),
        defaults=defaults or PenaltyDefaults(),
    )


def instance_summary(instance: Instance) -> Dict[str, object]:
    """Résumé lisible d'une instance (nombre de stations, courses, commodités, demande)."""
    return {
        "name": instance.name,
        "stations": len(instance.stations),
        "trips": len(instance.trips),
        "commodities": len(instance.commodities),
        "groups": len(instance.groups),
        "demand": sum((c.demand for c in instance.commodities), Fraction(0)),
    }
