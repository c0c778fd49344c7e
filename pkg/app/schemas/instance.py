from fractions import Fraction
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, model_validator

from app.utils.rational import format_rational, parse_rational

FORMAT_VERSION = 1

Rational = Annotated[
    Fraction,
    BeforeValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
]
Seconds = Annotated[int, Field(ge=0)]


class SchemaModel(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


class StationSchema(SchemaModel):
    id: str
    name: str = ""


class StopSchema(SchemaModel):
    station: str
    arrival: Optional[Seconds] = None
    departure: Optional[Seconds] = None


class TripSchema(SchemaModel):
    id: str
    capacity: Rational
    stops: List[StopSchema]


class DefaultsSchema(SchemaModel):
    beta: Rational = Fraction(0)
    gamma_late: Rational = Fraction(0)
    gamma_early: Rational = Fraction(0)
    outside_cost: Rational = Fraction(0)


class PeriodicSchema(SchemaModel):
    period: Annotated[int, Field(gt=0)]
    horizon: Tuple[Seconds, Seconds]
    templates: List[TripSchema]


class DemandSchema(SchemaModel):
    """Champs communs aux commodités et aux groupes élastiques."""

    id: str
    origin: str
    destination: str
    window: Tuple[Seconds, Seconds]
    target: Seconds = 0
    beta: Optional[Rational] = None
    gamma_late: Optional[Rational] = None
    gamma_early: Optional[Rational] = None

    @model_validator(mode="after")
    def check_endpoints(self):
        if self.origin == self.destination:
            raise ValueError(f"origine et destination identiques ({self.origin!r})")
        if self.window[0] > self.window[1]:
            raise ValueError(f"fenêtre de départ vide {list(self.window)}")
        return self


class CommoditySchema(DemandSchema):
    demand: Rational
    outside_cost: Optional[Rational] = None


class GroupSchema(DemandSchema):
    elastic: List[Tuple[Rational, Rational]]


class OdDemandSchema(SchemaModel):
    origin: str
    destination: str
    volume: Rational


class InstanceFile(SchemaModel):
    version: Literal[1] = FORMAT_VERSION
    name: str = ""
    description: str = ""
    defaults: DefaultsSchema = DefaultsSchema()
    stations: List[StationSchema]
    trips: List[TripSchema] = []
    periodic: Optional[PeriodicSchema] = None
    commodities: List[CommoditySchema] = []
    groups: List[GroupSchema] = []
    od_demands: List[OdDemandSchema] = []


class FlowEntrySchema(SchemaModel):
    commodity: str
    path: Union[Literal["outside"], List[Annotated[int, Field(ge=0)]]]
    volume: Rational


class FlowFile(SchemaModel):
    version: Literal[1] = FORMAT_VERSION
    instance: str = ""
    entries: List[FlowEntrySchema] = []
