class TransitFluxError(Exception):
    """Erreur de base du projet."""


class InvalidTripError(TransitFluxError):
    def __init__(self, trip_id: str, reason: str):
        self.trip_id = trip_id
        self.reason = reason
        super().__init__(f"Course {trip_id!r} invalide : {reason}")


class UnknownStationError(TransitFluxError):
    def __init__(self, station_id: str, context: str = ""):
        self.station_id = station_id
        suffix = f" ({context})" if context else ""
        super().__init__(f"Station inconnue : {station_id!r}{suffix}")


class InstanceFormatError(TransitFluxError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InvalidStrategyError(TransitFluxError):
    pass


class DeviationError(TransitFluxError):
    pass


class DepartureTimeError(TransitFluxError):
    pass


class CostEnumerationOverflow(TransitFluxError):
    def __init__(self, group_id: str, cap: int):
        self.cap = cap
        super().__init__(f"Plus de {cap} coûts distincts pour le groupe {group_id!r}")


class PathEnumerationOverflow(TransitFluxError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"Plus de {cap} stratégies à énumérer")


class UnboundedStepError(TransitFluxError):
    pass


class DirectionError(TransitFluxError):
    pass


class InvariantViolation(TransitFluxError):
    pass


class LPError(TransitFluxError):
    pass


class ReductionError(TransitFluxError):
    pass


class FormulaError(TransitFluxError):
    pass


class DemandProfileError(TransitFluxError):
    pass
