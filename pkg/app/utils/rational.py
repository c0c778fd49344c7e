from fractions import Fraction
from typing import Optional, Union

RationalLike = Union[str, int, Fraction]


def parse_rational(value: RationalLike) -> Fraction:
    """
    Convertit une valeur d'instance en Fraction exacte.

    Accepte les entiers, les chaînes "num/den" et les décimaux ("0.25").
    Les flottants sont refusés : ils ne sont pas exacts.
    """
    if isinstance(value, bool):
        raise ValueError(f"Valeur rationnelle invalide : {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("Valeur rationnelle vide")
        try:
            return Fraction(text)
        except ZeroDivisionError as e:
            raise ValueError(f"Dénominateur nul : {value!r}") from e
    raise ValueError(f"Valeur rationnelle invalide : {value!r}")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_optional(value: Optional[Fraction], missing: str = "inf") -> str:
    return missing if value is None else format_rational(value)
