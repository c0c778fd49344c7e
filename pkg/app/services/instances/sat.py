"""
Générateur de réseaux à partir de formules 3-SAT.

Chaque variable x_i reçoit deux courses (verte = vrai, rouge = faux) de
s_x{i} à t_x{i} ; chaque clause reçoit un gadget dont la chaîne v^n → v^0
emprunte la course du littéral présent, ou une course dédiée sinon.
Les gadgets sont empilés dans le temps entre les origines et les
destinations des variables.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

from app.core.exceptions import FormulaError
from app.models.demand import Commodity, TimeWindow
from app.models.instance import Instance, PenaltyDefaults
from app.models.network import Station, Stop, Trip
from app.utils.logs import logger

UNIT = 60
BETA = Fraction(1, UNIT)
MODES = ("dtc", "fixed")


@dataclass(frozen=True)
class CnfFormula:
    """Formule en forme normale conjonctive ; les littéraux sont des entiers signés 1-indexés."""

    variables: int
    clauses: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.variables < 1:
            raise FormulaError("La formule doit avoir au moins une variable")
        if not self.clauses:
            raise FormulaError("La formule doit avoir au moins une clause")
        for j, clause in enumerate(self.clauses):
            if not 1 <= len(clause) <= 3:
                raise FormulaError(f"Clause {j} : entre 1 et 3 littéraux attendus, {len(clause)} reçus")
            if len(set(clause)) != len(clause):
                raise FormulaError(f"Clause {j} : littéral répété")
            for literal in clause:
                if literal == 0 or abs(literal) > self.variables:
                    raise FormulaError(f"Clause {j} : littéral {literal} hors de 1..{self.variables}")
                if -literal in clause:
                    raise FormulaError(f"Clause {j} : x{abs(literal)} et sa négation")

    def is_satisfied_by(self, assignment: Dict[int, bool]) -> bool:
        return all(
            any(assignment[abs(literal)] == (literal > 0) for literal in clause)
            for clause in self.clauses
        )

    def is_satisfiable(self) -> bool:
        """Table de vérité exhaustive, pour les petites formules."""
        n = self.variables
        for bits in range(1 << n):
            assignment = {i + 1: bool(bits >> i & 1) for i in range(n)}
            if self.is_satisfied_by(assignment):
                return True
        return False


def parse_dimacs(text: str) -> CnfFormula:
    """
    Lit une formule DIMACS (`p cnf n m`, clauses terminées par 0) ou la forme
    compacte "1 -2 3; -1 2".

    Raises:
        FormulaError: texte illisible ou formule invalide.
    """
    lines = [
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith(("c", "%"))
    ]
    declared = None
    body: List[str] = []
    for line in lines:
        if line.startswith("p"):
            match = re.fullmatch(r"p\s+cnf\s+(\d+)\s+(\d+)", line)
            if match is None:
                raise FormulaError(f"En-tête DIMACS invalide : {line!r}")
            declared = int(match.group(1))
        else:
            body.append(line)

    try:
        if declared is not None:
            tokens = [int(token) for token in " ".join(body).split()]
            clauses: List[Tuple[int, ...]] = []
            current: List[int] = []
            for token in tokens:
                if token == 0:
                    clauses.append(tuple(current))
                    current = []
                else:
                    current.append(token)
            if current:
                clauses.append(tuple(current))
        else:
            parts = re.split(r"[;\n]", "\n".join(body))
            clauses = [tuple(int(token) for token in part.split()) for part in parts if part.strip()]
    except ValueError as e:
        raise FormulaError(f"Littéral non entier : {e}") from e

    variables = declared
    if variables is None:
        variables = max((abs(literal) for clause in clauses for literal in clause), default=0)
    return CnfFormula(variables=variables, clauses=tuple(clauses))


def _station_names(n: int, m: int) -> List[str]:
    names = []
    for i in range(1, n + 1):
        names += [f"s_x{i}", f"t_x{i}"]
    for j in range(m):
        names += [f"s_C{j}"] + [f"v{i}_C{j}" for i in range(n + 1)] + [f"t_C{j}"]
    return names


def gen_sat(formula: CnfFormula, mode: str = "dtc") -> Instance:
    """
    Réseau dont les équilibres codent les affectations satisfaisantes.

    En mode dtc, les commodités de clause choisissent librement leur départ ;
    en mode fixed, elles partent à l'ouverture de leur gadget.

    Args:
        formula: formule validée
        mode: "dtc" ou "fixed"

    Returns:
        Une instance en secondes (unité de 60 s, coût = temps de parcours en unités).
    """
    if mode not in MODES:
        raise ValueError(f"Mode inconnu {mode!r} (attendu : {', '.join(MODES)})")
    n, m = formula.variables, len(formula.clauses)
    width = 2 * n + 6

    def opening(j: int) -> int:
        return 1 + j * width

    end = opening(m) + 1

    # arrêts intermédiaires des courses de variables, en unités
    variable_stops: Dict[Tuple[int, bool], List[Stop]] = {
        (i, polarity): [] for i in range(1, n + 1) for polarity in (True, False)
    }
    trips: List[Trip] = []
    commodities: List[Commodity] = []
    one = Fraction(1)

    for j, clause in enumerate(formula.clauses):
        w = opening(j)
        s, t = f"s_C{j}", f"t_C{j}"
        trips.append(
            Trip(
                f"blue_C{j}",
                one,
                (
                    Stop(s, None, w * UNIT),
                    Stop(f"v{n}_C{j}", (w + 1) * UNIT, (w + 1) * UNIT),
                    Stop(t, (w + 2 * n + 5) * UNIT, None),
                ),
            )
        )
        trips.append(
            Trip(
                f"pink_C{j}",
                one,
                (
                    Stop(f"v0_C{j}", None, (w + 2 * n + 2) * UNIT),
                    Stop(s, (w + 2 * n + 3) * UNIT, (w + 2 * n + 3) * UNIT),
                    Stop(t, (w + 2 * n + 4) * UNIT, None),
                ),
            )
        )
        literals = {abs(literal): literal > 0 for literal in clause}
        for i in range(n, 0, -1):
            departure = (w + 2 + 2 * (n - i)) * UNIT
            arrival = departure + UNIT
            upper, lower = f"v{i}_C{j}", f"v{i - 1}_C{j}"
            if i in literals:
                variable_stops[(i, literals[i])] += [
                    Stop(upper, departure, departure),
                    Stop(lower, arrival, arrival),
                ]
            else:
                trips.append(
                    Trip(f"link_C{j}_{i}", one, (Stop(upper, None, departure), Stop(lower, arrival, None)))
                )
        commodities.append(
            Commodity(
                id=f"C{j}",
                origin=s,
                destination=t,
                window=TimeWindow(0, end * UNIT) if mode == "dtc" else TimeWindow.at(w * UNIT),
                target=0,
                beta=BETA,
                gamma_late=Fraction(0),
                gamma_early=Fraction(0),
                demand=Fraction(2),
                outside_cost=Fraction(2 * n + 10),
            )
        )

    for i in range(1, n + 1):
        for polarity, colour in ((True, "green"), (False, "red")):
            stops = (
                [Stop(f"s_x{i}", None, 0)]
                + variable_stops[(i, polarity)]
                + [Stop(f"t_x{i}", end * UNIT, None)]
            )
            trips.append(Trip(f"{colour}_x{i}", one, tuple(stops)))
        commodities.append(
            Commodity(
                id=f"x{i}",
                origin=f"s_x{i}",
                destination=f"t_x{i}",
                window=TimeWindow.at(0),
                target=0,
                beta=BETA,
                gamma_late=Fraction(0),
                gamma_early=Fraction(0),
                demand=one,
                outside_cost=Fraction(end + 10),
            )
        )

    logger.info(f"Réseau 3-SAT ({mode}) : {n} variables, {m} clauses, {len(trips)} courses")
    return Instance(
        name=f"sat-{mode}-n{n}-m{m}",
        description=f"Gadgets 3-SAT : {' ∧ '.join('(' + ' ∨ '.join(map(str, c)) + ')' for c in formula.clauses)}",
        stations=tuple(Station(name) for name in _station_names(n, m)),
        trips=tuple(trips),
        commodities=tuple(commodities),
        defaults=PenaltyDefaults(beta=BETA),
    )
