from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Protocol, Sequence, Tuple

from app.core.exceptions import LPError
from app.utils.logs import logger

ZERO = Fraction(0)


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """min c·x  s.c.  a_eq·x = b_eq,  a_ub·x ≤ b_ub,  x ≥ 0."""

    c: Sequence[Fraction]
    a_eq: Sequence[Sequence[Fraction]] = ()
    b_eq: Sequence[Fraction] = ()
    a_ub: Sequence[Sequence[Fraction]] = ()
    b_ub: Sequence[Fraction] = ()

    @property
    def variable_count(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class LPResult:
    status: LPStatus
    x: Tuple[Fraction, ...] = ()
    objective: Optional[Fraction] = None
    duals_eq: Tuple[Fraction, ...] = ()
    duals_ub: Tuple[Fraction, ...] = ()

    @property
    def is_optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


class LPBackend(Protocol):
    def solve(self, lp: LinearProgram) -> LPResult: ...


class SimplexTableau:
    """
    Tableau dense en rationnels exacts, une variable artificielle par ligne.

    Colonnes : variables du problème, puis écarts des lignes ≤, puis artificielles.
    """

    def __init__(self, rows: List[List[Fraction]], rhs: List[Fraction], first_artificial: int):
        self.rows = rows
        self.rhs = rhs
        self.m = len(rows)
        self.n = len(rows[0]) if rows else first_artificial
        self.first_artificial = first_artificial
        self.basis = list(range(first_artificial, first_artificial + self.m))
        self.costs: List[Fraction] = [ZERO] * self.n
        self.reduced: List[Fraction] = [ZERO] * self.n

    def set_costs(self, costs: List[Fraction]) -> None:
        self.costs = costs
        self.reduced = list(costs)
        for k, basic in enumerate(self.basis):
            weight = costs[basic]
            if weight:
                row = self.rows[k]
                for j in range(self.n):
                    if row[j]:
                        self.reduced[j] -= weight * row[j]

    def objective(self) -> Fraction:
        return sum((self.costs[b] * self.rhs[k] for k, b in enumerate(self.basis)), ZERO)

    def pivot(self, i: int, j: int) -> None:
        row = self.rows[i]
        pivot = row[j]
        for col in range(self.n):
            if row[col]:
                row[col] /= pivot
        self.rhs[i] /= pivot
        support = [col for col in range(self.n) if row[col]]
        for k in range(self.m):
            if k == i:
                continue
            factor = self.rows[k][j]
            if factor:
                target = self.rows[k]
                for col in support:
                    target[col] -= factor * row[col]
                self.rhs[k] -= factor * self.rhs[i]
        factor = self.reduced[j]
        if factor:
            for col in support:
                self.reduced[col] -= factor * row[col]
        self.basis[i] = j

    def bland_step(self, allowed: int) -> str:
        """Un pivot selon la règle de Bland sur les colonnes d'indice < `allowed`."""
        entering = next((j for j in range(allowed) if self.reduced[j] < 0), None)
        if entering is None:
            return "optimal"
        best = None
        for k in range(self.m):
            coefficient = self.rows[k][entering]
            if coefficient > 0:
                key = (self.rhs[k] / coefficient, self.basis[k])
                if best is None or key < best[0]:
                    best = (key, k)
        if best is None:
            return "unbounded"
        self.pivot(best[1], entering)
        return "go_on"

    def run(self, allowed: int) -> str:
        while True:
            status = self.bland_step(allowed)
            if status != "go_on":
                return status

    def drive_out_artificials(self) -> None:
        for k in range(self.m):
            if self.basis[k] < self.first_artificial:
                continue
            column = next(
                (j for j in range(self.first_artificial) if self.rows[k][j] != 0), None
            )
            # ligne redondante : l'artificielle reste de base à zéro
            if column is not None:
                self.pivot(k, column)


class ExactSimplexBackend:
    """Simplexe primal en deux phases avec la règle anti-cyclage de Bland."""

    def solve(self, lp: LinearProgram) -> LPResult:
        n = lp.variable_count
        m_eq, m_ub = len(lp.a_eq), len(lp.a_ub)
        m = m_eq + m_ub
        first_artificial = n + m_ub
        width = first_artificial + m

        rows: List[List[Fraction]] = []
        rhs: List[Fraction] = []
        signs: List[int] = []
        for k in range(m):
            row = [ZERO] * width
            if k < m_eq:
                coefficients, bound = lp.a_eq[k], lp.b_eq[k]
            else:
                coefficients, bound = lp.a_ub[k - m_eq], lp.b_ub[k - m_eq]
                row[n + k - m_eq] = Fraction(1)
            if len(coefficients) != n:
                raise LPError(f"Ligne {k} de longueur {len(coefficients)} au lieu de {n}")
            for j, value in enumerate(coefficients):
                row[j] = Fraction(value)
            bound = Fraction(bound)
            sign = 1
            if bound < 0:
                sign = -1
                row = [-value for value in row]
                bound = -bound
            row[first_artificial + k] = Fraction(1)
            rows.append(row)
            rhs.append(bound)
            signs.append(sign)

        tableau = SimplexTableau(rows, rhs, first_artificial)
        tableau.n = width
        tableau.set_costs([ZERO] * first_artificial + [Fraction(1)] * m)
        tableau.run(width)
        if tableau.objective() > 0:
            return LPResult(status=LPStatus.INFEASIBLE)
        tableau.drive_out_artificials()

        costs = [Fraction(value) for value in lp.c] + [ZERO] * (width - n)
        tableau.set_costs(costs)
        status = tableau.run(first_artificial)
        if status == "unbounded":
            return LPResult(status=LPStatus.UNBOUNDED)

        x = [ZERO] * n
        for k, basic in enumerate(tableau.basis):
            if basic < n:
                x[basic] = tableau.rhs[k]
        duals = []
        for r in range(m):
            column = first_artificial + r
            value = sum(
                (costs[basic] * tableau.rows[k][column] for k, basic in enumerate(tableau.basis)),
                ZERO,
            )
            duals.append(value * signs[r])
        objective = sum((c * v for c, v in zip(costs, x)), ZERO)
        return LPResult(
            status=LPStatus.OPTIMAL,
            x=tuple(x),
            objective=objective,
            duals_eq=tuple(duals[:m_eq]),
            duals_ub=tuple(duals[m_eq:]),
        )


DEFAULT_BACKEND = ExactSimplexBackend()


def solve_lp(lp: LinearProgram, backend: Optional[LPBackend] = None) -> LPResult:
    """Résout un programme linéaire avec le moteur donné (simplexe exact par défaut)."""
    try:
        return (backend or DEFAULT_BACKEND).solve(lp)
    except LPError:
        raise
    except Exception as e:
        logger.error(f"Erreur du moteur de programmation linéaire : {e}", exc_info=True)
        raise LPError(str(e)) from e
