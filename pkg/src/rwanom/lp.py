"""Dense feasibility LP solver (phase-1 simplex with Bland's rule).

Decides whether a system of linear constraints over box-bounded variables
has a solution, and returns one point when it does.  The implementation is
the classic two-phase tableau method: shift variables to make the box lower
bound zero, add slack/surplus/artificial columns, and minimise the artificial
sum with Bland's anti-cycling pivot rule.  Feasibility problems need only
that first phase.

The solver either answers correctly or raises :class:`SolverStallError`
(iteration cap, or a pivot step losing all progress); it never returns a
silently wrong verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RELATIONS = ("<=", ">=", "==")

#: Default tolerance for pivoting decisions and the feasibility test.
FEAS_TOL = 1e-9


class LpError(ValueError):
    """Malformed LP input."""


class SolverStallError(RuntimeError):
    """The simplex ran out of iterations or lost numerical progress."""


@dataclass(frozen=True)
class LinearConstraint:
    """coeffs . w  (rel)  rhs, over the solver's variable vector w."""

    coeffs: np.ndarray
    rel: str
    rhs: float

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.ndim != 1:
            raise LpError("constraint coefficients must be a vector")
        if not np.isfinite(coeffs).all() or not np.isfinite(self.rhs):
            raise LpError("constraint coefficients and rhs must be finite")
        if self.rel not in RELATIONS:
            raise LpError(f"unknown relation {self.rel!r}")


def solve_feasibility(constraints: list[LinearConstraint],
                      lower: np.ndarray, upper: np.ndarray,
                      feas_tol: float = FEAS_TOL,
                      max_iter: int | None = None) -> np.ndarray | None:
    """A feasible point for the constraints within [lower, upper], or None.

    Bounds must be finite with lower <= upper.  The returned point is clipped
    to the box exactly; linear rows hold within the feasibility tolerance.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise LpError("lower and upper bounds must be equal-length vectors")
    if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
        raise LpError("box bounds must be finite")
    n = lower.shape[0]
    if n == 0:
        raise LpError("need at least one variable")
    if (lower > upper).any():
        return None
    ranges = upper - lower

    # Shift to u = w - lower, u >= 0, and collect rows with rhs >= 0.
    rows: list[np.ndarray] = []
    rels: list[str] = []
    rhss: list[float] = []

    def add_row(a: np.ndarray, rel: str, b: float) -> None:
        if b < 0.0:
            a, b = -a, -b
            rel = {"<=": ">=", ">=": "<=", "==": "=="}[rel]
        rows.append(a)
        rels.append(rel)
        rhss.append(b)

    for con in constraints:
        if con.coeffs.shape[0] != n:
            raise LpError(
                f"constraint has {con.coeffs.shape[0]} coefficients for "
                f"{n} variables")
        add_row(con.coeffs.copy(), con.rel,
                con.rhs - float(con.coeffs @ lower))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        add_row(e, "<=", float(ranges[i]))

    m = len(rows)
    n_slack = sum(1 for r in rels if r != "==")
    n_art = sum(1 for r in rels if r != "<=")
    width = n + n_slack + n_art + 1
    tableau = np.zeros((m, width))
    basis = np.empty(m, dtype=int)
    slack_at = n
    art_at = n + n_slack
    for i in range(m):
        tableau[i, :n] = rows[i]
        tableau[i, -1] = rhss[i]
        if rels[i] == "<=":
            tableau[i, slack_at] = 1.0
            basis[i] = slack_at
            slack_at += 1
        elif rels[i] == ">=":
            tableau[i, slack_at] = -1.0
            slack_at += 1
            tableau[i, art_at] = 1.0
            basis[i] = art_at
            art_at += 1
        else:
            tableau[i, art_at] = 1.0
            basis[i] = art_at
            art_at += 1

    # Phase-1 cost row: minimise the artificial sum; price out the basis.
    cost = np.zeros(width)
    cost[n + n_slack:width - 1] = 1.0
    art_rows = [i for i in range(m) if basis[i] >= n + n_slack]
    for i in art_rows:
        cost -= tableau[i]

    scale = max(1.0, max((abs(b) for b in rhss), default=1.0))
    tol = feas_tol
    cap = max_iter if max_iter is not None else 100 * (m + width)
    for _ in range(cap):
        negatives = np.nonzero(cost[:-1] < -tol)[0]
        if negatives.size == 0:
            break
        j = int(negatives[0])  # Bland: lowest eligible column index
        col = tableau[:, j]
        positive = col > tol
        if not positive.any():
            raise SolverStallError(
                "phase-1 column unbounded; the tableau has degraded")
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[positive, -1] / col[positive]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))[0]
        i = int(ties[np.argmin(basis[ties])])  # Bland: lowest basis index
        piv = tableau[i, j]
        tableau[i] /= piv
        factors = tableau[:, j].copy()
        factors[i] = 0.0
        tableau -= np.outer(factors, tableau[i])
        cost = cost - cost[j] * tableau[i]
        basis[i] = j
    else:
        raise SolverStallError(f"simplex exceeded {cap} iterations")

    art_mask = basis >= n + n_slack
    infeasibility = float(tableau[art_mask, -1].sum()) if art_mask.any() else 0.0
    if infeasibility > feas_tol * scale:
        return None
    values = np.zeros(width - 1)
    values[basis] = tableau[:, -1]
    point = values[:n] + lower
    return np.clip(point, lower, upper)
