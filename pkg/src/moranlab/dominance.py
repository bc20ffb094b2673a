"""Dominance between mixed strategies in the diffusion limit.

E_{q2} dominates E_{q1} when the fixation probability of E_{q1} is below the
neutral value x0 for every point initial condition x0 in (0, 1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .game import DegenerateGameError, q_star
from .quadrature import cumulative_simpson

NEUTRAL_MARGIN = 1e-8


class NearNeutralError(ArithmeticError):
    """The numeric test cannot separate dominance from neutrality."""


class Verdict(enum.Enum):
    Q2_DOMINATES = "q2 dominates q1"
    Q1_DOMINATES = "q1 dominates q2"
    NEITHER = "neither"


@dataclass(frozen=True)
class DominanceVerdict:
    q1: float
    q2: float
    verdict: Verdict
    method: str
    margin: float = float("nan")

    def reversed(self) -> "DominanceVerdict":
        flip = {Verdict.Q2_DOMINATES: Verdict.Q1_DOMINATES,
                Verdict.Q1_DOMINATES: Verdict.Q2_DOMINATES,
                Verdict.NEITHER: Verdict.NEITHER}
        return DominanceVerdict(self.q2, self.q1, flip[self.verdict], self.method, self.margin)


def _exponent(alpha, beta, q1, q2, y):
    dq = q1 - q2
    return -y * y * dq * dq * (alpha - beta) / 2.0 - y * dq * (q2 * alpha + (1 - q2) * beta)


def f_aux(s, q1: float, q2: float, y):
    """Auxiliary function F_{(q1,q2)}(y); ``s`` exposes ``alpha`` and ``beta``."""
    return np.exp(_exponent(s.alpha, s.beta, q1, q2, np.asarray(y, dtype=float)))


def fixation_ratio(s, q1, q2, x_points, tol=1e-10, max_refine=2**12):
    """int_0^x F / int_0^1 F at every point of ``x_points`` (uniform interior grid).

    ``x_points`` must be ``k / (n + 1)`` for k = 1..n. Each cell is split into
    2m Simpson subintervals with m doubled until the ratios settle.
    """
    n_cells = len(x_points) + 1

    def rule(m):
        y = np.linspace(0.0, 1.0, 2 * m * n_cells + 1)
        e = _exponent(s.alpha, s.beta, q1, q2, y)
        vals = np.exp(e - e.max())
        cum = cumulative_simpson(vals, 1.0 / (2 * m * n_cells))
        ratio = cum / cum[-1]
        return ratio[m::m][:-1]

    m = 2
    prev = rule(m)
    while m < max_refine:
        m *= 2
        cur = rule(m)
        if np.max(np.abs(cur - prev)) < tol:
            return cur
        prev = cur
    return cur


def _default_points(n):
    return np.arange(1, n + 1) / (n + 1)


def delta_dominates_numeric(s, q1: float, q2: float, n_points: int = 1000,
                            margin: float = NEUTRAL_MARGIN) -> DominanceVerdict:
    """Numeric delta-dominance test in both directions.

    Direction (q1, q2) holds when ``(x - ratio(x)) / (x(1-x)) > margin`` on
    every grid point; the reverse direction is tested with F_{(q2,q1)}.
    Dividing by x(1-x) keeps the margin finite at both ends, where
    x - ratio(x) vanishes for every pair. Raises :class:`NearNeutralError`
    when a direction fails only by less than the margin.
    """
    if q1 == q2:
        return DominanceVerdict(q1, q2, Verdict.NEITHER, "numeric", 0.0)
    x = _default_points(n_points)
    scale = x * (1 - x)
    fwd = np.min((x - fixation_ratio(s, q1, q2, x)) / scale)
    rev = np.min((x - fixation_ratio(s, q2, q1, x)) / scale)
    for m in (fwd, rev):
        if -margin <= m <= margin:
            raise NearNeutralError(f"dominance margin {m:.2e} is within {margin:g}")
    if fwd > margin and rev > margin:
        raise AssertionError("both directions dominate; quadrature is broken")
    if fwd > margin:
        return DominanceVerdict(q1, q2, Verdict.Q2_DOMINATES, "numeric", float(fwd))
    if rev > margin:
        return DominanceVerdict(q1, q2, Verdict.Q1_DOMINATES, "numeric", float(rev))
    return DominanceVerdict(q1, q2, Verdict.NEITHER, "numeric", float(max(fwd, rev)))


def regime(alpha: float, beta: float) -> int:
    """Row (1..6) of the non-degenerate sign table, ordered as
    a>b>0, a>0>b, 0>a>b, 0>b>a, b>0>a, b>a>0."""
    if alpha == beta or alpha == 0 or beta == 0:
        raise DegenerateGameError("degenerate parameters: use the numeric test")
    if alpha > beta:
        return 1 if beta > 0 else (2 if alpha > 0 else 3)
    return 6 if alpha > 0 else (5 if beta > 0 else 4)


def _table_dominates(row, qs, q1, q2):
    """Does E_{q2} dominate E_{q1} according to the closed-form table?"""
    if row in (1, 6):
        return q2 > q1
    if row in (3, 4):
        return q2 < q1
    if row == 2:
        return (q2 < q1 <= qs) or (q2 > q1 >= qs)
    return (q1 < q2 <= qs) or (q1 > q2 >= qs)


def classify(s, q1: float, q2: float) -> DominanceVerdict:
    """Closed-form verdict from the sign regime of (alpha, beta) and q*.

    Rows 3 and 4 (both payoff advantages of I negative on [0, 1]) favour the
    smaller q.
    """
    row = regime(s.alpha, s.beta)
    qs = q_star(s).value
    if _table_dominates(row, qs, q1, q2):
        v = Verdict.Q2_DOMINATES
    elif _table_dominates(row, qs, q2, q1):
        v = Verdict.Q1_DOMINATES
    else:
        v = Verdict.NEITHER
    return DominanceVerdict(q1, q2, v, "table")


def dominance_edges(s, qs, method: str = "table"):
    """Arrows (dominated -> dominant) among the strategies ``qs``."""
    test = classify if method == "table" else delta_dominates_numeric
    edges = []
    qs = list(qs)
    for i, q1 in enumerate(qs):
        for q2 in qs[i + 1:]:
            v = test(s, q1, q2).verdict
            if v is Verdict.Q2_DOMINATES:
                edges.append((q1, q2))
            elif v is Verdict.Q1_DOMINATES:
                edges.append((q2, q1))
    return edges
