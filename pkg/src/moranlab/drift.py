"""Pure-transport limit (time step 1/N, payoffs held fixed).

The density is carried by characteristics dX/dt = v(X) with

    v(x) = x(1-x)(x(A-C) + (1-x)(B-D)) / (x^2(A-B-C+D) + x(B+C-2D) + D)

so that dp/dt = -d/dx[v p]. The functional

    psi(x) = (1-x)^{A/(A-C)} x^{-D/(B-D)} |x(A-B-C+D) + B-D|^{(AD-BC)/((A-C)(B-D))}

satisfies psi' v = -psi, hence psi(X(t)) = psi(X(0)) e^{-t} along every
characteristic and <psi, p(t)> decays like e^{-t}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import DegenerateGameError, PayoffMatrix


class IndeterminateOutcomeError(ValueError):
    """Point mass sitting exactly on the unstable interior equilibrium."""


@dataclass(frozen=True)
class DriftOutcome:
    case: str
    x_star: float | None
    pi0: float
    pi_star: float
    pi1: float


def frequency_independent(r: float) -> PayoffMatrix:
    """Payoffs (r, r, 1, 1): type A has constant fitness r relative to type B."""
    return PayoffMatrix(r, r, 1.0, 1.0)


def _denominator(P, x):
    A, B, C, D = P.as_tuple()
    return x * x * (A - B - C + D) + x * (B + C - 2 * D) + D


def drift_velocity(P: PayoffMatrix, x):
    x = np.asarray(x, dtype=float)
    A, B, C, D = P.as_tuple()
    den = _denominator(P, x)
    if np.any(den <= 0):
        raise ZeroDivisionError("non-positive mean-fitness denominator")
    return x * (1 - x) * (x * (A - C) + (1 - x) * (B - D)) / den


def interior_zero(P: PayoffMatrix) -> float | None:
    """x* = -(B-D)/(A-B-C+D), or None when the advantage line has no root."""
    A, B, C, D = P.as_tuple()
    slope = A - B - C + D
    if slope == 0:
        return None
    return -(B - D) / slope


def psi_drift(P: PayoffMatrix, x):
    """Conserved-up-to-e^{-t} functional; needs A != C and B != D."""
    A, B, C, D = P.as_tuple()
    if A == C or B == D:
        raise DegenerateGameError("psi needs A != C and B != D")
    x = np.asarray(x, dtype=float)
    e1 = A / (A - C)
    e0 = -D / (B - D)
    ek = (D * A - B * C) / ((A - C) * (B - D))
    line = np.abs(x * (A - B - C + D) + B - D)
    with np.errstate(divide="ignore"):
        return (1 - x) ** e1 * x ** e0 * line ** ek


def classify_game(P: PayoffMatrix) -> str:
    """Name the transport regime from the signs of the advantage at x=0 and x=1."""
    A, B, C, D = P.as_tuple()
    at0, at1 = B - D, A - C
    if at0 == 0 and at1 == 0:
        return "neutral"
    if at0 >= 0 and at1 >= 0:
        return "I dominates"
    if at0 <= 0 and at1 <= 0:
        return "II dominates"
    return "hawk-dove" if at0 > 0 else "coordination"


def _mass_below(p0, x):
    from .quadrature import adaptive_simpson
    if x <= 0:
        return 0.0
    return adaptive_simpson(p0, 0.0, min(x, 1.0), min_panels=256)


def asymptotic_masses(P: PayoffMatrix, p0) -> DriftOutcome:
    """Long-time masses at 0, x* and 1.

    ``p0`` is a point x0 or a unit-mass density callable on [0, 1]. Point
    masses at 0 or 1 never move.
    """
    case = classify_game(P)
    if case == "neutral":
        raise DegenerateGameError("zero velocity everywhere: nothing is transported")
    xs = interior_zero(P)
    point = np.ndim(p0) == 0 and not callable(p0)
    if point:
        x0 = float(p0)
        if not 0.0 <= x0 <= 1.0:
            raise ValueError("x0 must lie in [0, 1]")
        if x0 in (0.0, 1.0):
            return DriftOutcome(case, xs, float(x0 == 0.0), 0.0, float(x0 == 1.0))
    if case == "I dominates":
        return DriftOutcome(case, xs, 0.0, 0.0, 1.0)
    if case == "II dominates":
        return DriftOutcome(case, xs, 1.0, 0.0, 0.0)
    if case == "hawk-dove":
        return DriftOutcome(case, xs, 0.0, 1.0, 0.0)
    # coordination: mass on each side of x* goes to the nearer end
    if point:
        if x0 == xs:
            raise IndeterminateOutcomeError("x0 is the unstable equilibrium x*")
        return DriftOutcome(case, xs, float(x0 < xs), 0.0, float(x0 > xs))
    left = _mass_below(p0, xs)
    total = _mass_below(p0, 1.0)
    return DriftOutcome(case, xs, float(left / total), 0.0, float((total - left) / total))


def characteristics(P: PayoffMatrix, X0, t_end: float, n_steps: int = 4000,
                    n_out: int | None = None):
    """RK4 along dX/dt = v(X) for an array of starting points.

    Returns (times, positions) with ``n_out + 1`` saved rows.
    """
    X = np.array(X0, dtype=float)
    dt = t_end / n_steps
    every = n_steps // n_out if n_out else n_steps
    times, rows = [0.0], [X.copy()]
    f = lambda y: drift_velocity(P, y)
    for k in range(1, n_steps + 1):
        k1 = f(X)
        k2 = f(X + 0.5 * dt * k1)
        k3 = f(X + 0.5 * dt * k2)
        k4 = f(X + dt * k3)
        X = np.clip(X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0, 1.0)
        if k % every == 0:
            times.append(k * dt)
            rows.append(X.copy())
    return np.array(times), np.array(rows)


@dataclass
class ParticleDensity:
    """A density represented by weighted particles (exactly mass-conserving)."""

    x: np.ndarray
    w: np.ndarray

    @classmethod
    def from_density(cls, p0, n: int = 4000) -> "ParticleDensity":
        x = (np.arange(n) + 0.5) / n
        w = np.asarray(p0(x), dtype=float)
        return cls(x, w / w.sum())

    def mass(self) -> float:
        return float(self.w.sum())


def transport(P: PayoffMatrix, particles: ParticleDensity, t_end: float, n_steps: int = 4000,
              n_out: int = 40):
    """Move every particle along its characteristic. Returns (times, positions)."""
    return characteristics(P, particles.x, t_end, n_steps, n_out)


def masses_by_characteristics(P: PayoffMatrix, p0, t_end: float = 200.0, n: int = 20000,
                              tol: float = 1e-3) -> DriftOutcome:
    """Characteristics oracle: which equilibrium each sample particle ends near."""
    parts = ParticleDensity.from_density(p0, n)
    _, path = characteristics(P, parts.x, t_end, n_steps=int(40 * t_end))
    end = path[-1]
    xs = interior_zero(P)
    to0 = end < tol
    to1 = end > 1 - tol
    mid = ~(to0 | to1)
    return DriftOutcome(classify_game(P), xs, float(parts.w[to0].sum()),
                        float(parts.w[mid].sum()), float(parts.w[to1].sum()))
