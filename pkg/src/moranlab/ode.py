"""Diffusionless dynamics: the two-strategy replicator equation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import MixedPair, effective_increments
from .dominance import regime

RICHARDSON_TOL = 1e-10
CLAMP_TOL = 1e-12


def rhs(alpha: float, beta: float, X):
    """dX/dt = X(1-X)(X alpha + (1-X) beta)."""
    X = np.asarray(X, dtype=float)
    return X * (1 - X) * (X * alpha + (1 - X) * beta)


def rhs_mixed(s, q: MixedPair, X):
    """Replicator velocity for a population of E_{q1} and E_{q2} strategists."""
    e = effective_increments(s, q)
    return rhs(e.alpha, e.beta, X)


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    clamped: float = 0.0   # largest excursion outside [0, 1] that was clipped


def _rk4(f, X0, dt, n_steps, record=False):
    X = np.array(X0, dtype=float)
    out = [X.copy()] if record else None
    excursion = 0.0
    for _ in range(n_steps):
        k1 = f(X)
        k2 = f(X + 0.5 * dt * k1)
        k3 = f(X + 0.5 * dt * k2)
        k4 = f(X + dt * k3)
        X = X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        excursion = max(excursion, float(np.max(np.maximum(-X, X - 1.0))))
        X = np.clip(X, 0.0, 1.0)
        if record:
            out.append(X.copy())
    return X, out, excursion


def integrate(alpha: float, beta: float, X0, t_end: float, n_steps: int | None = None,
              tol: float = RICHARDSON_TOL, max_steps: int = 2**22) -> Trajectory:
    """Classic RK4 on a uniform grid.

    Unless ``n_steps`` is given, the step is halved until the endpoint moves
    by less than ``tol``. ``X0`` may be an array of initial conditions.
    """
    if np.any(np.asarray(X0) < 0) or np.any(np.asarray(X0) > 1):
        raise ValueError("initial condition must lie in [0, 1]")
    f = lambda X: rhs(alpha, beta, X)
    if n_steps is None:
        n = max(16, int(np.ceil(t_end / 0.05)))
        prev, _, _ = _rk4(f, X0, t_end / n, n)
        while True:
            n *= 2
            if n > max_steps:
                raise RuntimeError("RK4 step refinement did not settle")
            cur, _, _ = _rk4(f, X0, t_end / n, n)
            if np.max(np.abs(cur - prev)) < tol:
                break
            prev = cur
        n_steps = n
    X, path, excursion = _rk4(f, X0, t_end / n_steps, n_steps, record=True)
    if excursion > CLAMP_TOL:
        raise ArithmeticError(f"trajectory left [0, 1] by {excursion:.2e}")
    return Trajectory(np.linspace(0.0, t_end, n_steps + 1), np.array(path), excursion)


def equilibria(alpha: float, beta: float) -> list[float]:
    """Zeros of the velocity on [0, 1]."""
    pts = [0.0, 1.0]
    if alpha != beta:
        xs = beta / (beta - alpha)
        if 0.0 < xs < 1.0:
            pts.insert(1, xs)
    return pts


@dataclass(frozen=True)
class EquilibriumTable:
    stable: tuple
    unstable: tuple


def classify_equilibria(alpha: float, beta: float) -> EquilibriumTable:
    """Stable and unstable equilibria for the six non-degenerate sign regimes."""
    row = regime(alpha, beta)
    xs = beta / (beta - alpha)
    table = {
        1: ((1.0,), (0.0,)),
        2: ((0.0, 1.0), (xs,)),
        3: ((0.0,), (1.0,)),
        4: ((0.0,), (1.0,)),
        5: ((xs,), (0.0, 1.0)),
        6: ((1.0,), (0.0,)),
    }
    stable, unstable = table[row]
    return EquilibriumTable(stable, unstable)


def equilibria_by_sampling(alpha: float, beta: float, n: int = 100001) -> EquilibriumTable:
    """Stability read off the sign of the velocity on a fine grid."""
    x = np.linspace(0.0, 1.0, n)[1:-1]
    sign = np.sign(rhs(alpha, beta, x))
    stable, unstable = [], []
    (stable if sign[-1] > 0 else unstable).append(1.0)
    (stable if sign[0] < 0 else unstable).append(0.0)
    for i in np.nonzero(sign[:-1] != sign[1:])[0]:
        root = beta / (beta - alpha)
        (stable if sign[i] > 0 else unstable).append(root)
    return EquilibriumTable(tuple(sorted(stable)), tuple(sorted(unstable)))


def long_time_limit(alpha: float, beta: float, X0, chunk: float = 10.0, t_max: float = 1e4,
                    speed_tol: float = 1e-12, dist_tol: float = 1e-8):
    """Integrate until |dX/dt| < speed_tol and X is within dist_tol of an equilibrium."""
    eq = np.array(equilibria(alpha, beta))
    X = np.atleast_1d(np.asarray(X0, dtype=float))
    t = 0.0
    while t < t_max:
        X = integrate(alpha, beta, X, chunk).X[-1]
        t += chunk
        near = np.min(np.abs(X[:, None] - eq[None, :]), axis=1)
        if np.all(np.abs(rhs(alpha, beta, X)) < speed_tol) and np.all(near < dist_tol):
            return X if np.ndim(X0) else float(X[0])
    raise RuntimeError(f"no equilibrium reached by t={t_max}")

