"""Replicator-diffusion equation on [0, 1] with boundary point masses.

    dp/dt = d2/dx2 [x(1-x) p] - d/dx [x(1-x)(alpha x + beta (1-x)) p]

The time stepper is the Moran iteration itself: weak-selection payoffs
``1 + a/N`` (etc.) on N + 1 nodes with dt = 1/N**2. Interior nodes carry the
smooth density q, the two absorbing nodes carry the boundary masses a (at 0)
and b (at 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ._kernels import advance, advance_with_flux
from .game import SelectionIncrements
from .moran import DEATH_BIRTH, MoranChain, coefficient_arrays, fixation_recursive
from .quadrature import adaptive_simpson, cumulative_simpson, integral_to, QuadratureError

NEGATIVE_TOL = 1e-12
ABSORPTION_TOL = 1e-9


class InstabilityError(ArithmeticError):
    """A density value dropped below -1e-12."""


@dataclass(frozen=True)
class PdeParams:
    alpha: float
    beta: float
    n_grid: int
    variant: str = DEATH_BIRTH

    def __post_init__(self):
        if int(self.n_grid) != self.n_grid or self.n_grid < 2:
            raise ValueError(f"grid size must be an integer >= 2, got {self.n_grid!r}")
        # smallest weak-selection payoff is 1 - max|alpha|,|beta| / (2 N)
        if max(abs(self.alpha), abs(self.beta)) >= 2 * self.n_grid:
            raise ValueError("grid too coarse for these selection strengths "
                             "(weak-selection payoffs would not be positive)")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_grid

    @property
    def dt(self) -> float:
        return 1.0 / self.n_grid**2

    @property
    def increments(self) -> SelectionIncrements:
        return SelectionIncrements.from_alpha_beta(self.alpha, self.beta)

    @property
    def chain(self) -> MoranChain:
        return MoranChain(self.n_grid, self.increments.payoffs(self.n_grid), self.variant)

    def mirrored(self) -> "PdeParams":
        return replace(self, alpha=-self.beta, beta=-self.alpha)


@dataclass
class ContinuumState:
    """Node probabilities P_0..P_N at time t.

    ``q = N * P[1:-1]`` is the interior density, ``a = P[0]`` and
    ``b = P[N]`` the boundary masses.
    """

    n_grid: int
    P: np.ndarray
    t: float = 0.0

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_grid + 1) / self.n_grid

    @property
    def interior_x(self) -> np.ndarray:
        return self.x[1:-1]

    @property
    def q(self) -> np.ndarray:
        return self.P[1:-1] * self.n_grid

    @property
    def a(self) -> float:
        return float(self.P[0])

    @property
    def b(self) -> float:
        return float(self.P[-1])

    @property
    def interior_mass(self) -> float:
        return float(np.sum(self.P[1:-1]))

    @property
    def total_mass(self) -> float:
        return math.fsum(self.P)

    def mirrored(self) -> "ContinuumState":
        return ContinuumState(self.n_grid, self.P[::-1].copy(), self.t)


def delta_state(n_grid: int, x0: float) -> ContinuumState:
    """Point mass at x0.

    Off-grid points are split between the two neighbouring nodes so that
    the first moment equals x0.
    """
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"x0 must lie in [0, 1], got {x0!r}")
    P = np.zeros(n_grid + 1)
    s = x0 * n_grid
    k = int(math.floor(s))
    theta = s - k
    if k >= n_grid:
        P[n_grid] = 1.0
    elif theta < 1e-12:
        P[k] = 1.0
    elif theta > 1 - 1e-12:
        P[k + 1] = 1.0
    else:
        P[k] = 1.0 - theta
        P[k + 1] = theta
    return ContinuumState(n_grid, P)


def density_state(n_grid: int, density: Callable[[np.ndarray], np.ndarray]) -> ContinuumState:
    """Absolutely continuous initial data sampled at the interior nodes, unit mass."""
    x = np.arange(1, n_grid) / n_grid
    vals = np.asarray(density(x), dtype=float)
    if np.any(vals < 0):
        raise ValueError("initial density must be nonnegative")
    total = vals.sum()
    if not total > 0:
        raise ValueError("initial density has no mass on the interior nodes")
    P = np.zeros(n_grid + 1)
    P[1:-1] = vals / total
    return ContinuumState(n_grid, P)


def drift_diffusion_coefficients(alpha: float, beta: float, x):
    """Diffusion D(x) = x(1-x) and drift v(x) = x(1-x)(alpha x + beta(1-x))."""
    x = np.asarray(x, dtype=float)
    D = x * (1 - x)
    return D, D * (alpha * x + beta * (1 - x))


def _check(P):
    lo = P.min()
    if lo < -NEGATIVE_TOL:
        raise InstabilityError(f"negative density {lo:.3e}")


def _steps_between(t0, t1, n_grid):
    steps = round((t1 - t0) * n_grid**2)
    if steps < 0:
        raise ValueError(f"cannot evolve backwards from t={t0} to t={t1}")
    return int(steps)


def evolve_pde(state: ContinuumState, params: PdeParams, t_end: float) -> ContinuumState:
    """Advance ``state`` to time ``t_end`` (absolute) with the Moran stepper."""
    if state.n_grid != params.n_grid:
        raise ValueError("state and params disagree on the grid size")
    steps = _steps_between(state.t, t_end, params.n_grid)
    P = advance(state.P, *coefficient_arrays(params.chain), steps) if steps else state.P.copy()
    _check(P)
    return ContinuumState(params.n_grid, P, state.t + steps * params.dt)


@dataclass
class PdeSeries:
    """Snapshots of an evolution. ``densities`` holds q rows when requested."""

    t: list = field(default_factory=list)
    a: list = field(default_factory=list)
    b: list = field(default_factory=list)
    a_trapezoid: list = field(default_factory=list)
    b_trapezoid: list = field(default_factory=list)
    interior_mass: list = field(default_factory=list)
    mass_defect: list = field(default_factory=list)
    sup_q: list = field(default_factory=list)
    weighted_l2: list = field(default_factory=list)
    psi_functional: list = field(default_factory=list)
    discrete_functional: list = field(default_factory=list)
    densities: list = field(default_factory=list)

    def as_arrays(self) -> dict:
        return {k: np.asarray(v) for k, v in self.__dict__.items() if k != "densities"}


def weighted_l2(state: ContinuumState) -> float:
    """J = int x(1-x) q^2 dx on the interior nodes."""
    x = state.interior_x
    q = state.q
    return float(np.sum(x * (1 - x) * q * q) / state.n_grid)


def psi_functional(state: ContinuumState, alpha: float, beta: float, psi_values=None) -> float:
    """a psi(0) + b psi(1) + sum psi(x_i) q(x_i) dx with the continuum psi."""
    if psi_values is None:
        psi_values = psi(alpha, beta, state.interior_x)
    return state.b + float(np.dot(psi_values, state.P[1:-1]))


def discrete_functional(state: ContinuumState, params: PdeParams, F=None) -> float:
    """<P, F> with F the fixation profile of the stepping chain (exactly conserved)."""
    if F is None:
        F = fixation_recursive(params.chain)
    return float(np.dot(F, state.P))


def pde_series(state: ContinuumState, params: PdeParams, t_end: float, snapshot_dt: float,
               keep_densities: bool = False,
               stop_when: Callable[[ContinuumState], bool] | None = None):
    """Evolve to ``t_end`` recording a snapshot every ``snapshot_dt``.

    Besides the exact absorbed masses a, b the series carries trapezoid
    time-integrals of the boundary fluxes, a_trapezoid and b_trapezoid.
    Returns ``(final_state, series)``; ``stop_when`` may end the run early
    at a snapshot.
    """
    if state.n_grid != params.n_grid:
        raise ValueError("state and params disagree on the grid size")
    coeffs = coefficient_arrays(params.chain)
    F = fixation_recursive(params.chain)
    psi_vals = psi(params.alpha, params.beta, state.interior_x)
    chunk = max(1, round(snapshot_dt * params.n_grid**2))
    total = _steps_between(state.t, t_end, params.n_grid)
    series = PdeSeries()
    a_tr, b_tr = state.a, state.b

    def record(s):
        series.t.append(s.t)
        series.a.append(s.a)
        series.b.append(s.b)
        series.a_trapezoid.append(a_tr)
        series.b_trapezoid.append(b_tr)
        series.interior_mass.append(s.interior_mass)
        series.mass_defect.append(abs(1.0 - s.total_mass))
        series.sup_q.append(float(s.q.max()))
        series.weighted_l2.append(weighted_l2(s))
        series.psi_functional.append(psi_functional(s, params.alpha, params.beta, psi_vals))
        series.discrete_functional.append(float(np.dot(F, s.P)))
        if keep_densities:
            series.densities.append(s.q.copy())

    record(state)
    done = 0
    cur = state
    while done < total:
        k = min(chunk, total - done)
        P, fl, fr = advance_with_flux(cur.P, *coeffs, k)
        _check(P)
        a_tr += fl
        b_tr += fr
        done += k
        cur = ContinuumState(params.n_grid, P, state.t + done * params.dt)
        record(cur)
        if stop_when is not None and stop_when(cur):
            break
    return cur, series


def run_to_absorption(state: ContinuumState, params: PdeParams, tol: float = ABSORPTION_TOL,
                      chunk_dt: float = 0.05, t_max: float = 1000.0):
    """Evolve until the interior sup-norm of q drops below ``tol``.

    Returns ``(state, max_mass_defect)`` where the defect is tracked at every
    chunk boundary.
    """
    coeffs = coefficient_arrays(params.chain)
    chunk = max(1, round(chunk_dt * params.n_grid**2))
    cur = state
    defect = abs(1.0 - cur.total_mass)
    steps = 0
    while cur.q.max() >= tol:
        if cur.t > t_max:
            raise RuntimeError(f"interior did not die out by t={t_max}")
        P = advance(cur.P, *coeffs, chunk)
        _check(P)
        steps += chunk
        cur = ContinuumState(params.n_grid, P, state.t + steps * params.dt)
        defect = max(defect, abs(1.0 - cur.total_mass))
    return cur, defect


def _psi_integrand(alpha, beta):
    half_eta = 0.5 * (alpha - beta)
    return lambda y: np.exp(-y * y * half_eta - y * beta)


def psi_normalizer(alpha: float, beta: float) -> float:
    return adaptive_simpson(_psi_integrand(alpha, beta), 0.0, 1.0)


def psi(alpha: float, beta: float, x):
    """Normalized conserved functional psi(x) = int_0^x e^{...} / int_0^1 e^{...}."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x < 0) | (x > 1)):
        raise ValueError("psi is defined on [0, 1]")
    f = _psi_integrand(alpha, beta)
    out = integral_to(f, x) / psi_normalizer(alpha, beta)
    return float(out[0]) if scalar else out


def pi_one(alpha: float, beta: float, p0, tol: float = 1e-10, max_panels: int = 2**20) -> float:
    """Fixation probability of type A for initial data ``p0``.

    ``p0`` is either a point x0 (delta initial data, giving psi(x0)) or a
    density callable on [0, 1]. Densities use the tail-integral form

        pi_1 = int_0^1 [int_y^1 p0] e(y) dy / int_0^1 e(y) dy.
    """
    if np.ndim(p0) == 0 and not callable(p0):
        return psi(alpha, beta, float(p0))
    e = _psi_integrand(alpha, beta)

    def rule(m):
        # fine grid with 4m subintervals: tails at even nodes, outer rule on those
        y = np.linspace(0.0, 1.0, 4 * m + 1)
        h = 1.0 / (4 * m)
        head = cumulative_simpson(np.asarray(p0(y), dtype=float), h)
        tail = head[-1] - head
        ye = y[::2]
        num = cumulative_simpson(tail * e(ye), 2 * h)[-1]
        den = cumulative_simpson(e(ye), 2 * h)[-1]
        return num / den

    m = 1024
    prev = rule(m)
    while m < max_panels:
        m *= 2
        cur = rule(m)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise QuadratureError("pi_one quadrature did not settle")


def pi_zero(alpha: float, beta: float, p0) -> float:
    return 1.0 - pi_one(alpha, beta, p0)


@dataclass(frozen=True)
class HarnessRow:
    n_grid: int
    a_inf: float
    b_inf: float
    pi_one: float
    fixation_error: float
    total_mass_error: float
    max_mass_defect: float
    t_absorbed: float


def convergence_harness(alpha: float, beta: float, x0: float, grids, tol: float = ABSORPTION_TOL):
    """Run each grid to absorption from delta(x0) and compare with pi_1[delta(x0)]."""
    target = pi_one(alpha, beta, x0)
    rows = []
    for n in grids:
        params = PdeParams(alpha, beta, int(n))
        final, defect = run_to_absorption(delta_state(int(n), x0), params, tol=tol)
        rows.append(HarnessRow(
            n_grid=int(n),
            a_inf=final.a,
            b_inf=final.b,
            pi_one=target,
            fixation_error=abs(final.b - target),
            total_mass_error=abs(final.a + final.b - 1.0),
            max_mass_defect=defect,
            t_absorbed=final.t,
        ))
    return rows
