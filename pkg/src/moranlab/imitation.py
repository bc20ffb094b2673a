"""Imitation (pairwise comparison) dynamics and their diffusion limit.

A random pair (A, B) is drawn; the focal individual copies the other with
probability Psi(payoff difference). Under weak selection and dt = 1/N**2
the density obeys

    dp/dt = Psi(0) d2/dx2[x(1-x)p] - 2 Psi'(0) d/dx[x(1-x)(alpha x + beta(1-x)) p],

which is the replicator-diffusion equation with selection multiplied by
kappa = 2 Psi'(0)/Psi(0), run on the clock tau = Psi(0) t. The continuum
work therefore reuses :mod:`moranlab.pde` unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._kernels import advance
from .game import PayoffMatrix
from .moran import fitnesses
from .pde import (ContinuumState, PdeParams, discrete_functional, psi, psi_functional,
                  run_to_absorption)


class SingularLimitError(ValueError):
    """Psi(0) = 0: the limit has no diffusion and the diffusive scheme does not apply."""


@dataclass(frozen=True)
class ImitationKernel:
    """Value and slope of Psi at 0, and optionally the full function."""

    value0: float
    slope0: float
    func: Callable | None = None

    def __post_init__(self):
        if not 0.0 <= self.value0 <= 1.0:
            raise ValueError("Psi(0) must lie in [0, 1]")
        if self.slope0 < 0:
            raise ValueError("Psi'(0) must be nonnegative")

    @classmethod
    def fermi(cls, value0: float = 0.5, slope0: float = 0.25) -> "ImitationKernel":
        """Logistic Psi(u) = 1/(1 + exp(-(k u + logit v0))) with the given value and slope at 0."""
        if not 0.0 < value0 < 1.0:
            raise ValueError("a logistic kernel needs 0 < Psi(0) < 1")
        k = slope0 / (value0 * (1 - value0))
        shift = math.log(value0 / (1 - value0))
        return cls(value0, slope0, lambda u: 1.0 / (1.0 + np.exp(-(k * np.asarray(u, float) + shift))))

    @classmethod
    def constant(cls, value: float) -> "ImitationKernel":
        """Payoff-blind copying (neutral drift at rate ``value``)."""
        return cls(value, 0.0, lambda u: np.full(np.shape(u), float(value)))

    def __call__(self, u):
        if self.func is None:
            raise ValueError("this kernel only carries Psi(0), Psi'(0); the finite chain needs Psi")
        out = np.asarray(self.func(u), dtype=float)
        if np.any((out < 0) | (out > 1)):
            raise ValueError("Psi returned a value outside [0, 1]")
        return out


def imitation_coefficients(N: int, payoffs: PayoffMatrix, kernel: ImitationKernel, n: int):
    """(c+, c0, c-) for n type-A individuals out of N."""
    if not 0 <= n <= N:
        raise ValueError(f"n must lie in 0..{N}, got {n}")
    if n == 0 or n == N:
        return 0.0, 1.0, 0.0
    from .moran import MoranChain
    phi_a, phi_b = fitnesses(MoranChain(N, payoffs), n)
    pair = (N - n) / N * n / (N - 1)
    c_plus = pair * float(kernel(phi_a - phi_b))
    c_minus = pair * float(kernel(phi_b - phi_a))
    return c_plus, 1.0 - c_plus - c_minus, c_minus


def imitation_arrays(N: int, payoffs: PayoffMatrix, kernel: ImitationKernel):
    """Vectorized (up, stay, down) for n = 0..N."""
    A, B, C, D = payoffs.as_tuple()
    n = np.arange(1, N, dtype=float)
    diff = ((n - 1) * A + (N - n) * B - n * C - (N - n - 1) * D) / (N - 1)
    pair = (N - n) / N * n / (N - 1)
    up = np.zeros(N + 1)
    down = np.zeros(N + 1)
    up[1:N] = pair * kernel(diff)
    down[1:N] = pair * kernel(-diff)
    return up, 1.0 - up - down, down


def imitation_evolve(N, payoffs, kernel, P0, steps):
    return advance(np.asarray(P0, float), *imitation_arrays(N, payoffs, kernel), int(steps))


def imitation_fixation(N, payoffs, kernel) -> np.ndarray:
    """Fixation profile of the imitation chain (log-space product formula)."""
    up, _, down = imitation_arrays(N, payoffs, kernel)
    if np.any(up[1:N] <= 0) or np.any(down[1:N] <= 0):
        raise ValueError("product formula needs Psi > 0 on the chain")
    log_terms = np.concatenate(([0.0], np.cumsum(np.log(down[1:N]) - np.log(up[1:N]))))
    w = np.exp(log_terms - log_terms.max())
    partial = np.cumsum(w)
    F = np.concatenate(([0.0], partial / partial[-1]))
    F[-1] = 1.0
    return F


@dataclass(frozen=True)
class ContinuumScales:
    diffusion: float   # Psi(0)
    drift: float       # 2 Psi'(0)

    @property
    def kappa(self) -> float:
        return self.drift / self.diffusion


def continuum_coefficients(kernel: ImitationKernel) -> ContinuumScales:
    if kernel.value0 == 0:
        raise SingularLimitError("Psi(0) = 0 gives a drift-only limit; use the replicator ODE instead")
    return ContinuumScales(kernel.value0, 2.0 * kernel.slope0)


def rescaled_params(alpha: float, beta: float, kernel: ImitationKernel, n_grid: int) -> PdeParams:
    """Replicator-diffusion parameters (kappa alpha, kappa beta) on the grid."""
    k = continuum_coefficients(kernel).kappa
    return PdeParams(k * alpha, k * beta, n_grid)


def imitation_psi(alpha: float, beta: float, kernel: ImitationKernel, x):
    """Normalized conserved functional int_0^x exp(-kappa (y^2 (alpha-beta)/2 + y beta)).

    For a pair of mixed strategies pass their effective increments.
    """
    k = continuum_coefficients(kernel).kappa
    return psi(k * alpha, k * beta, x)


def imitation_evolve_pde(state: ContinuumState, alpha, beta, kernel, t_end: float) -> ContinuumState:
    """Advance to imitation time ``t_end``; the returned ``t`` is on the imitation clock."""
    from .pde import evolve_pde
    sc = continuum_coefficients(kernel)
    params = rescaled_params(alpha, beta, kernel, state.n_grid)
    inner = ContinuumState(state.n_grid, state.P, state.t * sc.diffusion)
    out = evolve_pde(inner, params, t_end * sc.diffusion)
    return ContinuumState(out.n_grid, out.P, out.t / sc.diffusion)


@dataclass(frozen=True)
class ImitationRun:
    a_inf: float
    b_inf: float
    t_absorbed: float
    max_mass_defect: float
    discrete_functional_drift: float
    psi_functional_drift: float


def imitation_to_absorption(state: ContinuumState, alpha, beta, kernel, tol=1e-9) -> ImitationRun:
    """Run the rescaled replicator-diffusion stepper until the interior dies out."""
    sc = continuum_coefficients(kernel)
    params = rescaled_params(alpha, beta, kernel, state.n_grid)
    inner = ContinuumState(state.n_grid, state.P, state.t * sc.diffusion)
    F0 = discrete_functional(inner, params)
    P0 = psi_functional(inner, params.alpha, params.beta)
    final, defect = run_to_absorption(inner, params, tol=tol)
    return ImitationRun(
        a_inf=final.a,
        b_inf=final.b,
        t_absorbed=final.t / sc.diffusion,
        max_mass_defect=defect,
        discrete_functional_drift=abs(discrete_functional(final, params) - F0),
        psi_functional_drift=abs(psi_functional(final, params.alpha, params.beta) - P0),
    )


def empirical_drift(N: int, alpha: float, beta: float, kernel: ImitationKernel, x):
    """(N (c+ - c-), c+ + c-) of the finite imitation chain at frequencies ``x``.

    As N grows these approach 2 Psi'(0) x(1-x)(alpha x + beta(1-x)) and
    2 Psi(0) x(1-x).
    """
    from .game import SelectionIncrements
    P = SelectionIncrements.from_alpha_beta(alpha, beta).payoffs(N)
    up, _, down = imitation_arrays(N, P, kernel)
    n = np.clip(np.rint(np.asarray(x, float) * N).astype(int), 1, N - 1)
    return N * (up[n] - down[n]), up[n] + down[n]
