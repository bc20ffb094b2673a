"""Singular Sturm-Liouville view of the interior replicator-diffusion dynamics.

With u = x(1-x)p and w = u exp(-B(x)/2), B(x) = beta x + (alpha-beta) x^2/2,
the interior equation becomes

    omega(x) w_t = w'' - V(x) w,   omega = 1/(x(1-x)),
    V(x) = (alpha-beta)/2 + (beta + (alpha-beta) x)^2 / 4,

so each eigenpair of -phi'' + V phi = lambda omega phi contributes a mode
decaying like exp(-lambda t). For alpha = beta = 0 the spectrum is exactly
(j+1)(j+2), j = 0, 1, ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .pde import ContinuumState
from .quadrature import simpson


class SpectralConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralProblem:
    alpha: float
    beta: float

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        xi = self.alpha - self.beta
        return xi / 2.0 + (self.beta + xi * x) ** 2 / 4.0

    @staticmethod
    def weight(x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (x * (1.0 - x))

    def exponent(self, x):
        """B(x)/2, the gauge used by the w-transform."""
        x = np.asarray(x, dtype=float)
        return (self.beta * x + (self.alpha - self.beta) * x * x / 2.0) / 2.0


@dataclass
class SpectralData:
    problem: SpectralProblem
    eigenvalues: np.ndarray      # lambda_0 < ... < lambda_{J-1}
    x: np.ndarray                # interior nodes of the final grid
    eigenfunctions: np.ndarray   # shape (J, len(x)), omega-orthonormal
    n_cells: int
    refinement_change: float

    @property
    def lambda0(self) -> float:
        return float(self.eigenvalues[0])

    def gram(self) -> np.ndarray:
        h = 1.0 / self.n_cells
        w = SpectralProblem.weight(self.x)
        return (self.eigenfunctions * (h * w)) @ self.eigenfunctions.T


def w_transform(p, x, alpha: float, beta: float):
    """w = x(1-x) p exp(-(beta x + (alpha-beta) x^2/2)/2)."""
    x = np.asarray(x, dtype=float)
    return x * (1 - x) * np.asarray(p, dtype=float) * np.exp(-SpectralProblem(alpha, beta).exponent(x))


def inverse_w_transform(w, x, alpha: float, beta: float):
    x = np.asarray(x, dtype=float)
    return np.asarray(w, dtype=float) * np.exp(SpectralProblem(alpha, beta).exponent(x)) / (x * (1 - x))


def _discrete_pencil(problem, n_cells):
    h = 1.0 / n_cells
    x = np.arange(1, n_cells) * h
    om = problem.weight(x)
    d = (2.0 / h**2 + problem.potential(x)) / om
    e = -1.0 / (h**2 * np.sqrt(om[:-1] * om[1:]))
    return x, om, d, e


def eigen_on_grid(problem: SpectralProblem, n_cells: int, J: int = 32):
    """Lowest J eigenpairs of the three-point discretization on ``n_cells`` cells.

    Returns (eigenvalues, x, phi) with phi omega-orthonormal: sum h omega phi_j phi_k = delta_jk.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    if n_cells - 1 < J:
        raise ValueError("grid too coarse for the requested number of modes")
    x, om, d, e = _discrete_pencil(problem, n_cells)
    lam, u = eigh_tridiagonal(d, e, select="i", select_range=(0, J - 1))
    phi = (u / (math.sqrt(1.0 / n_cells) * np.sqrt(om))[:, None]).T
    # fix the sign so every mode starts positive near x = 0
    signs = np.sign(phi[:, 0])
    signs[signs == 0] = 1.0
    return lam, x, phi * signs[:, None]


def _lambda0(problem, n_cells):
    _, _, d, e = _discrete_pencil(problem, n_cells)
    return float(eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))[0])


def principal_eigenvalue(problem: SpectralProblem, tol: float = 1e-8, n_start: int = 256,
                         n_max: int = 16384) -> tuple[float, int, float]:
    """lambda_0 by Richardson-extrapolated grid doubling.

    Returns (lambda0, cells, last change). The three-point scheme is second
    order, so (4 l(2n) - l(n)) / 3 is used and the grid doubled until two
    extrapolated values agree to ``tol``.
    """
    n = n_start
    coarse = _lambda0(problem, n)
    fine = _lambda0(problem, 2 * n)
    prev = (4 * fine - coarse) / 3
    while 2 * n < n_max:
        n *= 2
        coarse, fine = fine, _lambda0(problem, 2 * n)
        cur = (4 * fine - coarse) / 3
        change = abs(cur - prev)
        if change < tol:
            return cur, 2 * n, change
        prev = cur
    raise SpectralConvergenceError(f"lambda_0 not settled to {tol} by {n_max} cells (last change {change:.2e})")


def eigen_solve(problem: SpectralProblem, J: int = 32, tol: float = 1e-8,
                n_start: int = 256, n_max: int = 16384) -> SpectralData:
    """Refined eigen-solve.

    ``eigenvalues[0]`` is the Richardson-extrapolated principal eigenvalue
    (converged to ``tol``); the remaining eigenvalues are extrapolated from
    the last two grids. Eigenfunctions come from the finest grid.
    """
    lam0, n_cells, change = principal_eigenvalue(problem, tol, n_start, n_max)
    lam_f, x, phi = eigen_on_grid(problem, n_cells, J)
    lam_c, _, _ = eigen_on_grid(problem, n_cells // 2, J)
    lam = (4 * lam_f - lam_c) / 3
    lam[0] = lam0
    return SpectralData(problem, lam, x, phi, n_cells, change)


def zero_eigenvalue_witness(beta: float, xi: float, panels: int = 4096) -> float:
    """int_A^{A+B} exp(s^2) ds with A = -(sqrt2/2) xi^{-1/2} beta, B = (sqrt2/2) xi^{1/2}.

    A nontrivial zero mode would need this to vanish; the integrand is
    positive so for xi > 0 it never does.
    """
    if not xi > 0:
        raise ValueError("xi = beta - alpha must be positive")
    A = -math.sqrt(2) / 2 * beta / math.sqrt(xi)
    B = math.sqrt(2) / 2 * math.sqrt(xi)
    return simpson(lambda s: np.exp(s * s), A, A + B, panels)


# -- connecting to the PDE solver ------------------------------------------

def interior_norm(state: ContinuumState, alpha: float, beta: float) -> float:
    """J(t) = int omega w^2 dx over the interior nodes (rectangle rule)."""
    x = state.interior_x
    w = w_transform(state.q, x, alpha, beta)
    return float(np.sum(w * w / (x * (1 - x))) / state.n_grid)


def fit_log_slope(t, y) -> float:
    """Least-squares slope of log y against t."""
    return float(np.polyfit(np.asarray(t, float), np.log(np.asarray(y, float)), 1)[0])


def project(data_x, phi, w, n_cells):
    """Coefficients w_hat_j = sum h omega w phi_j (w sampled on ``data_x``)."""
    om = SpectralProblem.weight(data_x)
    return phi @ (w * om) / n_cells


def reconstruct(lam, phi, coeffs, t: float):
    """sum_j w_hat_j exp(-lambda_j t) phi_j on the grid of ``phi``."""
    return (coeffs * np.exp(-np.asarray(lam) * t)) @ phi
