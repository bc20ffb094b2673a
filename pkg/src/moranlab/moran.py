"""Exact finite-N frequency-dependent Moran process.

The chain lives on n = 0..N copies of type A (strategy I). Both ends are
absorbing. Three independent routes to the fixation profile are provided:
the product formula, a banded linear solve, and the power limit of the
iteration matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from ._kernels import advance
from .game import PayoffMatrix

DEATH_BIRTH = "death-birth"
BIRTH_DEATH = "birth-death"
VARIANTS = (DEATH_BIRTH, BIRTH_DEATH)

# below this |r - 1| the neutral closed form n/N is used
R_SWITCH = 1e-10


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class MoranChain:
    N: int
    payoffs: PayoffMatrix
    variant: str = DEATH_BIRTH

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"population size must be an integer >= 2, got {self.N!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    @classmethod
    def frequency_independent(cls, N: int, r: float, variant: str = DEATH_BIRTH) -> "MoranChain":
        """Chain with ``A = B = 1`` and ``C = D = r`` (r is the fitness of B relative to A)."""
        return cls(N, PayoffMatrix(1.0, 1.0, r, r), variant)


def fitnesses(chain: MoranChain, n: int) -> tuple[float, float]:
    """Fitnesses (phi_A, phi_B) with n type-A individuals.

    phi_A needs 1 <= n <= N and phi_B needs 0 <= n <= N-1; an out-of-range
    side is returned as NaN, and n outside 0..N raises.
    """
    N = chain.N
    A, B, C, D = chain.payoffs.as_tuple()
    if not 0 <= n <= N:
        raise ValueError(f"n must lie in 0..{N}, got {n}")
    phi_a = ((n - 1) * A + (N - n) * B) / (N - 1) if n >= 1 else math.nan
    phi_b = (n * C + (N - n - 1) * D) / (N - 1) if n <= N - 1 else math.nan
    return phi_a, phi_b


def relative_fitness(chain: MoranChain, n):
    """rho_N(n) = phi_A / phi_B, written so it is defined for every n."""
    N = chain.N
    A, B, C, D = chain.payoffs.as_tuple()
    return ((A - B) * n + B * N - A) / ((C - D) * n + (N - 1) * D)


def _g(N, n, rho):
    return (N - 1 + (rho - 1) * n) / N


def _g_tilde(N, n, rho):
    return (N + (rho - 1) * n) / N


def transition_coefficients(chain: MoranChain, n: int) -> tuple[float, float, float]:
    """(c+, c0, c-) at state n, evaluated from the fitness-weighted definitions."""
    N = chain.N
    if not 0 <= n <= N:
        raise ValueError(f"n must lie in 0..{N}, got {n}")
    if n == 0 or n == N:
        return 0.0, 1.0, 0.0
    phi_a, phi_b = fitnesses(chain, n)
    if chain.variant == DEATH_BIRTH:
        # a random individual dies, the replacement is drawn from the remaining N-1
        c_plus = (N - n) / N * n * phi_a / (n * phi_a + (N - n - 1) * phi_b)
        c_minus = n / N * (N - n) * phi_b / ((n - 1) * phi_a + (N - n) * phi_b)
        c_zero = (n / N * (n - 1) * phi_a / ((n - 1) * phi_a + (N - n) * phi_b)
                  + (N - n) / N * (N - n - 1) * phi_b / (n * phi_a + (N - n - 1) * phi_b))
    else:
        total = n * phi_a + (N - n) * phi_b
        c_plus = n * phi_a / total * (N - n) / N
        c_minus = (N - n) * phi_b / total * n / N
        c_zero = 1.0 - c_plus - c_minus
    return c_plus, c_zero, c_minus


def factored_coefficients(chain: MoranChain, n: int) -> tuple[float, float, float]:
    """(c+, c0, c-) through f_N, rho_N and g_N (or g~_N for birth/death)."""
    N = chain.N
    if n == 0 or n == N:
        return 0.0, 1.0, 0.0
    f = n / N * (N - n) / N
    rho = relative_fitness(chain, n)
    if chain.variant == DEATH_BIRTH:
        c_plus = f * rho / _g(N, n, rho)
        c_minus = f / _g(N, n - 1, rho)
        c_zero = 1.0 - f * (rho / _g(N, n, rho) + 1.0 / _g(N, n - 1, rho))
    else:
        gt = _g_tilde(N, n, rho)
        c_plus = f * rho / gt
        c_minus = f / gt
        c_zero = 1.0 - f / gt * (1.0 + rho)
    return c_plus, c_zero, c_minus


def coefficient_arrays(chain: MoranChain) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (c+, c0, c-) for n = 0..N with c0 = 1 - c+ - c-."""
    N = chain.N
    n = np.arange(1, N, dtype=float)
    f = n / N * (N - n) / N
    rho = relative_fitness(chain, n)
    up = np.zeros(N + 1)
    down = np.zeros(N + 1)
    if chain.variant == DEATH_BIRTH:
        up[1:N] = f * rho / _g(N, n, rho)
        down[1:N] = f / _g(N, n - 1, rho)
    else:
        gt = _g_tilde(N, n, rho)
        up[1:N] = f * rho / gt
        down[1:N] = f / gt
    stay = 1.0 - up - down
    return up, stay, down


def tridiagonal_matrix(up, stay, down) -> np.ndarray:
    size = len(stay)
    M = np.diag(stay)
    idx = np.arange(size - 1)
    M[idx + 1, idx] = up[:-1]
    M[idx, idx + 1] = down[1:]
    return M


def build_matrix(chain: MoranChain) -> np.ndarray:
    """Column-stochastic iteration matrix M with P(t + dt) = M P(t)."""
    return tridiagonal_matrix(*coefficient_arrays(chain))


def evolve(chain: MoranChain, P0, steps: int) -> np.ndarray:
    """Distribution after ``steps`` iterations, i.e. M**steps @ P0."""
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (chain.N + 1,):
        raise ValueError(f"distribution must have length {chain.N + 1}")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if steps == 0:
        return P0.copy()
    return advance(P0, *coefficient_arrays(chain), int(steps))


def delta_distribution(N: int, n: int) -> np.ndarray:
    P = np.zeros(N + 1)
    P[n] = 1.0
    return P


def power_limit(chain: MoranChain, tol: float = 1e-13, max_steps: int = 10**7) -> np.ndarray:
    """lim M**k by repeated squaring, stopped when M**(2k) and M**k agree to ``tol``.

    Raises :class:`ConvergenceError` once the implied step count exceeds
    ``max_steps``.
    """
    X = build_matrix(chain)
    steps = 1
    while steps <= max_steps:
        Y = X @ X
        steps *= 2
        if np.max(np.abs(Y - X)) < tol:
            return Y
        X = Y
    raise ConvergenceError(f"M**k not settled to {tol} within {max_steps} steps")


def fixation_recursive(chain: MoranChain) -> np.ndarray:
    """Fixation profile F_0..F_N from the telescoped product formula.

    The partial products of H are accumulated as sums of logs and
    rescaled by their maximum before exponentiating.
    """
    N = chain.N
    i = np.arange(1, N, dtype=float)
    rho = relative_fitness(chain, i)
    if chain.variant == DEATH_BIRTH:
        log_h = np.log(_g(N, i, rho)) - np.log(rho) - np.log(_g(N, i - 1, rho))
    else:
        log_h = -np.log(rho)
    # log of prod_{i<k} H(i) for k = 1..N
    log_terms = np.concatenate(([0.0], np.cumsum(log_h)))
    w = np.exp(log_terms - log_terms.max())
    partial = np.cumsum(w)
    F = np.concatenate(([0.0], partial / partial[-1]))
    F[-1] = 1.0
    return F


def fixation_linear_solve(chain: MoranChain, refine: int = 3) -> np.ndarray:
    """Fixation profile from a banded solve of F = c+ F_{n+1} + c0 F_n + c- F_{n-1}."""
    N = chain.N
    up, _, down = coefficient_arrays(chain)
    m = N - 1
    ab = np.zeros((3, m))
    ab[0, 1:] = -up[1:N - 1]          # superdiagonal: -c+(n) at column n+1
    ab[1, :] = up[1:N] + down[1:N]    # diagonal
    ab[2, :-1] = -down[2:N]           # subdiagonal: -c-(n) at column n-1
    rhs = np.zeros(m)
    rhs[-1] = up[N - 1]
    x = solve_banded((1, 1), ab, rhs)
    # The diagonal c+ + c- is rounded, so rows sum to O(eps) instead of 0;
    # chains with a long interior trap amplify that into visible errors.
    # Refinement with the residual (and the diagonal) in extended precision
    # recovers most of the lost digits.
    abl = ab.astype(np.longdouble)
    abl[1] = up[1:N].astype(np.longdouble) + down[1:N].astype(np.longdouble)
    for _ in range(refine):
        xl = x.astype(np.longdouble)
        r = rhs.astype(np.longdouble) - abl[1] * xl
        r[:-1] -= abl[0, 1:] * xl[1:]
        r[1:] -= abl[2, :-1] * xl[:-1]
        x = x + solve_banded((1, 1), ab, r.astype(float))
    F = np.empty(N + 1)
    F[0], F[N] = 0.0, 1.0
    F[1:N] = x
    return F


def fixation_closed_form(N: int, r: float, n, variant: str = DEATH_BIRTH):
    """Fixation probability of type A with frequency-independent payoffs.

    ``r = C/A = D/B`` is the fitness of type B relative to type A. The
    death/birth profile is

        F_n = (1 - r**n + (n/N) * (r**n - r**(n-1))) / (1 - r**(N-1))

    and the birth/death one ``(1 - r**n) / (1 - r**N)``; both reduce to n/N
    at r = 1. Powers go through expm1 to stay accurate near r = 1.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if not r > 0:
        raise ValueError("relative fitness must be positive")
    n = np.asarray(n, dtype=float)
    if abs(r - 1.0) < R_SWITCH:
        return n / N
    lr = math.log(r)
    if variant == BIRTH_DEATH:
        return np.expm1(n * lr) / math.expm1(N * lr)
    num = -np.expm1(n * lr) + n / N * np.exp((n - 1) * lr) * (r - 1.0)
    return num / -math.expm1((N - 1) * lr)
