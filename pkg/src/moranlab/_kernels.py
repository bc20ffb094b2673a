"""Compiled inner loops for tridiagonal column-stochastic iterations."""

import numpy as np
from numba import njit


@njit(cache=True)
def advance(P, up, stay, down, steps):
    """Apply ``steps`` iterations of the tridiagonal chain to ``P``.

    ``up[n]``, ``stay[n]``, ``down[n]`` are the probabilities of moving from
    state n to n+1, n, n-1. Returns a new array.
    """
    n = P.shape[0]
    cur = P.copy()
    nxt = np.empty_like(cur)
    for _ in range(steps):
        nxt[0] = stay[0] * cur[0] + down[1] * cur[1]
        for i in range(1, n - 1):
            nxt[i] = up[i - 1] * cur[i - 1] + stay[i] * cur[i] + down[i + 1] * cur[i + 1]
        nxt[n - 1] = up[n - 2] * cur[n - 2] + stay[n - 1] * cur[n - 1]
        cur, nxt = nxt, cur
    return cur


@njit(cache=True)
def advance_with_flux(P, up, stay, down, steps):
    """Like :func:`advance` but also returns trapezoid time-integrals (in steps)
    of the one-step fluxes into the two absorbing ends."""
    n = P.shape[0]
    cur = P.copy()
    nxt = np.empty_like(cur)
    left = 0.0
    right = 0.0
    fl_prev = down[1] * cur[1]
    fr_prev = up[n - 2] * cur[n - 2]
    for _ in range(steps):
        nxt[0] = stay[0] * cur[0] + down[1] * cur[1]
        for i in range(1, n - 1):
            nxt[i] = up[i - 1] * cur[i - 1] + stay[i] * cur[i] + down[i + 1] * cur[i + 1]
        nxt[n - 1] = up[n - 2] * cur[n - 2] + stay[n - 1] * cur[n - 1]
        cur, nxt = nxt, cur
        fl = down[1] * cur[1]
        fr = up[n - 2] * cur[n - 2]
        left += 0.5 * (fl_prev + fl)
        right += 0.5 * (fr_prev + fr)
        fl_prev = fl
        fr_prev = fr
    return cur, left, right
