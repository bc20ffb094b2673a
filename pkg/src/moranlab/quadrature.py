"""Composite Simpson quadrature with panel doubling."""

import numpy as np


class QuadratureError(ArithmeticError):
    pass


def simpson_weights(panels):
    """Weights for ``2*panels`` subintervals of unit length (scale by h)."""
    w = np.ones(2 * panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def simpson(f, a, b, panels):
    """Composite Simpson rule with a fixed number of panels (2 subintervals each)."""
    x = np.linspace(a, b, 2 * panels + 1)
    h = (b - a) / (2 * panels)
    return h * np.dot(simpson_weights(panels), f(x))


def adaptive_simpson(f, a, b, tol=1e-10, min_panels=2048, max_panels=2**22):
    """Double the panel count until two successive results differ by < tol."""
    panels = min_panels
    prev = simpson(f, a, b, panels)
    while panels < max_panels:
        panels *= 2
        cur = simpson(f, a, b, panels)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise QuadratureError(f"Simpson did not settle to {tol} with {max_panels} panels")


def integral_to(f, x, tol=1e-10, min_panels=2048, max_panels=2**16):
    """Vectorized ``int_0^x f(y) dy`` for an array of upper limits.

    Uses ``x * int_0^1 f(x u) du`` so that every limit shares one rule.
    ``f`` must accept 2-D arrays.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))

    def rule(panels):
        u = np.linspace(0.0, 1.0, 2 * panels + 1)
        vals = f(x[:, None] * u[None, :])
        return x * (vals @ simpson_weights(panels)) / (2 * panels)

    panels = min_panels
    prev = rule(panels)
    while panels < max_panels:
        panels *= 2
        cur = rule(panels)
        if np.max(np.abs(cur - prev)) < tol:
            return cur
        prev = cur
    raise QuadratureError(f"Simpson did not settle to {tol} with {max_panels} panels")


def cumulative_simpson(values, h):
    """Running Simpson integral sampled at every even node of a uniform grid.

    ``values`` has odd length ``2m + 1``; returns ``m + 1`` partial integrals
    starting from 0.
    """
    v = np.asarray(values, dtype=float)
    if v.size % 2 == 0:
        raise ValueError("cumulative_simpson needs an odd number of samples")
    pieces = h / 3.0 * (v[:-2:2] + 4.0 * v[1:-1:2] + v[2::2])
    return np.concatenate(([0.0], np.cumsum(pieces)))
