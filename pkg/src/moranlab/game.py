"""Two-strategy games: payoffs, mixed strategies and selection parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


class DegenerateGameError(ValueError):
    """Raised when a formula needs alpha != beta (or another non-degeneracy)."""


@dataclass(frozen=True)
class PayoffMatrix:
    """Row-player payoffs of a symmetric 2x2 game.

    ``A`` is I vs I, ``B`` is I vs II, ``C`` is II vs I and ``D`` is II vs II.
    All entries must be strictly positive since they double as fitnesses.
    """

    A: float
    B: float
    C: float
    D: float

    def __post_init__(self):
        for name in "ABCD":
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"payoff {name} must be positive, got {value!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.A, self.B, self.C, self.D)

    def swapped(self) -> "PayoffMatrix":
        """Same game seen from the other type (relabel I <-> II)."""
        return PayoffMatrix(self.D, self.C, self.B, self.A)

    @classmethod
    def parse(cls, text: str) -> "PayoffMatrix":
        parts = [float(p) for p in text.replace(" ", "").split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected four comma-separated payoffs, got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class MixedPair:
    """Probabilities of playing I for the two competing types."""

    q1: float
    q2: float

    def __post_init__(self):
        for name in ("q1", "q2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")

    def swapped(self) -> "MixedPair":
        return MixedPair(self.q2, self.q1)


@dataclass(frozen=True)
class SelectionIncrements:
    """Weak-selection increments: payoffs are ``1 + a/N`` etc. for population N."""

    a: float
    b: float
    c: float
    d: float

    @property
    def alpha(self) -> float:
        return self.a - self.c

    @property
    def beta(self) -> float:
        return self.b - self.d

    @property
    def eta(self) -> float:
        return self.alpha - self.beta

    @classmethod
    def from_alpha_beta(cls, alpha: float, beta: float) -> "SelectionIncrements":
        """Symmetric split ``a = -c = alpha/2``, ``b = -d = beta/2``.

        Only alpha and beta survive the continuum limit. The symmetric split
        keeps the discrete chain exactly mirror-symmetric under
        ``(alpha, beta) -> (-beta, -alpha)``.
        """
        return cls(alpha / 2.0, beta / 2.0, -alpha / 2.0, -beta / 2.0)

    def payoffs(self, N: int) -> PayoffMatrix:
        """Finite-population payoffs ``(1 + a/N, 1 + b/N, 1 + c/N, 1 + d/N)``."""
        return PayoffMatrix(1.0 + self.a / N, 1.0 + self.b / N,
                            1.0 + self.c / N, 1.0 + self.d / N)


@dataclass(frozen=True)
class EffectiveIncrements:
    """Increments seen by a contest between two mixed strategists."""

    a: float
    b: float
    c: float
    d: float
    alpha: float
    beta: float

    @property
    def eta(self) -> float:
        return self.alpha - self.beta


class InteriorStrategy(NamedTuple):
    value: float
    interior: bool


def _mix(A, B, C, D, q1, q2):
    # bilinear form of the payoff table for row strategy q1 against column strategy q2
    return (q1 * q2 * A + q1 * (1 - q2) * B
            + (1 - q1) * q2 * C + (1 - q1) * (1 - q2) * D)


def mixed_payoffs(P: PayoffMatrix, q: MixedPair) -> PayoffMatrix:
    """Payoff table of an E_{q1} vs E_{q2} contest."""
    q1, q2 = q.q1, q.q2
    A, B, C, D = P.as_tuple()
    At = q1**2 * A + q1 * (1 - q1) * (B + C) + (1 - q1) ** 2 * D
    Bt = q1 * q2 * A + q1 * (1 - q2) * B + (1 - q1) * q2 * C + (1 - q1) * (1 - q2) * D
    Ct = q1 * q2 * A + (1 - q1) * q2 * B + q1 * (1 - q2) * C + (1 - q1) * (1 - q2) * D
    Dt = q2**2 * A + q2 * (1 - q2) * (B + C) + (1 - q2) ** 2 * D
    return PayoffMatrix(At, Bt, Ct, Dt)


def effective_increments(s, q: MixedPair) -> EffectiveIncrements:
    """Weak-selection increments for mixed strategists.

    ``alpha~`` and ``beta~`` use the factored forms so that
    ``alpha~ - beta~ = (q1 - q2)**2 * (alpha - beta)`` holds to rounding.
    """
    q1, q2 = q.q1, q.q2
    a, b, c, d = s.a, s.b, s.c, s.d
    at = q1**2 * a + q1 * (1 - q1) * (b + c) + (1 - q1) ** 2 * d
    bt = _mix(a, b, c, d, q1, q2)
    ct = _mix(a, b, c, d, q2, q1)
    dt = q2**2 * a + q2 * (1 - q2) * (b + c) + (1 - q2) ** 2 * d
    dq = q1 - q2
    alpha_t = dq * (q1 * s.alpha + (1 - q1) * s.beta)
    beta_t = dq * (q2 * s.alpha + (1 - q2) * s.beta)
    return EffectiveIncrements(at, bt, ct, dt, alpha_t, beta_t)


def q_star(s) -> InteriorStrategy:
    """Interior strategy ``beta / (beta - alpha)``.

    ``s`` is anything exposing ``alpha`` and ``beta``. Raises
    :class:`DegenerateGameError` when ``alpha == beta``.
    """
    alpha, beta = s.alpha, s.beta
    if alpha == beta:
        raise DegenerateGameError("alpha == beta: no interior strategy")
    value = beta / (beta - alpha)
    return InteriorStrategy(value, 0.0 < value < 1.0)
