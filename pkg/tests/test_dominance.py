import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from moranlab.dominance import (NearNeutralError, Verdict, classify, delta_dominates_numeric,
                                dominance_edges, f_aux, fixation_ratio, regime)
from moranlab.game import (DegenerateGameError, MixedPair, SelectionIncrements,
                           effective_increments, q_star)
from moranlab.pde import pi_one

REGIMES = {1: (2.0, 1.0), 2: (2.0, -1.0), 3: (-1.0, -2.0), 4: (-2.0, -1.0), 5: (-1.0, 2.0), 6: (1.0, 2.0)}
GRID = np.linspace(0.0, 1.0, 20)


def inc(alpha, beta):
    return SelectionIncrements.from_alpha_beta(alpha, beta)


def test_regime_rows():
    for row, ab in REGIMES.items():
        assert regime(*ab) == row
    for bad in [(1, 1), (0, 2), (2, 0)]:
        with pytest.raises(DegenerateGameError):
            regime(*bad)


def test_f_aux_examples():
    s = inc(-1.0, 2.0)
    y = np.linspace(0, 1, 9)
    assert np.all(f_aux(s, 0.4, 0.4, y) == 1.0)
    # Delta = -2/3, eta = -3, q2 alpha + (1-q2) beta = 0  ->  exponent 2/3 at y = 1
    assert f_aux(s, 0.0, 2 / 3, 1.0) == pytest.approx(math.exp(2 / 3), rel=1e-14)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_f_aux_reflection_identity(a, b, q1, q2, y):
    s = inc(a, b)
    lhs = f_aux(s, q1, q2, y)
    rhs = f_aux(s, q2, q1, 1 - y) * f_aux(s, q1, q2, 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-11)


def test_f_aux_is_psi_integrand_of_contest():
    s = inc(3.0, -1.0)
    e = effective_increments(s, MixedPair(0.2, 0.7))
    y = np.linspace(0, 1, 11)
    want = np.exp(-y * y * (e.alpha - e.beta) / 2 - y * e.beta)
    assert np.allclose(f_aux(s, 0.2, 0.7, y), want, rtol=1e-13)


def test_fixation_ratio_matches_quad():
    s = inc(-1.0, 2.0)
    x = np.arange(1, 10) / 10
    F = lambda y: float(f_aux(s, 0.1, 0.95, y))
    Z = quad(F, 0, 1, epsabs=1e-14)[0]
    want = [quad(F, 0, xi, epsabs=1e-14)[0] / Z for xi in x]
    assert np.max(np.abs(fixation_ratio(s, 0.1, 0.95, x) - want)) < 1e-10


def test_increasing_f_means_q2_dominates():
    # alpha > beta > 0 and q2 > q1: the exponent is increasing on [0, 1]
    s = inc(2.0, 1.0)
    y = np.linspace(0, 1, 50)
    assert np.all(np.diff(f_aux(s, 0.2, 0.7, y)) > 0)
    assert delta_dominates_numeric(s, 0.2, 0.7).verdict is Verdict.Q2_DOMINATES


def test_equal_strategies_neither():
    assert delta_dominates_numeric(inc(2, 1), 0.3, 0.3).verdict is Verdict.NEITHER


def test_near_neutral_signalled():
    with pytest.raises(NearNeutralError):
        delta_dominates_numeric(inc(2, 1), 0.3, 0.3 + 1e-10)


def test_table_examples():
    assert classify(inc(2, 1), 0.2, 0.7).verdict is Verdict.Q2_DOMINATES
    qs = 2 / 3
    assert classify(inc(-1, 2), 0.2, 0.5).verdict is Verdict.Q2_DOMINATES
    assert classify(inc(-1, 2), 0.2, qs).verdict is Verdict.Q2_DOMINATES
    with pytest.raises(DegenerateGameError):
        classify(inc(1, 1), 0.2, 0.5)


def test_row_three_favours_smaller_q():
    # 0 > alpha > beta: both advantages negative, so the smaller q wins
    s = inc(-1.0, -2.0)
    assert classify(s, 0.2, 0.7).verdict is Verdict.Q1_DOMINATES
    assert delta_dominates_numeric(s, 0.2, 0.7).verdict is Verdict.Q1_DOMINATES


@pytest.mark.parametrize("row", [1, 3, 4, 6])
def test_table_agrees_with_numeric_monotone_rows(row):
    s = inc(*REGIMES[row])
    for q1 in GRID:
        for q2 in GRID:
            if q1 == q2:
                continue
            assert classify(s, q1, q2).verdict is delta_dominates_numeric(s, q1, q2).verdict


@pytest.mark.parametrize("row", [2, 5])
def test_table_agrees_on_same_side_of_q_star(row):
    s = inc(*REGIMES[row])
    qs = q_star(s).value
    for q1 in GRID:
        for q2 in GRID:
            if q1 == q2 or (q1 - qs) * (q2 - qs) < 0:
                continue
            assert classify(s, q1, q2).verdict is delta_dominates_numeric(s, q1, q2).verdict


def test_cross_q_star_pair_dominates_numerically():
    """Rows 2 and 5 of the table are sufficient, not necessary.

    With alpha=-1, beta=2 (q*=2/3), E_{0.95} still dominates E_{0.1}: the
    integral test holds with a clear margin although F is not monotone.
    """
    s = inc(-1.0, 2.0)
    assert classify(s, 0.1, 0.95).verdict is Verdict.NEITHER
    v = delta_dominates_numeric(s, 0.1, 0.95)
    assert v.verdict is Verdict.Q2_DOMINATES and v.margin > 1e-3
    y = np.linspace(0, 1, 101)
    assert np.any(np.diff(f_aux(s, 0.1, 0.95, y)) < 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 1), st.floats(0, 1))
def test_antisymmetry(a, b, q1, q2):
    s = inc(a, b)
    try:
        v = delta_dominates_numeric(s, q1, q2, n_points=200)
        w = delta_dominates_numeric(s, q2, q1, n_points=200)
    except NearNeutralError:
        return
    assert w.verdict is v.reversed().verdict


@pytest.mark.parametrize("ab", [(-1.0, 2.0), (-3.0, 0.5), (-0.5, 4.0)])
def test_ess_dominates(ab, rng):
    s = inc(*ab)
    qs = q_star(s)
    assert qs.interior
    for q in rng.uniform(0, 1, 10):
        assert delta_dominates_numeric(s, q, qs.value).verdict is Verdict.Q2_DOMINATES


def test_delta_dominance_implies_density_dominance(rng):
    s = inc(2.0, 1.0)
    q1, q2 = 0.3, 0.8
    assert delta_dominates_numeric(s, q1, q2).verdict is Verdict.Q2_DOMINATES
    e = effective_increments(s, MixedPair(q1, q2))
    for _ in range(10):
        k, m = rng.uniform(1.0, 6.0, 2)
        norm = math.gamma(k) * math.gamma(m) / math.gamma(k + m)
        p0 = lambda x, k=k, m=m: x ** (k - 1) * (1 - x) ** (m - 1) / norm
        assert pi_one(e.alpha, e.beta, p0) < k / (k + m)


def test_edges_point_to_dominant():
    edges = dominance_edges(inc(2, 1), [0.0, 0.5, 1.0])
    assert set(edges) == {(0.0, 0.5), (0.0, 1.0), (0.5, 1.0)}
    assert set(dominance_edges(inc(2, 1), [0.0, 0.5, 1.0], method="numeric")) == set(edges)
