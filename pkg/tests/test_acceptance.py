"""Acceptance criteria 1-13, one test per criterion.

Each test records a single PASS/FAIL line (shown in the terminal summary)
and then asserts, so a failing criterion also fails the test run.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from moranlab.dominance import (NearNeutralError, Verdict, classify, delta_dominates_numeric)
from moranlab.drift import (asymptotic_masses, frequency_independent, masses_by_characteristics)
from moranlab.game import PayoffMatrix, SelectionIncrements, q_star
from moranlab.imitation import ImitationKernel, imitation_to_absorption
from moranlab.moran import (MoranChain, build_matrix, coefficient_arrays, delta_distribution,
                            evolve, fixation_closed_form, fixation_linear_solve,
                            fixation_recursive, power_limit)
from moranlab.ode import classify_equilibria, long_time_limit
from moranlab.pde import (ContinuumState, PdeParams, delta_state, evolve_pde, run_to_absorption)
from moranlab.spectral import (SpectralProblem, fit_log_slope, interior_norm,
                               principal_eigenvalue)

pytestmark = pytest.mark.acceptance

GAMMAS = (-2.0, 1.0, 4.0)
X0S = (0.25, 0.5, 0.75)
GRIDS = (50, 100, 200, 400)
REGIMES = {1: (2.0, 1.0), 2: (2.0, -1.0), 3: (-1.0, -2.0), 4: (-2.0, -1.0), 5: (-1.0, 2.0), 6: (1.0, 2.0)}


def fix_single(gamma, x0):
    return -math.expm1(-gamma * x0) / -math.expm1(-gamma)


@lru_cache(maxsize=None)
def absorbed_b(gamma, x0, n):
    final, defect = run_to_absorption(delta_state(n, x0), PdeParams(gamma, gamma, n))
    return final.b, defect


def test_c01_absorption(criterion, fig_payoffs):
    t0 = time.perf_counter()
    Mk = np.linalg.matrix_power(build_matrix(MoranChain(20, fig_payoffs)), 10_000)
    worst = float(np.max(np.abs(Mk[1:-1, :])))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-30 and elapsed < 1.0
    criterion(1, ok, f"absorption: max interior entry of M^10000 = {worst:.2e} (< 1e-30), {elapsed:.3f}s (< 1s)")
    assert ok


def test_c02_fixation_triple(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        N = int(rng.integers(2, 51))
        P = PayoffMatrix(*rng.uniform(0.2, 5.0, 4))
        chain = MoranChain(N, P)
        a = fixation_recursive(chain)
        b = fixation_linear_solve(chain)
        c = power_limit(chain)[-1]
        worst = max(worst, np.max(np.abs(a - b)), np.max(np.abs(a - c)), np.max(np.abs(b - c)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 10.0
    criterion(2, ok, f"fixation triple agreement: max pairwise diff {worst:.2e} (< 1e-9) over 100 "
                     f"instances, {elapsed:.2f}s (< 10s)")
    assert ok


def test_c03_closed_forms(criterion):
    N = 20
    n = np.arange(N + 1)
    errs = {r: float(np.max(np.abs(fixation_closed_form(N, r, n)
                                   - fixation_recursive(MoranChain.frequency_independent(N, r)))))
            for r in (1.0, 1.5)}
    neutral_exact = np.array_equal(fixation_closed_form(N, 1.0, n), n / N)
    ok = max(errs.values()) < 1e-10 and neutral_exact
    criterion(3, ok, f"closed forms: r=1 err {errs[1.0]:.1e}, r=1.5 err {errs[1.5]:.1e} (< 1e-10); "
                     f"neutral n/N exact: {neutral_exact}")
    assert ok


def test_c04_conservation(criterion, fig_payoffs):
    chain = MoranChain(20, fig_payoffs)
    F = fixation_recursive(chain)
    P0 = np.full(21, 1 / 21)
    P, mass, fun = P0, [P0.sum()], [F @ P0]
    for _ in range(100):
        P = evolve(chain, P, 100)
        mass.append(P.sum())
        fun.append(F @ P)
    dm = float(np.max(np.abs(np.subtract(mass, mass[0]))))
    df = float(np.max(np.abs(np.subtract(fun, fun[0]))))
    ok = dm < 1e-10 and df < 1e-10
    criterion(4, ok, f"conservation over 1e4 steps: <P,1> drift {dm:.1e}, <P,F> drift {df:.1e} (< 1e-10)")
    assert ok


def test_c05_continuum_fixation(criterion):
    t0 = time.perf_counter()
    worst400, monotone, worst_defect = 0.0, True, 0.0
    for g in GAMMAS:
        for x0 in X0S:
            target = fix_single(g, x0)
            errs = []
            for n in GRIDS:
                b, defect = absorbed_b(g, x0, n)
                errs.append(abs(b - target))
                worst_defect = max(worst_defect, defect)
            worst400 = max(worst400, errs[-1])
            monotone &= all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
    elapsed = time.perf_counter() - t0
    ok = worst400 < 5e-3 and monotone and elapsed < 120
    criterion(5, ok, f"continuum fixation: max |b(inf) - pi_1| at N_g=400 = {worst400:.2e} (< 5e-3), "
                     f"monotone in N_g: {monotone}, mass defect {worst_defect:.1e}, {elapsed:.1f}s (< 120s)")
    assert ok


def test_c06_neutral_continuum(criterion):
    errs = []
    for x0 in X0S + (0.1, 0.9):
        final, _ = run_to_absorption(delta_state(400, x0), PdeParams(0.0, 0.0, 400))
        errs.append(abs(final.b - x0))
    worst = max(errs)
    ok = worst < 2e-3
    criterion(6, ok, f"neutral continuum: max |b(inf) - x0| at N_g=400 = {worst:.2e} (< 2e-3)")
    assert ok


def test_c07_reflection(criterion):
    worst = 0.0
    n = 200
    x = np.arange(n + 1) / n
    for ab in [(1.0, 2.0), (-3.0, 5.0), (4.0, -4.0), (0.0, 7.0)]:
        for dens in (20 * x**3 * (1 - x), 6 * x * (1 - x) * (1 + np.sin(9 * x) ** 2)):
            P0 = dens.copy()
            P0[[0, -1]] = 0
            P0 /= P0.sum()
            s = ContinuumState(n, P0)
            p = PdeParams(*ab, n)
            left = evolve_pde(s, p, 0.5)
            right = evolve_pde(s.mirrored(), p.mirrored(), 0.5)
            worst = max(worst, float(np.max(np.abs(left.P - right.P[::-1]))))
    ok = worst < 1e-12
    criterion(7, ok, f"reflection symmetry: max mirrored difference {worst:.1e} (< 1e-12)")
    assert ok


def test_c08_dominance(criterion):
    grid = np.linspace(0.0, 1.0, 20)
    per_row = {}
    for row, ab in REGIMES.items():
        s = SelectionIncrements.from_alpha_beta(*ab)
        bad = 0
        for q1 in grid:
            for q2 in grid:
                try:
                    num = delta_dominates_numeric(s, q1, q2).verdict
                except NearNeutralError:
                    continue
                bad += num is not classify(s, q1, q2).verdict
        per_row[row] = bad
    rng = np.random.default_rng(8)
    asym_fail = 0
    for _ in range(1000):
        a, b = rng.uniform(-10, 10, 2)
        q1, q2 = rng.uniform(0, 1, 2)
        s = SelectionIncrements.from_alpha_beta(a, b)
        try:
            v = delta_dominates_numeric(s, q1, q2, n_points=200)
            w = delta_dominates_numeric(s, q2, q1, n_points=200)
        except NearNeutralError:
            continue
        asym_fail += w.verdict is not v.reversed().verdict
    total = sum(per_row.values())
    ok = total == 0 and asym_fail == 0
    criterion(8, ok, f"dominance: table vs numeric disagreements per row {per_row} (need 0); "
                     f"antisymmetry failures {asym_fail}/1000")
    assert ok


def test_c09_ess(criterion):
    rng = np.random.default_rng(9)
    failures, worst_margin = 0, math.inf
    for _ in range(50):
        alpha, beta = -rng.uniform(0.2, 10), rng.uniform(0.2, 10)
        s = SelectionIncrements.from_alpha_beta(alpha, beta)
        qs = q_star(s).value
        q = rng.uniform(0, 1)
        v = delta_dominates_numeric(s, q, qs)
        failures += v.verdict is not Verdict.Q2_DOMINATES
        worst_margin = min(worst_margin, v.margin)
    ok = failures == 0
    criterion(9, ok, f"ESS: q* dominates {50 - failures}/50 sampled q (smallest margin {worst_margin:.1e})")
    assert ok


def test_c10_replicator_ode(criterion):
    x0 = np.linspace(0.02, 0.98, 20)
    worst = 0.0
    for row, (a, b) in REGIMES.items():
        table = classify_equilibria(a, b)
        xs = b / (b - a)
        if len(table.stable) == 1:
            expected = np.full_like(x0, table.stable[0])
        else:
            expected = np.where(x0 < xs, 0.0, 1.0)
        got = long_time_limit(a, b, x0)
        worst = max(worst, float(np.max(np.abs(got - expected))))
    ok = worst < 1e-6
    criterion(10, ok, f"replicator ODE: max |X(inf) - Table 1| over 6x20 runs = {worst:.1e} (< 1e-6)")
    assert ok


def test_c11_drift_limit(criterion):
    uniform = lambda x: np.ones_like(x)
    coord = PayoffMatrix(3, 1, 1, 2)
    exact = asymptotic_masses(coord, uniform)
    oracle = masses_by_characteristics(coord, uniform)
    e_coord = max(abs(exact.pi0 - 1 / 3), abs(exact.pi1 - 2 / 3),
                  abs(oracle.pi0 - 1 / 3), abs(oracle.pi1 - 2 / 3))
    hd = asymptotic_masses(PayoffMatrix(1, 3, 2, 1), uniform)
    hd_orc = masses_by_characteristics(PayoffMatrix(1, 3, 2, 1), uniform)
    hd_ok = hd.pi_star == 1.0 and abs(hd.x_star - 2 / 3) < 1e-15 and abs(hd_orc.pi_star - 1) < 1e-3
    fi = asymptotic_masses(frequency_independent(1.5), uniform)
    fi_orc = masses_by_characteristics(frequency_independent(1.5), uniform)
    fi_ok = fi.pi1 == 1.0 and abs(fi_orc.pi1 - 1) < 1e-3
    ok = e_coord < 1e-3 and hd_ok and fi_ok
    criterion(11, ok, f"drift limit: coordination masses err {e_coord:.1e} (< 1e-3) vs oracle; "
                      f"hawk-dove all mass at 2/3: {hd_ok}; r=1.5 -> delta_1: {fi_ok}")
    assert ok


def test_c12_spectral(criterion):
    t0 = time.perf_counter()
    vals = [-20.0, 0.0, 20.0]
    lam_min = min(principal_eigenvalue(SpectralProblem(a, b))[0] for a in vals for b in vals)
    rel = {}
    n = 200
    for ab in [(0.0, 0.0), (1.0, 2.0)]:
        lam0 = principal_eigenvalue(SpectralProblem(*ab))[0]
        params = PdeParams(*ab, n)
        s = delta_state(n, 0.5)
        ts, J = [], []
        for t in np.linspace(0.5, 2.0, 16):
            s = evolve_pde(s, params, t)
            ts.append(t)
            J.append(interior_norm(s, *ab))
        slope = fit_log_slope(ts, J)
        rel[ab] = abs(slope / (-2 * lam0) - 1)
    elapsed = time.perf_counter() - t0
    ok = lam_min > 0 and max(rel.values()) < 0.05 and elapsed < 60
    criterion(12, ok, f"spectral: min lambda_0 on 3x3 grid = {lam_min:.4f} (> 0); decay slope rel. err "
                      f"(0,0) {rel[(0.0, 0.0)]:.2%}, (1,2) {rel[(1.0, 2.0)]:.2%} (< 5%); {elapsed:.1f}s (< 60s)")
    assert ok


def test_c13_imitation(criterion):
    kernel = ImitationKernel(1.0, 0.5)
    identical = True
    drift = 0.0
    psi_defect = 0.0
    for g in GAMMAS:
        for x0 in X0S:
            for n in GRIDS:
                run = imitation_to_absorption(delta_state(n, x0), g, g, kernel)
                identical &= run.b_inf == absorbed_b(g, x0, n)[0]
                drift = max(drift, run.discrete_functional_drift)
                if n == 400:
                    psi_defect = max(psi_defect, run.psi_functional_drift)
    ok = identical and drift < 1e-6
    criterion(13, ok, f"imitation: reproduces criterion 5 bit-for-bit: {identical}; conserved functional "
                      f"drift {drift:.1e} (< 1e-6); continuum psi defect at N_g=400 {psi_defect:.1e}")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
