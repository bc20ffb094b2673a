"""Command-line experiment runner.

Every subcommand writes ``<name>.csv`` (header line, 17 significant digits)
and ``<name>.json`` (parameters and invariant residuals) into the output
directory: ``--out``, else ``$MORANLAB_OUTPUT_DIR``, else the current
directory.

Exit status: 0 success, 1 invalid parameters, 3 invariant violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .game import DegenerateGameError, PayoffMatrix

OUTPUT_ENV = "MORANLAB_OUTPUT_DIR"
MASS_TOL = 1e-10
FUNCTIONAL_TOL = 1e-6
FIXATION_TOL = 1e-9

EXIT_INVALID = 1
EXIT_INVARIANT = 3


class InvalidParameters(ValueError):
    pass


# -- initial conditions ----------------------------------------------------

NAMED_DENSITIES = {
    "20x3(1-x)": lambda x: 20 * x**3 * (1 - x),
    "6x(1-x)": lambda x: 6 * x * (1 - x),
    "uniform": lambda x: np.ones_like(x),
}


def parse_init(text: str):
    """Return ``("delta", x0)`` or ``("density", callable)``.

    Accepted: ``delta:x0``, the names in NAMED_DENSITIES, and
    ``table:PATH`` (two columns x, p; linear interpolation, '#' comments).
    """
    if text.startswith("delta:"):
        try:
            x0 = float(text[6:])
        except ValueError:
            raise InvalidParameters(f"bad delta position in {text!r}") from None
        if not 0.0 <= x0 <= 1.0:
            raise InvalidParameters("delta position must lie in [0, 1]")
        return "delta", x0
    if text in NAMED_DENSITIES:
        return "density", NAMED_DENSITIES[text]
    if text.startswith("table:"):
        path = text[6:]
        try:
            tab = np.loadtxt(path, delimiter=None if not path.endswith(".csv") else ",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise InvalidParameters(f"cannot read density table {path}: {exc}") from None
        if tab.shape[1] != 2 or np.any(np.diff(tab[:, 0]) <= 0) or np.any(tab[:, 1] < 0):
            raise InvalidParameters("density table needs increasing x and nonnegative p")
        xs, ps = tab[:, 0].copy(), tab[:, 1].copy()
        return "density", lambda x: np.interp(x, xs, ps, left=0.0, right=0.0)
    raise InvalidParameters(f"unknown initial condition {text!r}")


def _state(init, n_grid):
    from .pde import delta_state, density_state
    kind, val = init
    return delta_state(n_grid, val) if kind == "delta" else density_state(n_grid, val)


# -- output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


class Output:
    def __init__(self, directory: Path, name: str):
        self.dir = directory
        self.name = name

    def write(self, header, rows, summary):
        self.dir.mkdir(parents=True, exist_ok=True)
        with open(self.dir / f"{self.name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        with open(self.dir / f"{self.name}.json", "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _payoffs(text):
    try:
        return PayoffMatrix.parse(text)
    except ValueError as exc:
        raise InvalidParameters(str(exc)) from None


def _alpha_beta(args):
    if args.eta is not None:
        if args.alpha is not None:
            raise InvalidParameters("give --alpha or --eta, not both")
        return args.beta + args.eta, args.beta
    if args.alpha is None:
        raise InvalidParameters("need --alpha (or --eta) together with --beta")
    return args.alpha, args.beta


def _summary(args, alpha_beta=None, **extra):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "name")}
    if alpha_beta is not None:
        params["alpha"], params["beta"] = alpha_beta
    out = {"command": args.command, "version": __version__, "parameters": params}
    out.update(extra)
    return out


# -- subcommands -----------------------------------------------------------

def cmd_fixation(args, out):
    from .moran import (MoranChain, fixation_closed_form, fixation_linear_solve,
                        fixation_recursive, power_limit)
    if (args.payoffs is None) == (args.r is None):
        raise InvalidParameters("give exactly one of --payoffs or --r")
    if args.r is not None:
        if not args.r > 0:
            raise InvalidParameters("--r must be positive")
        chain = MoranChain.frequency_independent(args.N, args.r, args.variant)
    else:
        chain = MoranChain(args.N, _payoffs(args.payoffs), args.variant)
    rec = fixation_recursive(chain)
    lin = fixation_linear_solve(chain)
    powl = power_limit(chain)[-1]
    cols = [rec, lin, powl]
    header = ["n", "recursive", "linear_solve", "power_limit"]
    if args.r is not None:
        cols.append(fixation_closed_form(args.N, args.r, np.arange(args.N + 1), args.variant))
        header.append("closed_form")
    rows = [[n] + [c[n] for c in cols] for n in range(args.N + 1)]
    spread = max(float(np.max(np.abs(a - b))) for i, a in enumerate(cols) for b in cols[i + 1:])
    ok = spread < FIXATION_TOL
    out.write(header, rows, _summary(args, residuals={"max_pairwise_difference": spread},
                                     invariants_ok=ok))
    return ok


def cmd_evolve(args, out):
    from .moran import (MoranChain, coefficient_arrays, delta_distribution,
                        fixation_recursive)
    from ._kernels import advance
    chain = MoranChain(args.N, _payoffs(args.payoffs), args.variant)
    if not 0 <= args.n0 <= args.N:
        raise InvalidParameters("--n0 must lie in 0..N")
    if args.steps < 0 or args.every < 1:
        raise InvalidParameters("--steps must be >= 0 and --every >= 1")
    coeffs = coefficient_arrays(chain)
    F = fixation_recursive(chain)
    P = delta_distribution(args.N, args.n0)
    m0, f0 = float(P.sum()), float(F @ P)
    rows, mass_err, fun_err = [], 0.0, 0.0
    k = 0
    while True:
        mass_err = max(mass_err, abs(float(P.sum()) - m0))
        fun_err = max(fun_err, abs(float(F @ P) - f0))
        rows.append([k, float(P.sum()), float(F @ P)] + list(P))
        if k >= args.steps:
            break
        step = min(args.every, args.steps - k)
        P = advance(P, *coeffs, step)
        k += step
    header = ["step", "mass", "fixation_functional"] + [f"P{n}" for n in range(args.N + 1)]
    ok = mass_err < MASS_TOL and fun_err < MASS_TOL
    out.write(header, rows, _summary(args, residuals={"mass_drift": mass_err,
                                                      "fixation_functional_drift": fun_err},
                                     invariants_ok=ok))
    return ok


def _series_rows(series, t_scale=1.0):
    arr = series.as_arrays()
    keys = ["t", "a", "b", "a_trapezoid", "b_trapezoid", "interior_mass", "mass_defect",
            "sup_q", "weighted_l2", "psi_functional", "discrete_functional"]
    arr["t"] = arr["t"] * t_scale
    return keys, [[arr[k][i] for k in keys] for i in range(len(arr["t"]))]


def _series_residuals(series):
    arr = series.as_arrays()
    return {
        "max_mass_defect": float(arr["mass_defect"].max()),
        "discrete_functional_drift": float(np.max(np.abs(arr["discrete_functional"]
                                                         - arr["discrete_functional"][0]))),
        "psi_functional_defect": float(np.max(np.abs(arr["psi_functional"]
                                                     - arr["psi_functional"][0]))),
    }


def _check_series(res):
    return res["max_mass_defect"] < MASS_TOL and res["discrete_functional_drift"] < FUNCTIONAL_TOL


def _write_densities(out, state, series):
    if not series.densities:
        return
    header = ["t"] + ["x=%.17g" % x for x in state.interior_x]
    rows = [[t] + list(q) for t, q in zip(series.t, series.densities)]
    Output(out.dir, out.name + "_densities").write(header, rows, {"rows": len(rows)})


def cmd_pde(args, out):
    from .pde import PdeParams, pde_series
    alpha, beta = _alpha_beta(args)
    params = PdeParams(alpha, beta, args.grid)
    state = _state(parse_init(args.init), args.grid)
    final, series = pde_series(state, params, args.t_end, args.snapshot, keep_densities=args.densities)
    header, rows = _series_rows(series)
    res = _series_residuals(series)
    ok = _check_series(res)
    out.write(header, rows, _summary(args, (alpha, beta), residuals=res, invariants_ok=ok,
                                     final={"a": final.a, "b": final.b, "t": final.t}))
    if args.densities:
        _write_densities(out, state, series)
    return ok


def cmd_dominance(args, out):
    from .dominance import NearNeutralError, classify, delta_dominates_numeric
    from .game import SelectionIncrements
    s = SelectionIncrements.from_alpha_beta(args.alpha, args.beta)
    qs = (np.array([float(v) for v in args.strategies.split(",")]) if args.strategies
          else np.linspace(0.0, 1.0, args.grid_size))
    rows, disagree = [], 0
    for q1 in qs:
        for q2 in qs:
            tab = num = ""
            margin = float("nan")
            if args.method in ("table", "both"):
                try:
                    tab = classify(s, q1, q2).verdict.name
                except DegenerateGameError:
                    tab = "DEGENERATE"
            if args.method in ("numeric", "both"):
                try:
                    v = delta_dominates_numeric(s, q1, q2)
                    num, margin = v.verdict.name, v.margin
                except NearNeutralError:
                    num = "NEAR_NEUTRAL"
            if args.method == "both" and tab and num not in ("NEAR_NEUTRAL",) and tab != "DEGENERATE":
                disagree += tab != num
            rows.append([q1, q2, tab, num, margin])
    out.write(["q1", "q2", "table", "numeric", "margin"], rows,
              _summary(args, residuals={"disagreements": disagree}, invariants_ok=True))
    return True


def cmd_ode(args, out):
    from .ode import integrate
    if not 0.0 <= args.x0 <= 1.0:
        raise InvalidParameters("--x0 must lie in [0, 1]")
    traj = integrate(args.alpha, args.beta, args.x0, args.t_end, n_steps=args.steps)
    stride = max(1, len(traj.t) // args.rows)
    idx = list(range(0, len(traj.t), stride))
    if idx[-1] != len(traj.t) - 1:
        idx.append(len(traj.t) - 1)
    rows = [[traj.t[i], traj.X[i]] for i in idx]
    out.write(["t", "X"], rows, _summary(args, residuals={"clamped_excursion": traj.clamped},
                                         invariants_ok=True, steps=len(traj.t) - 1))
    return True


def cmd_drift(args, out):
    from .drift import asymptotic_masses, masses_by_characteristics
    P = _payoffs(args.payoffs)
    kind, val = parse_init(args.init)
    res = asymptotic_masses(P, val)
    rows = [["closed_form", res.case, res.x_star, res.pi0, res.pi_star, res.pi1]]
    extra = {}
    if args.oracle and kind == "density":
        o = masses_by_characteristics(P, val)
        rows.append(["characteristics", o.case, o.x_star, o.pi0, o.pi_star, o.pi1])
        extra["oracle_max_difference"] = max(abs(res.pi0 - o.pi0), abs(res.pi_star - o.pi_star),
                                             abs(res.pi1 - o.pi1))
    out.write(["method", "case", "x_star", "pi0", "pi_star", "pi1"],
              [[m, c, "" if x is None else x, a, b, d] for m, c, x, a, b, d in rows],
              _summary(args, residuals=extra, invariants_ok=True))
    return True


def cmd_spectral(args, out):
    from .spectral import SpectralProblem, eigen_solve
    data = eigen_solve(SpectralProblem(args.alpha, args.beta), J=args.J)
    gram_dev = float(np.max(np.abs(data.gram() - np.eye(args.J))))
    rows = [[j, lam] for j, lam in enumerate(data.eigenvalues)]
    ok = gram_dev < 1e-6 and data.eigenvalues[0] > 0
    out.write(["j", "lambda"], rows, _summary(
        args, residuals={"gram_deviation": gram_dev, "lambda0_refinement_change": data.refinement_change},
        invariants_ok=ok, cells=data.n_cells))
    return ok


def cmd_imitate(args, out):
    from .imitation import ImitationKernel, continuum_coefficients, rescaled_params
    from .pde import pde_series
    alpha, beta = _alpha_beta(args)
    if args.fermi:
        kernel = ImitationKernel.fermi(args.psi0, args.dpsi0)
    else:
        kernel = ImitationKernel(args.psi0, args.dpsi0)
    sc = continuum_coefficients(kernel)
    params = rescaled_params(alpha, beta, kernel, args.grid)
    state = _state(parse_init(args.init), args.grid)
    final, series = pde_series(state, params, args.t_end * sc.diffusion, args.snapshot * sc.diffusion)
    header, rows = _series_rows(series, 1.0 / sc.diffusion)
    res = _series_residuals(series)
    ok = _check_series(res)
    out.write(header, rows, _summary(args, (alpha, beta), residuals=res, invariants_ok=ok,
                                     scales={"diffusion": sc.diffusion, "drift": sc.drift,
                                             "kappa": sc.kappa},
                                     final={"a": final.a, "b": final.b,
                                            "t": final.t / sc.diffusion}))
    return ok


def cmd_converge(args, out):
    from .pde import convergence_harness
    try:
        grids = [int(g) for g in args.grids.split(",")]
    except ValueError:
        raise InvalidParameters("--grids must be a comma-separated list of integers") from None
    rows = convergence_harness(args.alpha, args.beta, args.x0, grids)
    header = ["n_grid", "a_inf", "b_inf", "pi_one", "fixation_error", "total_mass_error",
              "max_mass_defect", "t_absorbed"]
    errs = [r.fixation_error for r in rows]
    monotone = all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
    worst = max(r.max_mass_defect for r in rows)
    ok = worst < MASS_TOL
    out.write(header, [[getattr(r, h) for h in header] for r in rows],
              _summary(args, residuals={"max_mass_defect": worst}, monotone_error=monotone,
                       invariants_ok=ok))
    return ok


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="moranlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
        sp.add_argument("--name", default=name, help="basename of the output files")
        sp.set_defaults(func=func)
        return sp

    def ab(sp, eta=False):
        sp.add_argument("--alpha", type=float, default=None if eta else 0.0)
        sp.add_argument("--beta", type=float, default=0.0)
        if eta:
            sp.add_argument("--eta", type=float, default=None, help="alpha - beta (alternative to --alpha)")

    sp = add("fixation", cmd_fixation, "fixation probabilities three ways")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--payoffs", help="A,B,C,D")
    sp.add_argument("--r", type=float, help="frequency-independent: payoffs 1,1,r,r")
    sp.add_argument("--variant", default="death-birth", choices=["death-birth", "birth-death"])

    sp = add("evolve", cmd_evolve, "iterate the discrete distribution")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--payoffs", required=True)
    sp.add_argument("--n0", type=int, required=True)
    sp.add_argument("--steps", type=int, default=10000)
    sp.add_argument("--every", type=int, default=100)
    sp.add_argument("--variant", default="death-birth", choices=["death-birth", "birth-death"])

    sp = add("pde", cmd_pde, "replicator-diffusion time series")
    ab(sp, eta=True)
    sp.add_argument("--grid", type=int, default=200)
    sp.add_argument("--t-end", type=float, default=2.0)
    sp.add_argument("--snapshot", type=float, default=0.01)
    sp.add_argument("--init", default="delta:0.5")
    sp.add_argument("--densities", action="store_true", help="also write q snapshots")

    sp = add("dominance", cmd_dominance, "dominance verdicts on a strategy grid")
    ab(sp)
    sp.add_argument("--grid-size", type=int, default=20)
    sp.add_argument("--strategies", help="comma-separated q values instead of a grid")
    sp.add_argument("--method", choices=["table", "numeric", "both"], default="both")

    sp = add("ode", cmd_ode, "replicator ODE trajectory")
    ab(sp)
    sp.add_argument("--x0", type=float, default=0.5)
    sp.add_argument("--t-end", type=float, default=10.0)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--rows", type=int, default=200)

    sp = add("drift", cmd_drift, "asymptotic masses of the transport limit")
    sp.add_argument("--payoffs", required=True)
    sp.add_argument("--init", default="uniform")
    sp.add_argument("--oracle", action="store_true", help="add the characteristics oracle")

    sp = add("spectral", cmd_spectral, "eigenvalue table")
    ab(sp)
    sp.add_argument("--J", type=int, default=32)

    sp = add("imitate", cmd_imitate, "imitation-dynamics diffusion limit")
    ab(sp, eta=True)
    sp.add_argument("--psi0", type=float, default=1.0, help="Psi(0)")
    sp.add_argument("--dpsi0", type=float, default=0.5, help="Psi'(0)")
    sp.add_argument("--fermi", action="store_true", help="validate as a logistic kernel")
    sp.add_argument("--grid", type=int, default=200)
    sp.add_argument("--t-end", type=float, default=2.0)
    sp.add_argument("--snapshot", type=float, default=0.01)
    sp.add_argument("--init", default="delta:0.5")

    sp = add("converge", cmd_converge, "discrete-to-continuum error table")
    ab(sp)
    sp.add_argument("--x0", type=float, default=0.5)
    sp.add_argument("--grids", default="50,100,200,400")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    directory = args.out or Path(os.environ.get(OUTPUT_ENV, "."))
    out = Output(Path(directory), args.name)
    try:
        ok = args.func(args, out)
    except (InvalidParameters, DegenerateGameError, ValueError) as exc:
        print(f"moranlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not ok:
        print(f"moranlab {args.command}: invariant violated; see {out.name}.json", file=sys.stderr)
        return EXIT_INVARIANT
    print(out.dir / f"{out.name}.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
