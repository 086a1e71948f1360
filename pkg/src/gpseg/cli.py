"""Command-line surface.

Subcommands: solve, sweep, holder, almgren, acf, blowup, verify-lemmas,
report.  Exit codes: 0 success, 2 config error, 3 solver failure, 4 verdict
failure (so CI can gate on the monotonicity suites).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .grid import BallQuadrature, Field, Grid, GridError, read_field, write_field
from .monotonicity import (
    acf_J,
    almgren_curve,
    arc_first_eigenvalue,
    gamma_inequality_check,
    logH_identity_check,
    segregation_functional,
)
from .regularity import blowup_rescale, holder_seminorm
from .solver import ModelParams, SolverError, gaussian_bump_init, solve_helmholtz, solve_pair, verify_exponential_decay
from .sweep import ConfigError, SweepConfig, emit_report, parse_config, run_sweep, SweepReport

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERDICT = 4


def _load_config(args) -> SweepConfig:
    if getattr(args, "config", None):
        cfg = parse_config(args.config)
    else:
        cfg = SweepConfig()
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _parse_center(text: str):
    parts = [float(t) for t in text.split(",")]
    if len(parts) != 2:
        raise ConfigError("--center expects x,y")
    return parts


def _parse_radii(text: str) -> np.ndarray:
    rmin, rmax, n = text.split(":")
    return np.linspace(float(rmin), float(rmax), int(n))


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    if args.beta is not None:
        cfg.beta_schedule = (args.beta,)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = ModelParams(beta=cfg.beta_schedule[0], omega1=cfg.omega1, omega2=cfg.omega2,
                    mass1=cfg.mass1, mass2=cfg.mass2)
    init = gaussian_bump_init(cfg.grid, seed=cfg.seed)
    sol = solve_pair(p, init, tol=cfg.tol, max_iter=cfg.max_iter)
    write_field(sol.u, out / "u.gpsf")
    write_field(sol.v, out / "v.gpsf")
    meta = {
        "beta": p.beta, "lambda": sol.params.lam, "mu": sol.params.mu,
        "iterations": sol.iterations, "residual": sol.residual_l2,
        "converged": sol.converged, "seed": cfg.seed,
        "energy": {"kinetic": sol.energy.kinetic, "potential": sol.energy.potential,
                   "quartic": sol.energy.quartic, "coupling": sol.energy.coupling,
                   "total": sol.energy.total},
        "segregation": segregation_functional(sol.u, sol.v, p.beta),
    }
    (out / "solve.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
    print(json.dumps(meta, sort_keys=True))
    return EXIT_OK if sol.converged else EXIT_SOLVER


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    rep = run_sweep(cfg, out_dir=cfg.out_dir, progress=lambda s: print(s, file=sys.stderr))
    emit_report(rep, "svg", cfg.out_dir)
    n = len(rep.rows)
    print(f"sweep complete: {n - rep.failures}/{n} rows converged -> {cfg.out_dir}")
    return EXIT_SOLVER if rep.failures * 2 > n else EXIT_OK


def _load_pair(args) -> tuple[Field, Field]:
    return read_field(args.u), read_field(args.v)


def _cmd_holder(args) -> int:
    u, v = _load_pair(args)
    rep = holder_seminorm(u, v, args.alpha)
    print(json.dumps({
        "alpha": rep.alpha, "L": rep.L, "x_pair": rep.x_pair, "y_pair": rep.y_pair,
        "r_beta": rep.r_beta, "component": rep.component, "spacing": rep.spacing,
    }, sort_keys=True))
    return EXIT_OK


def _cmd_almgren(args) -> int:
    u, v = _load_pair(args)
    radii = _parse_radii(args.radii)
    curve = almgren_curve(u, v, _parse_center(args.center), radii, variant=args.variant)
    verdict = curve.verdict()
    ident = logH_identity_check(curve) if len(curve.radii) >= 3 else {"max_rel_deviation": None}
    print(json.dumps({
        "radii": curve.radii.tolist(), "E": curve.E_values.tolist(),
        "H": curve.H_values.tolist(), "N": curve.N_values.tolist(),
        "Ntilde": curve.Ntilde_values.tolist(), "C_const": curve.C_const,
        "monotone": verdict.is_monotone, "worst_violation": verdict.worst_violation,
        "logH_identity_dev": ident["max_rel_deviation"],
    }, sort_keys=True))
    return EXIT_OK if verdict.is_monotone else EXIT_VERDICT


def _cmd_acf(args) -> int:
    u, v = _load_pair(args)
    radii = _parse_radii(args.radii)
    curve = acf_J(u, v, _parse_center(args.center), radii)
    verdict = curve.verdict(tolerance=1e-3 * float(np.max(curve.J_values)) if np.max(curve.J_values) > 0 else None)
    print(json.dumps({
        "radii": curve.radii.tolist(), "J": curve.J_values.tolist(),
        "hypothesis_ok": curve.hypothesis_ok, "note": curve.hypothesis_note,
        "monotone": verdict.is_monotone, "worst_violation": verdict.worst_violation,
    }, sort_keys=True))
    return EXIT_OK if verdict.is_monotone else EXIT_VERDICT


def _cmd_blowup(args) -> int:
    cfg = _load_config(args)
    u, v = _load_pair(args)
    beta = args.beta if args.beta is not None else 0.0
    from .solver import SolutionPair

    p = ModelParams(beta=beta, omega1=cfg.omega1, omega2=cfg.omega2,
                    mass1=cfg.mass1, mass2=cfg.mass2)
    sol = SolutionPair(u=u, v=v, params=p, residual_l2=0.0, iterations=0, converged=True)
    rep = holder_seminorm(u, v, args.alpha)
    frame = blowup_rescale(sol, rep, args.window)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_field(frame.u_bar, out / "ubar.gpsf")
    write_field(frame.v_bar, out / "vbar.gpsf")
    side = {"M_beta": frame.M_beta, "beta_M_beta": frame.beta_M_beta, "alpha": frame.alpha,
            "L": frame.L, "r_beta": frame.r_beta, "center": frame.center,
            "window_lo": frame.window_lo, "window_hi": frame.window_hi,
            "rescaled_holder": frame.rescaled_holder, "half_space_like": frame.half_space_like}
    (out / "frame.json").write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")
    print(json.dumps(side, sort_keys=True))
    return EXIT_OK


def _cmd_verify_lemmas(args) -> int:
    """Built-in verification suite for CI gating; prints one line per check."""
    checks: list[tuple[str, bool, str]] = []

    # gamma inequality on complementary arcs, 20 splits (exact eigenvalues)
    gaps = []
    for k in range(1, 21):
        ell = np.pi * k / 10.0
        if ell >= 2.0 * np.pi:
            ell = 2.0 * np.pi - 1e-9
        gaps.append(gamma_inequality_check(arc_first_eigenvalue(ell),
                                           arc_first_eigenvalue(2.0 * np.pi - ell), 2))
    ok = all(g >= -1e-12 for g in gaps)
    checks.append(("gamma-arc-inequality", ok, f"min gap {min(gaps):.3e}"))

    n = 129 if args.fast else 257
    grid = Grid((n, n), 1.0 / (n - 1), (-0.5, -0.5))
    xm, ym = grid.meshgrid()
    u = Field(grid, np.maximum(xm, 0.0))
    v = Field(grid, np.maximum(-xm, 0.0))
    h = grid.spacing
    radii = np.linspace(8 * h, 0.25, 8)
    curve = acf_J(u, v, (0.0, 0.0), radii)
    target = np.pi**2 / 4.0
    dev = float(np.max(np.abs(curve.J_values - target))) / target
    checks.append(("acf-constancy", dev <= 1e-2, f"max rel dev {dev:.3e}"))

    uh = Field(grid, np.maximum(xm, 0.0))
    zero = Field.zeros(grid, dirichlet=False)
    alm = almgren_curve(uh, zero, (0.0, 0.0), np.linspace(8 * h, 0.2, 8), variant="blowup_form")
    dev_n = float(np.max(np.abs(alm.N_values - 1.0)))
    checks.append(("almgren-halfplane-frequency", dev_n <= 1e-2, f"max |N-1| {dev_n:.3e}"))
    ident = logH_identity_check(alm)
    checks.append(("logH-identity", ident["max_rel_deviation"] <= 5e-2,
                   f"max rel dev {ident['max_rel_deviation']:.3e}"))

    m = 161 if args.fast else 321
    gridh = Grid((m, m), 1.2 / (m - 1), (-0.6, -0.6))
    M = 400.0
    q = BallQuadrature(gridh, (0.0, 0.0), 0.5, n_radial=64, n_angular=128)
    w = solve_helmholtz(M, Field.zeros(gridh, dirichlet=False), 1.0, q)
    lhs, bound, passed = verify_exponential_decay(w, (0.0, 0.0), M, 1.0, 0.5, 0.2, 0.1,
                                                  n_radial=64, n_angular=128)
    checks.append(("exponential-decay-bound", passed, f"lhs {lhs:.3e} vs bound {bound:.3e}"))

    worst = EXIT_OK
    for name, ok, note in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {note}")
        if not ok:
            worst = EXIT_VERDICT
    return worst


def _cmd_report(args) -> int:
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    payload = json.loads((out / "sweep.json").read_text())
    rows = payload["rows"]
    curves: dict = {}
    for b, per in payload.get("curves", {}).items():
        curves[float(b)] = {tuple(float(t) for t in c.split(",")): data for c, data in per.items()}
    rep = SweepReport(cfg, rows, [], curves)
    written = emit_report(rep, args.format, cfg.out_dir)
    for w in written:
        print(w)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpseg",
                                 description="competing Gross-Pitaevskii pairs: solves, sweeps, diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("solve", help="single solve at one beta")
    common(p)
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("sweep", help="full beta sweep with reports")
    common(p)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("holder", help="Holder seminorm of a persisted pair")
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(fn=_cmd_holder)

    p = sub.add_parser("almgren", help="Almgren curve at a center")
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--center", required=True, help="x,y")
    p.add_argument("--radii", required=True, help="rmin:rmax:n")
    p.add_argument("--variant", choices=("blowup_form", "limit_form"), default="limit_form")
    p.set_defaults(fn=_cmd_almgren)

    p = sub.add_parser("acf", help="ACF product curve at a center")
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--center", required=True, help="x,y")
    p.add_argument("--radii", required=True, help="rmin:rmax:n")
    p.set_defaults(fn=_cmd_acf)

    p = sub.add_parser("blowup", help="blow-up frame of a persisted pair")
    common(p)
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--window", type=float, default=1.5)
    p.set_defaults(fn=_cmd_blowup)

    p = sub.add_parser("verify-lemmas", help="built-in analytic verification suite")
    p.add_argument("--fast", action="store_true")
    p.set_defaults(fn=_cmd_verify_lemmas)

    p = sub.add_parser("report", help="re-emit reports from persisted sweep data")
    common(p)
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.set_defaults(fn=_cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (SolverError, GridError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
