"""Competition-sweep orchestration: solve, diagnose, persist, report.

A sweep walks a strictly increasing beta schedule (geometric, 8 points from
10 to 1e4 by default), warm-starting each solve from the previous solution so
the whole sweep stays on one branch.  Per beta it records realized
multipliers, the energy breakdown, the segregation mass beta int u^2 v^2,
Holder seminorms per requested exponent, the Lipschitz seminorm, and
ACF/Almgren monotonicity verdicts at diagnostic centers; the three largest
betas additionally get blow-up frames.  Everything lands in --out as
binary fields (audit source of truth), a CSV/JSON report, and optional SVG
trend charts.

Config is flat key = value text with sections ([grid], [model], [sweep],
[diagnostics], [output]); no nesting, diff-friendly.  Identical config and
seed reproduce byte-identical outputs.
"""

from __future__ import annotations

import configparser
import json
import warnings
from dataclasses import asdict, dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np

from . import svg
from .grid import Field, Grid, GridError, read_field, write_field
from .monotonicity import acf_J, almgren_curve, estimate_C_const, logH_identity_check, segregation_functional
from .regularity import blowup_rescale, holder_seminorm, lipschitz_seminorm
from .solver import (
    ModelParams,
    SolutionPair,
    SolverError,
    energy,
    gaussian_bump_init,
    solve_pair,
    suggested_dt,
)


class ConfigError(ValueError):
    """Malformed sweep configuration."""


@dataclass
class SweepConfig:
    n: int = 129
    extent: float = 1.0
    omega1: float = -1.0
    omega2: float = -1.0
    mass1: float = 1.0
    mass2: float = 1.0
    beta_schedule: tuple[float, ...] = tuple(float(b) for b in np.geomspace(10.0, 1.0e4, 8))
    alpha_list: tuple[float, ...] = (0.5, 1.0)
    centers: str | tuple = "auto"
    center_count: int = 3
    r_min: float = 0.05
    r_max: float = 0.15
    n_radii: int = 8
    blowup_window: float = 1.5
    frame_alpha: float = 0.5
    tol: float = 2.0e-5
    max_iter: int = 60_000
    seed: int = 0
    warm_start: bool = True
    out_dir: str = "sweep_out"

    def __post_init__(self):
        betas = tuple(float(b) for b in self.beta_schedule)
        if any(b <= 0 for b in betas) or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ConfigError("beta_schedule must be strictly increasing and positive")
        if any(not (0.0 < a <= 1.0) for a in self.alpha_list):
            raise ConfigError("alpha_list entries must lie in (0, 1]")
        if self.n < 17:
            raise ConfigError("grid too small for diagnostics")

    @property
    def grid(self) -> Grid:
        return Grid.unit_square(self.n, self.extent)

    @property
    def radii(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.n_radii)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def parse_config(path) -> SweepConfig:
    """Read the flat sectioned key = value format into a SweepConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}")
    kw = {}
    try:
        if cp.has_section("grid"):
            g = cp["grid"]
            if "n" in g:
                kw["n"] = g.getint("n")
            if "extent" in g:
                kw["extent"] = g.getfloat("extent")
        if cp.has_section("model"):
            m = cp["model"]
            for key in ("omega1", "omega2", "mass1", "mass2"):
                if key in m:
                    kw[key] = m.getfloat(key)
        if cp.has_section("sweep"):
            s = cp["sweep"]
            if "betas" in s:
                kw["beta_schedule"] = _parse_floats(s["betas"])
            if "alphas" in s:
                kw["alpha_list"] = _parse_floats(s["alphas"])
            for key, conv in (("tol", s.getfloat), ("max_iter", s.getint), ("seed", s.getint),
                              ("warm_start", s.getboolean)):
                if key in s:
                    kw[key] = conv(key)
        if cp.has_section("diagnostics"):
            d = cp["diagnostics"]
            if "centers" in d:
                txt = d["centers"].strip()
                if txt != "auto":
                    pts = []
                    for chunk in txt.split(";"):
                        xy = [float(t) for t in chunk.split(",")]
                        if len(xy) != 2:
                            raise ConfigError(f"bad center {chunk!r}")
                        pts.append(tuple(xy))
                    kw["centers"] = tuple(pts)
            if "count" in d:
                kw["center_count"] = d.getint("count")
            if "radii" in d:
                rmin, rmax, nr = d["radii"].split(":")
                kw["r_min"], kw["r_max"], kw["n_radii"] = float(rmin), float(rmax), int(nr)
            if "blowup_window" in d:
                kw["blowup_window"] = d.getfloat("blowup_window")
            if "frame_alpha" in d:
                kw["frame_alpha"] = d.getfloat("frame_alpha")
        if cp.has_section("output") and "dir" in cp["output"]:
            kw["out_dir"] = cp["output"]["dir"]
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return SweepConfig(**kw)


# ----------------------------------------------------------------------------
# diagnostic centers
# ----------------------------------------------------------------------------

def auto_centers(u: Field, v: Field, count: int, margin: float | None = None) -> list[tuple[float, float]]:
    """Deterministic free-boundary candidates: nodes minimizing u^2 + v^2 at
    least `margin` from the boundary, spread by farthest-point sampling.

    Falls back to the domain center (with a warning) when no interior node
    qualifies, e.g. when one component vanishes identically."""
    grid = u.grid
    h = grid.spacing
    if margin is None:
        margin = 0.15 * float(np.min(grid.hi - grid.lo))
    score = u.values**2 + v.values**2
    k = max(1, int(np.ceil(margin / h)))
    interior = np.zeros(grid.shape, dtype=bool)
    interior[tuple(slice(k, -k) for _ in range(grid.dim))] = True
    scale = max(float(np.max(u.values)) ** 2, float(np.max(v.values)) ** 2, 1e-300)
    pool_mask = interior & (score <= 1e-4 * scale)
    if not pool_mask.any():
        warnings.warn("no interior node where both components vanish; "
                      "falling back to the domain center")
        c = 0.5 * (grid.lo + grid.hi)
        return [tuple(float(x) for x in c)]
    idx = np.argwhere(pool_mask)
    vals = score[pool_mask]
    order = np.argsort(vals, kind="stable")
    idx = idx[order[: max(count * 64, 256)]]
    pts = grid.lo[None, :] + idx * h
    chosen = [0]
    d2 = np.sum((pts - pts[0]) ** 2, axis=1)
    while len(chosen) < min(count, len(pts)):
        far = int(np.argmax(d2))
        if d2[far] <= 0.0:
            break
        chosen.append(far)
        d2 = np.minimum(d2, np.sum((pts - pts[far]) ** 2, axis=1))
    return [tuple(float(x) for x in pts[c]) for c in chosen]


# ----------------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------------

@dataclass
class SweepReport:
    config: SweepConfig
    rows: list[dict]
    files: list[str] = dc_field(default_factory=list)
    curves: dict = dc_field(default_factory=dict)
    failures: int = 0


def _fmt_float(x) -> str:
    return f"{float(x):.17g}"


def _beta_tag(beta: float) -> str:
    return f"{beta:.6g}".replace(".", "p").replace("+", "")


def solution_row(cfg: SweepConfig, sol: SolutionPair, beta: float) -> dict:
    """Diagnostics recomputable from the persisted fields alone (audit)."""
    row: dict = {
        "beta": beta,
        "lambda": sol.params.lam,
        "mu": sol.params.mu,
        "iterations": sol.iterations,
        "residual": sol.residual_l2,
        "converged": sol.converged,
    }
    e = energy(sol.u, sol.v, sol.params)
    row.update(energy_kinetic=e.kinetic, energy_potential=e.potential,
               energy_quartic=e.quartic, energy_coupling=e.coupling, energy_total=e.total)
    row["segregation"] = segregation_functional(sol.u, sol.v, beta)
    for a in cfg.alpha_list:
        rep = holder_seminorm(sol.u, sol.v, a)
        row[f"L_alpha_{a:g}"] = rep.L
        row[f"r_beta_alpha_{a:g}"] = rep.r_beta
    row["lipschitz"] = max(lipschitz_seminorm(sol.u), lipschitz_seminorm(sol.v))
    return row


def _curve_diagnostics(cfg: SweepConfig, sol: SolutionPair, row: dict, curves_out: dict, beta: float):
    if cfg.centers == "auto":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            centers = auto_centers(sol.u, sol.v, cfg.center_count, margin=cfg.r_max)
    else:
        centers = [tuple(c) for c in cfg.centers]
    # curve functionals take the coefficients of -Lap u + lam u = omega u^3:
    # the realized chemical potentials enter with the opposite sign
    p_curve = replace(sol.params, lam=-sol.params.lam, mu=-sol.params.mu)
    C, _ = estimate_C_const(sol.u, sol.v, p_curve)
    acf_ok, alm_ok = True, True
    worst_acf, worst_alm = 0.0, 0.0
    kept = []
    for c in centers:
        dist_bd = float(min(np.min(np.asarray(c) - sol.u.grid.lo),
                            np.min(sol.u.grid.hi - np.asarray(c))))
        radii = cfg.radii[cfg.radii < dist_bd - 2.0 * sol.u.grid.spacing]
        if len(radii) < 3:
            continue
        kept.append(c)
        acf = acf_J(sol.u, sol.v, c, radii, variant="classic", node_tol=np.inf)
        av = acf.verdict(tolerance=1e-3 * float(acf.J_values.max()) if acf.J_values.max() > 0 else 1e-12)
        acf_ok &= av.is_monotone
        worst_acf = max(worst_acf, av.worst_violation)
        try:
            alm = almgren_curve(sol.u, sol.v, c, radii, variant="limit_form", p=p_curve)
            nv = alm.verdict()
            alm_ok &= nv.is_monotone
            worst_alm = max(worst_alm, nv.worst_violation)
            curves_out.setdefault(beta, {})[c] = {
                "radii": alm.radii.tolist(),
                "E": alm.E_values.tolist(),
                "H": alm.H_values.tolist(),
                "N": alm.N_values.tolist(),
                "Ntilde": alm.Ntilde_values.tolist(),
                "J": acf.J_values.tolist(),
                "J_radii": acf.radii.tolist(),
                "C_const": alm.C_const,
            }
        except GridError:
            alm_ok = False
    row["centers"] = ";".join(f"{c[0]:.6g},{c[1]:.6g}" for c in kept)
    row["acf_monotone"] = acf_ok
    row["acf_worst_violation"] = worst_acf
    row["almgren_monotone"] = alm_ok
    row["almgren_worst_violation"] = worst_alm
    row["C_const"] = C


def run_sweep(cfg: SweepConfig, out_dir=None, progress=None) -> SweepReport:
    """Execute the sweep; returns the report and persists fields + reports."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid
    init = gaussian_bump_init(grid, seed=cfg.seed)
    rows: list[dict] = []
    files: list[str] = []
    curves: dict = {}
    frames_from = set(list(cfg.beta_schedule)[-3:])
    failures = 0
    prev: SolutionPair | None = None
    for beta in cfg.beta_schedule:
        if progress:
            progress(f"beta = {beta:g}")
        p = ModelParams(beta=beta, omega1=cfg.omega1, omega2=cfg.omega2,
                        mass1=cfg.mass1, mass2=cfg.mass2)
        start = (prev.u, prev.v) if (cfg.warm_start and prev is not None) else init
        try:
            dt = suggested_dt(p, *start)
            sol = solve_pair(p, start, tol=cfg.tol, max_iter=cfg.max_iter, dt=dt)
        except (SolverError, GridError) as exc:  # record the failure, keep sweeping
            rows.append({"beta": beta, "error": str(exc)})
            failures += 1
            prev = None
            continue
        if not sol.converged:
            failures += 1
        tag = _beta_tag(beta)
        fu, fv = out / f"u_{tag}.gpsf", out / f"v_{tag}.gpsf"
        write_field(sol.u, fu)
        write_field(sol.v, fv)
        files += [str(fu), str(fv)]
        row = solution_row(cfg, sol, beta)
        _curve_diagnostics(cfg, sol, row, curves, beta)
        if beta in frames_from:
            rep = holder_seminorm(sol.u, sol.v, cfg.frame_alpha)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                frame = blowup_rescale(sol, rep, cfg.blowup_window)
            row["M_beta"] = frame.M_beta
            row["beta_M_beta"] = frame.beta_M_beta
            row["rescaled_holder"] = frame.rescaled_holder
            row["half_space_like"] = frame.half_space_like
            fub, fvb = out / f"ubar_{tag}.gpsf", out / f"vbar_{tag}.gpsf"
            write_field(frame.u_bar, fub)
            write_field(frame.v_bar, fvb)
            files += [str(fub), str(fvb)]
            side = {
                "M_beta": frame.M_beta, "beta_M_beta": frame.beta_M_beta,
                "alpha": frame.alpha, "L": frame.L, "r_beta": frame.r_beta,
                "center": frame.center, "window_lo": frame.window_lo,
                "window_hi": frame.window_hi, "half_space_like": frame.half_space_like,
                "rescaled_holder": frame.rescaled_holder,
            }
            fside = out / f"frame_{tag}.json"
            fside.write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")
            files.append(str(fside))
        meta = {
            "beta": beta, "lambda": sol.params.lam, "mu": sol.params.mu,
            "iterations": sol.iterations, "residual": sol.residual_l2,
            "converged": sol.converged, "seed": cfg.seed,
            "warm_started": cfg.warm_start and prev is not None,
            "energy": {k: row[f"energy_{k}"] for k in
                       ("kinetic", "potential", "quartic", "coupling", "total")},
            "dt_final": sol.meta.get("dt_final"),
        }
        fmeta = out / f"meta_{tag}.json"
        fmeta.write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
        files.append(str(fmeta))
        rows.append(row)
        prev = sol
    report = SweepReport(cfg, rows, files, curves, failures=failures)
    emit_report(report, "csv", out)
    emit_report(report, "json", out)
    return report


def csv_columns(cfg: SweepConfig) -> list[str]:
    cols = ["beta", "lambda", "mu", "iterations", "residual", "converged",
            "energy_kinetic", "energy_potential", "energy_quartic", "energy_coupling",
            "energy_total", "segregation"]
    for a in cfg.alpha_list:
        cols += [f"L_alpha_{a:g}", f"r_beta_alpha_{a:g}"]
    cols += ["lipschitz", "C_const", "acf_monotone", "acf_worst_violation",
             "almgren_monotone", "almgren_worst_violation",
             "M_beta", "beta_M_beta", "rescaled_holder", "half_space_like", "centers", "error"]
    return cols


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _fmt_float(value)
    return str(value)


def emit_report(rep: SweepReport, fmt: str = "csv", out_dir=None) -> list[str]:
    """Write the report in one format; returns the created paths."""
    out = Path(out_dir if out_dir is not None else rep.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        cols = csv_columns(rep.config)
        lines = [",".join(cols)]
        for row in rep.rows:
            lines.append(",".join(_cell(row.get(c)) for c in cols))
        path = out / "sweep.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(str(path))
    elif fmt == "json":
        path = out / "sweep.json"
        payload = {
            "config": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in asdict(rep.config).items()},
            "rows": rep.rows,
            "curves": {f"{b:g}": {f"{c[0]:.6g},{c[1]:.6g}": data for c, data in per.items()}
                       for b, per in rep.curves.items()},
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=1, default=str) + "\n")
        written.append(str(path))
    elif fmt == "svg":
        ok_rows = [r for r in rep.rows if "error" not in r]
        if ok_rows:
            betas = [r["beta"] for r in ok_rows]
            seg = [max(r["segregation"], 1e-300) for r in ok_rows]
            p1 = out / "segregation.svg"
            svg.line_chart(p1, [("beta * int u^2 v^2", betas, seg)],
                           title="segregation vs beta", xlabel="beta", ylabel="segregation",
                           log_x=True, log_y=True, slope_annotation=True)
            written.append(str(p1))
            series = []
            for a in rep.config.alpha_list:
                key = f"L_alpha_{a:g}"
                series.append((f"alpha={a:g}", betas, [r[key] for r in ok_rows]))
            p2 = out / "holder.svg"
            svg.line_chart(p2, series, title="Holder seminorms vs beta",
                           xlabel="beta", ylabel="L", log_x=True)
            written.append(str(p2))
        if rep.curves:
            top_beta = max(rep.curves)
            per = rep.curves[top_beta]
            series = [(f"x0=({c[0]:.3g},{c[1]:.3g})", data["radii"], data["N"])
                      for c, data in per.items()]
            p3 = out / "almgren.svg"
            svg.line_chart(p3, series, title=f"Almgren N(r) at beta={top_beta:g}",
                           xlabel="r", ylabel="N")
            written.append(str(p3))
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    return written


def recompute_row(cfg: SweepConfig, out_dir, beta: float) -> dict:
    """Audit: reload the persisted pair and rebuild its CSV row from scratch."""
    out = Path(out_dir)
    tag = _beta_tag(beta)
    u = read_field(out / f"u_{tag}.gpsf")
    v = read_field(out / f"v_{tag}.gpsf")
    meta = json.loads((out / f"meta_{tag}.json").read_text())
    p = ModelParams(beta=beta, omega1=cfg.omega1, omega2=cfg.omega2,
                    mass1=cfg.mass1, mass2=cfg.mass2,
                    lam=meta["lambda"], mu=meta["mu"])
    sol = SolutionPair(u=u, v=v, params=p, residual_l2=meta["residual"],
                       iterations=meta["iterations"], converged=meta["converged"])
    return solution_row(cfg, sol, beta)
