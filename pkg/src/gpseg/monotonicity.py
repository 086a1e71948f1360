"""Monotonicity functionals: ACF product J(r), Almgren frequency, gamma check.

Quantities computed here, all over balls B_r(x0):

  classic ACF      J(r) = [r^-2 int |grad u|^2 / |x-x0|^(N-2)]
                          * [same for v],            nondecreasing for
                          disjointly supported pairs vanishing at x0.

  weighted ACF     J(r) = r^-(4-eps) * prod_w int [ f(|x|)(|grad w|^2 + c)
                          + m(|x|) w^2 ],            c = u^2 v^2 (or a
                          supplied coupling field), f/m the C^1 radial
                          weights with m = -Lap f / 2 supported in B_1.

  Almgren          E(r) = r^(2-N) int { |grad u|^2 + |grad v|^2 + ... },
                   H(r) = r^(1-N) int_dB (u^2 + v^2),
                   N(r) = E/H            (blow-up form)
                   N(r) = E/H + 1        (limit form), Ntilde = e^(C r^2) N,
                   with d/dr log H = 2N/r resp. 2(N-1)/r as the cross-check.

  gamma            gamma(x) = sqrt(((N-2)/2)^2 + x) - (N-2)/2; for first
                   Dirichlet eigenvalues of disjoint spherical sets the two
                   gamma values sum to at least 2 (equality at half/half).

Monotone verdicts compare successive increments against a tolerance; the
default tolerance is tol_rel times the curve range (monotonicity is exact
only in the continuum), and callers checking constant curves should pass an
explicit scale-based tolerance instead, since the range of a constant curve
is pure quadrature noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import (
    BallQuadrature,
    Field,
    GridError,
    ball_integral,
    ball_integral_gradsq,
    integrate_nodes,
    interpolate,
    sphere_integral,
)
from .solver import ModelParams


@dataclass
class MonotoneVerdict:
    is_monotone: bool
    worst_violation: float
    worst_radius: float
    tolerance_used: float


@dataclass
class AcfCurve:
    center: tuple[float, ...]
    radii: np.ndarray
    J_values: np.ndarray
    variant: str
    epsilon_exponent: float
    hypothesis_ok: bool = True
    hypothesis_note: str = ""

    def verdict(self, tolerance: float | None = None, tol_rel: float = 1e-2) -> MonotoneVerdict:
        return monotone_verdict(self.radii, self.J_values, tolerance=tolerance, tol_rel=tol_rel)


@dataclass
class AlmgrenCurve:
    center: tuple[float, ...]
    radii: np.ndarray
    E_values: np.ndarray
    H_values: np.ndarray
    N_values: np.ndarray
    Ntilde_values: np.ndarray
    C_const: float
    variant: str
    dropped_radii: np.ndarray = dc_field(default_factory=lambda: np.empty(0))

    def verdict(self, tolerance: float | None = None, tol_rel: float = 1e-2) -> MonotoneVerdict:
        vals = self.Ntilde_values if self.variant == "limit_form" else self.N_values
        return monotone_verdict(self.radii, vals, tolerance=tolerance, tol_rel=tol_rel)


def monotone_verdict(radii, values, tolerance: float | None = None, tol_rel: float = 1e-2) -> MonotoneVerdict:
    """Non-decrease check: worst negative increment against the tolerance."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return MonotoneVerdict(True, 0.0, float(radii[0]) if len(radii) else 0.0, 0.0)
    if tolerance is None:
        tolerance = tol_rel * float(values.max() - values.min())
    inc = np.diff(values)
    worst = float(max(0.0, -inc.min()))
    at = float(radii[1:][np.argmin(inc)])
    return MonotoneVerdict(worst <= tolerance, worst, at, float(tolerance))


# ----------------------------------------------------------------------------
# gamma and spherical-cap eigenvalues
# ----------------------------------------------------------------------------

def gamma_fn(x: float, N: int) -> float:
    """gamma(x) = sqrt(((N-2)/2)^2 + x) - (N-2)/2, increasing with gamma(0)=0."""
    if x < 0.0:
        raise ValueError("gamma_fn needs x >= 0")
    if N < 2:
        raise ValueError("gamma_fn needs N >= 2")
    half = 0.5 * (N - 2)
    return float(np.sqrt(half * half + x) - half)


def gamma_inequality_check(E1_eig: float, E2_eig: float, N: int) -> float:
    """gamma(lambda(E1)) + gamma(lambda(E2)) - 2; nonnegative for first
    Dirichlet eigenvalues of disjoint subsets of the sphere."""
    if E1_eig < 0.0 or E2_eig < 0.0:
        raise ValueError("eigenvalue estimates must be nonnegative")
    return gamma_fn(E1_eig, N) + gamma_fn(E2_eig, N) - 2.0


def arc_first_eigenvalue(length: float) -> float:
    """First Dirichlet eigenvalue of a circular arc of the given length,
    lambda = (pi / length)^2 (eigenfunction sin(pi theta / length))."""
    if length <= 0.0:
        raise ValueError("arc length must be positive")
    return (np.pi / length) ** 2


HEMISPHERE_EIGENVALUE = 2.0  # first Dirichlet eigenvalue of a hemisphere of S^2 (cos theta)


# ----------------------------------------------------------------------------
# ACF product
# ----------------------------------------------------------------------------

def acf_J(
    u: Field,
    v: Field,
    x0,
    radii,
    variant: str = "classic",
    eps: float = 0.1,
    coupling: Field | None = None,
    node_tol: float = 1e-8,
) -> AcfCurve:
    """Sample the ACF product over the given radii.

    classic:    J(r) = prod_w r^-2 int_{B_r} |grad w|^2 |x-x0|^(2-N)
    f_weighted: J(r) = r^-(4-eps) prod_w int_{B_r} [f (|grad w|^2 + c) + m w^2]

    The classic hypotheses (u v = 0 on nodes, u(x0) = v(x0) = 0) are checked
    within node_tol; violations flag the curve but the values are still
    computed.  For rescaled blow-up pairs pass the scaled coupling field
    beta M ubar^2 vbar^2 as `coupling`.
    """
    if u.grid != v.grid:
        raise GridError("u/v grid mismatch")
    if variant not in ("classic", "f_weighted"):
        raise GridError(f"unknown ACF variant {variant!r}")
    x0 = np.asarray(x0, dtype=float)
    radii = np.sort(np.asarray(radii, dtype=float))
    if np.any(radii <= 0.0):
        raise GridError("ACF radii must be positive")

    ok = True
    note = ""
    if variant == "classic":
        scale = max(float(np.max(np.abs(u.values))), float(np.max(np.abs(v.values))), 1e-300)
        overlap = float(np.max(np.abs(u.values * v.values)))
        if overlap > node_tol * scale * scale:
            ok = False
            note = f"u*v max {overlap:.3e} exceeds node tolerance"
        u0, v0 = abs(interpolate(u, x0)), abs(interpolate(v, x0))
        if max(u0, v0) > node_tol * scale:
            ok = False
            note = (note + "; " if note else "") + f"u(x0)={u0:.3e}, v(x0)={v0:.3e} not ~0"

    J = np.empty(len(radii))
    for i, r in enumerate(radii):
        q = BallQuadrature(u.grid, x0, r)
        if variant == "classic":
            Iu = ball_integral_gradsq(u, q, kernel="acf_kernel")
            Iv = ball_integral_gradsq(v, q, kernel="acf_kernel")
            J[i] = (Iu / r**2) * (Iv / r**2)
        else:
            if coupling is None:
                coup = Field(u.grid, (u.values * v.values) ** 2, copy=False)
            else:
                coup = coupling
            Iu = (
                ball_integral_gradsq(u, q, kernel="f_weight")
                + ball_integral(coup, q, kernel="f_weight")
                + ball_integral(Field(u.grid, u.values**2, copy=False), q, kernel="m_weight")
            )
            Iv = (
                ball_integral_gradsq(v, q, kernel="f_weight")
                + ball_integral(coup, q, kernel="f_weight")
                + ball_integral(Field(v.grid, v.values**2, copy=False), q, kernel="m_weight")
            )
            J[i] = Iu * Iv / r ** (4.0 - eps)
    return AcfCurve(tuple(x0), radii, J, variant, eps if variant == "f_weighted" else 0.0, ok, note)


# ----------------------------------------------------------------------------
# Almgren frequency
# ----------------------------------------------------------------------------

def almgren_EH(
    u: Field,
    v: Field,
    x0,
    r: float,
    variant: str = "limit_form",
    p: ModelParams | None = None,
    M_beta: float = 1.0,
) -> tuple[float, float]:
    """One radius of the Almgren pair (E, H).

    blowup_form: E = r^(2-N) int { |grad u|^2+|grad v|^2 + lam u^2 + mu v^2
                                   - M_beta (omega1 u^4 + omega2 v^4)
                                   + 2 beta M_beta u^2 v^2 }
                 (for rescaled frames, pass lam/mu already scaled by r_beta^2)
    limit_form:  E = r^(2-N) int { |grad u|^2+|grad v|^2 + lam u^2 + mu v^2
                                   - omega1 u^4 - omega2 v^4 }
    H = r^(1-N) int_dB (u^2 + v^2) in both variants.
    """
    if u.grid != v.grid:
        raise GridError("u/v grid mismatch")
    if variant not in ("blowup_form", "limit_form"):
        raise GridError(f"unknown Almgren variant {variant!r}")
    if p is None:
        p = ModelParams(beta=0.0, omega1=0.0, omega2=0.0, lam=0.0, mu=0.0, mass1=None, mass2=None)
    x0 = np.asarray(x0, dtype=float)
    grid = u.grid
    dim = grid.dim
    q = BallQuadrature(grid, x0, r)
    usq = Field(grid, u.values**2, copy=False)
    vsq = Field(grid, v.values**2, copy=False)
    bulk = ball_integral_gradsq(u, q) + ball_integral_gradsq(v, q)
    if p.lam != 0.0 or p.mu != 0.0:
        bulk += p.lam * ball_integral(usq, q) + p.mu * ball_integral(vsq, q)
    quart_scale = M_beta if variant == "blowup_form" else 1.0
    if p.omega1 != 0.0 or p.omega2 != 0.0:
        u4 = Field(grid, usq.values**2, copy=False)
        v4 = Field(grid, vsq.values**2, copy=False)
        bulk -= quart_scale * (p.omega1 * ball_integral(u4, q) + p.omega2 * ball_integral(v4, q))
    if variant == "blowup_form" and p.beta != 0.0:
        uv = Field(grid, usq.values * vsq.values, copy=False)
        bulk += 2.0 * p.beta * M_beta * ball_integral(uv, q)
    E = bulk / r ** (dim - 2)
    both = Field(grid, usq.values + vsq.values, copy=False)
    H = sphere_integral(both, x0, r) / r ** (dim - 1)
    return float(E), float(H)


def estimate_C_const(u: Field, v: Field, p: ModelParams) -> tuple[float, float]:
    """The drift constant of the modified quotient and the Poincare radius.

    C = max(|lam|, |mu|) + max(|omega1|, |omega2|) * max(||u||_inf^2, ||v||_inf^2)
    bounds |r^-N int (lam u^2 + mu v^2 - omega u^4 ...)| by C r^-N int(u^2+v^2);
    rbar solves C rbar^2 = (N-1)/2, the smallness needed for E + H >= 0.
    """
    sup2 = max(float(np.max(np.abs(u.values))), float(np.max(np.abs(v.values)))) ** 2
    C = max(abs(p.lam), abs(p.mu)) + max(abs(p.omega1), abs(p.omega2)) * sup2
    dim = u.grid.dim
    if C > 0.0:
        rbar = float(np.sqrt(0.5 * (dim - 1) / C))
    else:
        rbar = float("inf")
    return float(C), rbar


H_FLOOR_REL = 1e-14


def almgren_curve(
    u: Field,
    v: Field,
    x0,
    radii,
    variant: str = "limit_form",
    p: ModelParams | None = None,
    M_beta: float = 1.0,
    C_const: float | None = None,
) -> AlmgrenCurve:
    """Full curve r -> (E, H, N, Ntilde).

    Radii where H falls below 1e-14 * max H are dropped (recorded in
    dropped_radii) rather than producing huge quotients.  In limit_form the
    radii are clipped to the Poincare radius rbar from estimate_C_const and
    to the distance from x0 to the domain boundary, and Ntilde = e^(C r^2) N.
    """
    if p is None:
        p = ModelParams(beta=0.0, omega1=0.0, omega2=0.0, lam=0.0, mu=0.0, mass1=None, mass2=None)
    x0 = np.asarray(x0, dtype=float)
    radii = np.sort(np.asarray(radii, dtype=float))
    if C_const is None:
        if variant == "limit_form":
            C_const, rbar = estimate_C_const(u, v, p)
        else:
            C_const, rbar = 0.0, float("inf")
    else:
        rbar = float("inf") if C_const == 0.0 else float(np.sqrt(0.5 * (u.grid.dim - 1) / C_const))
    dist_bd = float(min(np.min(x0 - u.grid.lo), np.min(u.grid.hi - x0)))
    r_cap = min(rbar, dist_bd) if variant == "limit_form" else dist_bd
    kept = radii[radii <= r_cap + 1e-12]
    if len(kept) == 0:
        raise GridError("no admissible radii below the smallness/domain cap")

    E = np.empty(len(kept))
    H = np.empty(len(kept))
    for i, r in enumerate(kept):
        E[i], H[i] = almgren_EH(u, v, x0, r, variant=variant, p=p, M_beta=M_beta)
    floor = H_FLOOR_REL * float(np.max(H)) if np.max(H) > 0 else 0.0
    good = H > floor
    if not good.any():
        raise GridError("H below floor at every radius (fields vanish near x0?)")
    dropped = kept[~good]
    kept, E, H = kept[good], E[good], H[good]
    if variant == "limit_form":
        N = E / H + 1.0
        Ntilde = np.exp(C_const * kept**2) * N
    else:
        N = E / H
        Ntilde = N.copy()
    return AlmgrenCurve(tuple(x0), kept, E, H, N, Ntilde, float(C_const), variant, dropped)


def logH_identity_check(curve: AlmgrenCurve) -> dict:
    """Central-difference d/dr log H against 2N/r (blow-up form) or
    2(N-1)/r (limit form); the deviation is normalized by the sup of the
    right-hand side so that exactly-zero curves report zero deviation."""
    r = curve.radii
    if len(r) < 3:
        raise GridError("identity check needs at least 3 radii")
    logH = np.log(np.maximum(curve.H_values, 1e-300))
    lhs = np.gradient(logH, r, edge_order=2)
    if curve.variant == "limit_form":
        rhs = 2.0 * (curve.N_values - 1.0) / r
    else:
        rhs = 2.0 * curve.N_values / r
    scale = float(np.max(np.abs(rhs)))
    dev = np.abs(lhs - rhs)
    rel = dev / scale if scale > 0 else dev
    i = int(np.argmax(rel))
    return {
        "max_rel_deviation": float(rel.max()),
        "worst_radius": float(r[i]),
        "lhs": lhs,
        "rhs": rhs,
        "scale": scale,
    }


def segregation_functional(u: Field, v: Field, beta: float) -> float:
    """beta * int u^2 v^2 by trapezoid node quadrature; the quantity that
    decays to zero across a competition sweep."""
    if u.grid != v.grid:
        raise GridError("u/v grid mismatch")
    prod = Field(u.grid, (u.values * v.values) ** 2, copy=False)
    return beta * integrate_nodes(prod)
