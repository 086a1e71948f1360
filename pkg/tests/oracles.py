"""Independent oracles used by the test suite.

Everything here is computed by a route disjoint from the package code paths
it checks: closed forms, quadrature in polar coordinates, RK4 shooting for
the radial comparison ODE, and the O(n^2) pair scan for seminorms.
"""

from __future__ import annotations

import numpy as np


def disk_integral_polar(fn, center, r, n_rho=400, n_theta=400) -> float:
    """Midpoint polar quadrature of a continuum function over B_r(center)."""
    rho = (np.arange(n_rho) + 0.5) * r / n_rho
    theta = (np.arange(n_theta) + 0.5) * 2.0 * np.pi / n_theta
    R, T = np.meshgrid(rho, theta, indexing="ij")
    X = center[0] + R * np.cos(T)
    Y = center[1] + R * np.sin(T)
    vals = fn(X, Y)
    return float(np.sum(vals * R) * (r / n_rho) * (2.0 * np.pi / n_theta))


def ball3_integral_spherical(fn, center, r, n_rho=120, n_mu=120, n_phi=120) -> float:
    """Midpoint spherical quadrature over a 3D ball."""
    rho = (np.arange(n_rho) + 0.5) * r / n_rho
    mu = -1.0 + (np.arange(n_mu) + 0.5) * 2.0 / n_mu
    phi = (np.arange(n_phi) + 0.5) * 2.0 * np.pi / n_phi
    R, M, P = np.meshgrid(rho, mu, phi, indexing="ij")
    S = np.sqrt(1.0 - M * M)
    X = center[0] + R * S * np.cos(P)
    Y = center[1] + R * S * np.sin(P)
    Z = center[2] + R * M
    w = R * R * (r / n_rho) * (2.0 / n_mu) * (2.0 * np.pi / n_phi)
    return float(np.sum(fn(X, Y, Z) * w))


def circle_integral(fn, center, r, n=4096) -> float:
    theta = 2.0 * np.pi * np.arange(n) / n
    x = center[0] + r * np.cos(theta)
    y = center[1] + r * np.sin(theta)
    return float(np.sum(fn(x, y))) * 2.0 * np.pi * r / n


def helmholtz_radial_rk4(M: float, R: float, A: float, dim: int = 2, n_steps: int = 40_000):
    """Shooting solution of psi'' + (dim-1)/r psi' = M psi, psi'(0) = 0,
    scaled so psi(R) = A; returns (psi0, r_grid, psi_values).

    Integrates from a tiny r0 with the series start psi = 1 + M r^2/(2 dim)
    and rescales at the end (the ODE is linear)."""
    r0 = R * 1e-8
    y = np.array([1.0 + M * r0 * r0 / (2 * dim), M * r0 / dim])
    rs = np.linspace(r0, R, n_steps + 1)
    hstep = (R - r0) / n_steps
    out = np.empty(n_steps + 1)
    out[0] = y[0]

    def rhs(r, y):
        return np.array([y[1], M * y[0] - (dim - 1) / r * y[1]])

    r = r0
    for i in range(n_steps):
        k1 = rhs(r, y)
        k2 = rhs(r + 0.5 * hstep, y + 0.5 * hstep * k1)
        k3 = rhs(r + 0.5 * hstep, y + 0.5 * hstep * k2)
        k4 = rhs(r + hstep, y + hstep * k3)
        y = y + (hstep / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        r += hstep
        out[i + 1] = y[0]
    scale = A / out[-1]
    return float(scale * 1.0), rs, out * scale


def homogeneous_lobe(alpha: float):
    """u = r^alpha * max(cos(alpha * theta), 0) as a vectorized (x, y) -> u.

    The positive part of cos(alpha theta) on the circle is the first
    Dirichlet eigenfunction of its own support (lobes of opening pi/alpha),
    so the field is harmonic where positive and has frequency alpha."""

    def fn(x, y):
        r = np.sqrt(x * x + y * y)
        theta = np.arctan2(y, x)
        return np.where(r > 0, r**alpha * np.maximum(np.cos(alpha * theta), 0.0), 0.0)

    return fn
