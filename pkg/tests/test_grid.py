"""Grid core: stencils, interpolation, quadrature, field format."""

import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpseg import (
    BallQuadrature,
    Field,
    Grid,
    GridError,
    OutsideExtentError,
    ball_integral,
    ball_integral_gradsq,
    gradient_sq,
    integrate_nodes,
    interpolate,
    laplacian,
    read_field,
    sphere_integral,
    write_field,
)

from oracles import ball3_integral_spherical, disk_integral_polar


@pytest.fixture(scope="module")
def unit_grid():
    return Grid.unit_square(129)


def centered_grid(n=129, half=0.5):
    return Grid((n, n), 2 * half / (n - 1), (-half, -half))


# ---------------------------------------------------------------- stencils

def test_grid_invariants():
    with pytest.raises(GridError):
        Grid((2, 5), 0.1, (0.0, 0.0))
    with pytest.raises(GridError):
        Grid((5, 5), -0.1, (0.0, 0.0))
    g = Grid((11, 21), 0.5, (1.0, -1.0))
    assert np.allclose(g.hi, [1.0 + 5.0, -1.0 + 10.0])


def test_dirichlet_constructor_zeroes_boundary(unit_grid):
    f = Field(unit_grid, np.ones(unit_grid.shape), dirichlet=True)
    assert f.values[0, :].max() == 0.0 and f.values[:, -1].max() == 0.0
    assert f.values[1:-1, 1:-1].min() == 1.0


def test_field_rejects_nonfinite(unit_grid):
    bad = np.ones(unit_grid.shape)
    bad[3, 4] = np.nan
    with pytest.raises(GridError):
        Field(unit_grid, bad)


def test_laplacian_zero_and_affine(unit_grid):
    z = Field.zeros(unit_grid)
    assert np.all(laplacian(z).values == 0.0)
    x, y = unit_grid.meshgrid()
    aff = Field(unit_grid, x + y)
    lap = laplacian(aff)
    assert np.all(lap.values[1:-1, 1:-1] == 0.0)


def test_laplacian_exact_on_quadratic(unit_grid):
    x, y = unit_grid.meshgrid()
    f = Field(unit_grid, x**2 + y**2)
    lap = laplacian(f)
    assert np.allclose(lap.values[1:-1, 1:-1], 4.0, rtol=0, atol=1e-11)
    assert np.all(lap.values[0, :] == 0.0)


def test_field_shape_mismatch(unit_grid):
    other = Grid.unit_square(65)
    with pytest.raises(GridError):
        Field(unit_grid, np.zeros(other.shape))


def test_gradient_sq_constant_and_affine(unit_grid):
    c = Field(unit_grid, np.full(unit_grid.shape, 3.7))
    assert np.max(gradient_sq(c).values) <= 1e-20  # one-sided edge formula roundoff
    x, _ = unit_grid.meshgrid()
    f = Field(unit_grid, x)
    gs = gradient_sq(f)
    assert np.allclose(gs.values, 1.0, rtol=0, atol=1e-12)


def test_gradient_sq_sin_matches_analytic():
    g = Grid.unit_square(129)  # h = 1/128
    x, _ = g.meshgrid()
    f = Field(g, np.sin(np.pi * x))
    gs = gradient_sq(f)
    target = np.pi**2 * np.cos(np.pi * x) ** 2
    err = np.max(np.abs(gs.values - target))
    # second-order central differences: ~2e-4 relative to the sup pi^2;
    # tolerance read relative to the target scale
    assert err <= 1e-3 * np.pi**2


# ---------------------------------------------------------------- interpolation

def test_interpolate_at_nodes_exact(unit_grid):
    rng = np.random.default_rng(7)
    f = Field(unit_grid, rng.standard_normal(unit_grid.shape))
    h = unit_grid.spacing
    for i, j in ((0, 0), (5, 17), (128, 128), (63, 1)):
        assert interpolate(f, (i * h, j * h)) == f.values[i, j]


def test_interpolate_affine_exact(unit_grid):
    x, y = unit_grid.meshgrid()
    f = Field(unit_grid, 2.0 * x - 3.0 * y + 0.25)
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = rng.uniform(0.0, 1.0, 2)
        assert interpolate(f, p) == pytest.approx(2 * p[0] - 3 * p[1] + 0.25, abs=1e-13)


def test_interpolate_xy_cell_center(unit_grid):
    x, y = unit_grid.meshgrid()
    f = Field(unit_grid, x * y)
    h = unit_grid.spacing
    p = (10.5 * h, 20.5 * h)
    corners = [f.values[10, 20], f.values[11, 20], f.values[10, 21], f.values[11, 21]]
    assert interpolate(f, p) == pytest.approx(np.mean(corners), rel=1e-14)


def test_interpolate_outside_raises(unit_grid):
    f = Field.zeros(unit_grid)
    with pytest.raises(OutsideExtentError):
        interpolate(f, (1.5, 0.5))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=63), st.integers(min_value=0, max_value=63))
def test_interpolate_node_property(i, j):
    g = Grid.unit_square(65)
    vals = np.fromfunction(lambda a, b: np.sin(a * 0.37) + np.cos(b * 0.21), g.shape)
    f = Field(g, vals)
    h = g.spacing
    assert interpolate(f, (i * h, j * h)) == pytest.approx(f.values[i, j], rel=1e-15, abs=1e-15)


# ---------------------------------------------------------------- ball quadrature

def test_ball_weights_sum_to_disk_area():
    g = centered_grid(129)
    q = BallQuadrature(g, (0.0, 0.0), 0.25)
    assert np.sum(q.weights) == pytest.approx(np.pi * 0.25**2, rel=1e-12)
    one = Field(g, np.ones(g.shape))
    assert ball_integral(one, q, "one") == pytest.approx(np.pi * 0.0625, rel=1e-6)


def test_ball_weights_sum_3d():
    g = Grid((33, 33, 33), 1.0 / 32, (-0.5, -0.5, -0.5))
    q = BallQuadrature(g, (0.0, 0.0, 0.0), 0.3)
    assert np.sum(q.weights) == pytest.approx(4.0 / 3.0 * np.pi * 0.3**3, rel=1e-9)


def test_ball_quadrature_outside_raises():
    g = centered_grid(65)
    with pytest.raises(OutsideExtentError):
        BallQuadrature(g, (0.4, 0.0), 0.2)
    with pytest.raises(GridError):
        BallQuadrature(g, (0.0, 0.0), -0.1)


def test_ball_integral_quadratic_closed_form():
    g = centered_grid(257)
    x, y = g.meshgrid()
    f = Field(g, x**2 + y**2)
    q = BallQuadrature(g, (0.0, 0.0), 0.5 - g.spacing)
    r = q.radius
    assert ball_integral(f, q, "one") == pytest.approx(np.pi * r**4 / 2.0, rel=1e-5)


def test_ball_integral_smooth_vs_polar_oracle():
    g = centered_grid(257)
    x, y = g.meshgrid()
    fn = lambda X, Y: np.sin(2.0 * X) * np.cos(1.3 * Y) + 0.5
    f = Field(g, fn(x, y))
    q = BallQuadrature(g, (0.1, -0.05), 0.3)
    ref = disk_integral_polar(fn, (0.1, -0.05), 0.3, n_rho=600, n_theta=600)
    assert ball_integral(f, q, "one") == pytest.approx(ref, rel=2e-6)


def test_acf_kernel_2d_is_one_bit_for_bit():
    g = centered_grid(129)
    rng = np.random.default_rng(3)
    f = Field(g, rng.standard_normal(g.shape))
    q = BallQuadrature(g, (0.05, 0.0), 0.3)
    assert ball_integral(f, q, "acf_kernel") == ball_integral(f, q, "one")


def test_acf_kernel_3d_matches_oracle():
    g = Grid((49, 49, 49), 1.0 / 48, (-0.5, -0.5, -0.5))
    x, y, z = g.meshgrid()
    f = Field(g, 1.0 + x + 0.5 * y * y + z)
    q = BallQuadrature(g, (0.0, 0.0, 0.0), 0.3)
    fn = lambda X, Y, Z: (1.0 + X + 0.5 * Y * Y + Z) / np.sqrt(X * X + Y * Y + Z * Z)
    ref = ball3_integral_spherical(fn, (0.0, 0.0, 0.0), 0.3, n_rho=300, n_mu=96, n_phi=96)
    assert ball_integral(f, q, "acf_kernel") == pytest.approx(ref, rel=2e-3)


def test_m_weight_saturates_outside_unit_ball():
    # m = N(N-2)/2 inside B_1 and 0 beyond, so the integral stops growing at r = 1
    g = Grid((41, 41, 41), 2.6 / 40, (-1.3, -1.3, -1.3))
    one = Field(g, np.ones(g.shape))
    v1 = ball_integral(one, BallQuadrature(g, (0.0,) * 3, 1.0), "m_weight")
    v2 = ball_integral(one, BallQuadrature(g, (0.0,) * 3, 1.2), "m_weight")
    assert v1 == pytest.approx(1.5 * 4.0 / 3.0 * np.pi, rel=1e-9)
    assert v2 == pytest.approx(v1, rel=1e-9)


def test_f_weight_2d_reduces_to_one():
    # in 2D the auxiliary weight f is identically 1
    g = centered_grid(65)
    rng = np.random.default_rng(5)
    f = Field(g, rng.standard_normal(g.shape))
    q = BallQuadrature(g, (0.0, 0.0), 0.3)
    assert ball_integral(f, q, "f_weight") == pytest.approx(ball_integral(f, q, "one"), rel=1e-14)


def test_translation_covariance():
    g = Grid((193, 193), 1.0 / 128, (-0.75, -0.75))
    x, y = g.meshgrid()
    fn = lambda X, Y: np.exp(-3.0 * (X * X + Y * Y)) + 0.2 * X
    f = Field(g, fn(x, y))
    t = np.array([16 * g.spacing, -8 * g.spacing])
    shifted = Field(g, fn(x - t[0], y - t[1]))
    q0 = BallQuadrature(g, (0.0, 0.0), 0.2)
    qt = BallQuadrature(g, t, 0.2)
    a = ball_integral(f, q0, "one")
    b = ball_integral(shifted, qt, "one")
    assert b == pytest.approx(a, rel=1e-6)


def test_quadrature_refinement_reduces_error():
    g = centered_grid(129)
    x, y = g.meshgrid()
    f = Field(g, np.cos(3.0 * x) * np.cos(2.0 * y))
    ref = disk_integral_polar(lambda X, Y: np.cos(3 * X) * np.cos(2 * Y), (0.0, 0.0), 0.3,
                              n_rho=800, n_theta=800)
    errs = []
    for mult in (1, 2, 4):
        q = BallQuadrature(g, (0.0, 0.0), 0.3, n_radial=8 * mult, n_angular=16 * mult)
        errs.append(abs(ball_integral(f, q, "one") - ref))
    assert errs[2] < errs[0]


# ---------------------------------------------------------------- sphere quadrature

def test_sphere_integral_constant():
    g = centered_grid(65)
    one = Field(g, np.ones(g.shape))
    assert sphere_integral(one, (0.0, 0.0), 0.3) == pytest.approx(2 * np.pi * 0.3, rel=1e-8)


def test_sphere_integral_odd_vanishes():
    g = centered_grid(65)
    x, _ = g.meshgrid()
    f = Field(g, x)
    assert abs(sphere_integral(f, (0.0, 0.0), 0.31)) <= 1e-8


def test_sphere_integral_x_squared():
    g = centered_grid(129)
    x, _ = g.meshgrid()
    f = Field(g, x * x)
    r = 0.3
    assert sphere_integral(f, (0.0, 0.0), r) == pytest.approx(np.pi * r**3, rel=1e-6)


def test_sphere_integral_3d_constant_and_quadratic():
    g = Grid((49, 49, 49), 1.0 / 48, (-0.5, -0.5, -0.5))
    one = Field(g, np.ones(g.shape))
    r = 0.3
    assert sphere_integral(one, (0.0,) * 3, r) == pytest.approx(4 * np.pi * r * r, rel=1e-8)
    x, y, z = g.meshgrid()
    f = Field(g, z * z)
    # int_{S_r} z^2 = 4 pi r^4 / 3
    assert sphere_integral(f, (0.0,) * 3, r) == pytest.approx(4 * np.pi * r**4 / 3, rel=1e-8)


def test_gradsq_ball_integral_halfplane_kink():
    # |grad (x1)+|^2 = indicator of the half plane: integral = pi r^2 / 2
    g = centered_grid(257)
    x, _ = g.meshgrid()
    f = Field(g, np.maximum(x, 0.0))
    for r in (0.05, 0.125, 0.25):
        q = BallQuadrature(g, (0.0, 0.0), r)
        val = ball_integral_gradsq(f, q, "one")
        assert val == pytest.approx(np.pi * r * r / 2.0, rel=4e-3), f"r={r}"


# ---------------------------------------------------------------- node integrals

def test_integrate_nodes_trapezoid_constant(unit_grid):
    one = Field(unit_grid, np.ones(unit_grid.shape))
    assert integrate_nodes(one) == pytest.approx(1.0, rel=1e-13)


# ---------------------------------------------------------------- binary format

def test_field_roundtrip(tmp_path, unit_grid):
    rng = np.random.default_rng(19)
    vals = rng.standard_normal(unit_grid.shape)
    f = Field(unit_grid, vals, dirichlet=True)
    p = tmp_path / "f.gpsf"
    write_field(f, p)
    g = read_field(p)
    assert g.grid == unit_grid
    assert np.array_equal(g.values, f.values)
    assert g.dirichlet  # boundary zeros detected


def test_field_format_layout(tmp_path):
    g = Grid((3, 4), 0.5, (1.0, 2.0))
    f = Field(g, np.arange(12.0).reshape(3, 4))
    p = tmp_path / "t.gpsf"
    write_field(f, p)
    raw = p.read_bytes()
    assert raw[:4] == b"GPSF"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert raw[8] == 2
    assert int.from_bytes(raw[9:17], "little") == 3
    assert int.from_bytes(raw[17:25], "little") == 4
    assert np.frombuffer(raw[25:33], "<f8")[0] == 0.5
    assert np.frombuffer(raw[33:49], "<f8").tolist() == [1.0, 2.0]
    assert np.frombuffer(raw[49:], "<f8").tolist() == list(map(float, range(12)))
