import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delamina.fields import (
    BoundarySpec,
    Grid,
    GridMismatchError,
    ResolutionError,
    ScalarField,
    VectorField2,
    check_resolved,
    distance_to_boundary,
    gradient,
    hessian,
    integrate,
    mollify,
    mollify_odd,
    same_grid,
    strain,
)


def field(grid, fn):
    x, y = grid.mesh()
    return ScalarField(grid, fn(x, y))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(2, 8)
    with pytest.raises(ValueError):
        Grid(8, 8, lx=0.0)
    g = Grid(8, 16, 2.0, 1.0)
    assert g.shape == (9, 17)
    assert g.hx == pytest.approx(0.25) and g.hy == pytest.approx(1 / 16)
    assert g.weights().sum() == pytest.approx(2.0)


def test_field_shape_and_finiteness():
    g = Grid(8, 8)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((8, 8)))
    bad = np.zeros(g.shape)
    bad[2, 2] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, bad)


def test_grid_mismatch():
    a = ScalarField(Grid(8, 8), np.zeros((9, 9)))
    b = ScalarField(Grid(16, 16), np.zeros((17, 17)))
    with pytest.raises(GridMismatchError):
        same_grid(a, b)


def test_gradient_of_constant_and_linear():
    g = Grid(16, 12, 1.5, 1.0)
    d = gradient(field(g, lambda x, y: 3.0 + 0 * x))
    assert np.max(np.abs(d.x)) < 1e-12 and np.max(np.abs(d.y)) < 1e-12
    d = gradient(field(g, lambda x, y: x))
    np.testing.assert_allclose(d.x, 1.0, atol=1e-12)
    np.testing.assert_allclose(d.y, 0.0, atol=1e-12)


def test_gradient_second_order():
    errs = []
    for n in (64, 128):
        g = Grid(n, n)
        d = gradient(field(g, lambda x, y: np.sin(np.pi * x)))
        x, _ = g.mesh()
        errs.append(np.max(np.abs(d.x - np.pi * np.cos(np.pi * x))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_hessian_exact_for_quadratics():
    g = Grid(10, 14)
    h = hessian(field(g, lambda x, y: 2 * x - y))
    for comp in (h.xx, h.xy, h.yy):
        assert np.max(np.abs(comp)) < 1e-9
    h = hessian(field(g, lambda x, y: x**2))
    np.testing.assert_allclose(h.xx, 2.0, atol=1e-9)
    np.testing.assert_allclose(h.xy, 0.0, atol=1e-9)
    np.testing.assert_allclose(h.yy, 0.0, atol=1e-9)
    h = hessian(field(g, lambda x, y: x * y))
    np.testing.assert_allclose(h.xy[1:-1, 1:-1], 1.0, atol=1e-9)


def test_strain_examples():
    g = Grid(8, 8)
    x, y = g.mesh()
    zero_u = VectorField2.zeros(g)
    zero_w = ScalarField(g, np.zeros(g.shape))
    e = strain(zero_u, zero_w, 0.5)
    np.testing.assert_allclose(e.xx, -1.0)
    np.testing.assert_allclose(e.yy, -1.0)
    np.testing.assert_allclose(e.xy, 0.0)
    e = strain(VectorField2(g, x / 2, y / 2), zero_w, 0.5)
    assert np.max(np.abs(e.norm2())) < 1e-24
    e = strain(zero_u, ScalarField(g, x), 0.5)
    np.testing.assert_allclose(e.xx, 0.0, atol=1e-12)
    np.testing.assert_allclose(e.yy, -1.0, atol=1e-12)


def test_integrate_examples():
    g = Grid(32, 32)
    assert integrate(field(g, lambda x, y: 1.0 + 0 * x)) == 1.0
    assert integrate(field(g, lambda x, y: x)) == pytest.approx(0.5, abs=1e-15)
    g = Grid(128, 128)
    val = integrate(field(g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)))
    assert abs(val - 4 / np.pi**2) < 1e-4


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 40), st.integers(4, 40), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_integrate_affine_exact(nx, ny, lx, ly):
    g = Grid(nx, ny, lx, ly)
    val = integrate(field(g, lambda x, y: 1.0 + 2.0 * x - 3.0 * y))
    exact = lx * ly * (1.0 + lx - 1.5 * ly)
    assert val == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_distance_to_boundary():
    g = Grid(10, 10)
    d = distance_to_boundary(g).values
    assert d[5, 5] == pytest.approx(0.5)
    assert d[1, 3] == pytest.approx(0.1)
    m = BoundarySpec.full().mask(g)
    assert np.all(d[m] == 0.0)


def test_mollify_constant_and_affine():
    g = Grid(64, 64)
    sigma = 0.1
    c = mollify(field(g, lambda x, y: 2.5 + 0 * x), sigma).values
    x, y = g.mesh()
    inner = (x >= sigma) & (x <= 1 - sigma) & (y >= sigma) & (y <= 1 - sigma)
    np.testing.assert_allclose(c[inner], 2.5, rtol=1e-12)
    lin = mollify(field(g, lambda x, y: x), sigma).values
    np.testing.assert_allclose(lin[inner], x[inner], atol=1e-12)


def test_mollify_hat_matches_slopes():
    g = Grid(200, 200)
    sigma = 0.1
    out = mollify(field(g, lambda x, y: np.abs(x - 0.5)), sigma).values
    x, y = g.mesh()
    slope = np.gradient(out, g.hx, axis=0)
    rows = (y >= sigma) & (y <= 1 - sigma)
    left = rows & (x > sigma) & (x < 0.5 - sigma - 1e-9)
    right = rows & (x > 0.5 + sigma + 1e-9) & (x < 1 - sigma)
    np.testing.assert_allclose(slope[left], -1.0, atol=1e-9)
    np.testing.assert_allclose(slope[right], 1.0, atol=1e-9)
    # inside the kink neighbourhood the slope varies monotonically
    mid = out[:, 100][(g.x1 > 0.5 - sigma) & (g.x1 < 0.5 + sigma)]
    assert np.all(np.diff(np.diff(mid)) >= -1e-12)


def test_mollify_odd_vanishes_on_edges():
    g = Grid(64, 64)
    out = mollify_odd(distance_to_boundary(g), 0.1).values
    assert np.all(out[BoundarySpec.full().mask(g)] == 0.0)
    # on a face, farther than sigma from every fold, the tent is affine and unchanged
    assert out[16, 32] == pytest.approx(0.25, abs=1e-12)


def test_check_resolved():
    g = Grid(10, 100)
    with pytest.raises(ResolutionError):
        check_resolved(g, 0.05, "x")
    check_resolved(g, 0.05, "x", spacing=g.hy)
    with pytest.raises(ResolutionError):
        mollify(field(g, lambda x, y: x), 0.01)


def test_boundary_spec():
    with pytest.raises(ValueError):
        BoundarySpec(False, False, False, False)
    m = BoundarySpec.left_only().mask(Grid(4, 4))
    assert m[0].all() and m.sum() == 5
    assert math.isclose(Grid(4, 4).area, 1.0)
