import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from axisym_mhdb.grid import Parity, build_grid, d_dr, d_dz, div_axis, integral, lp_norm, pad_r

from conftest import R_SYM, Z_SYM, lambdify


def test_cell_centred_nodes():
    g = build_grid(4, 4, 1.0, 1.0)
    np.testing.assert_allclose(g.r, [0.125, 0.375, 0.625, 0.875], rtol=0, atol=1e-15)
    g = build_grid(8, 4, 2.0, 1.0)
    assert g.dr == 0.25
    assert g.r[0] == 0.125
    np.testing.assert_allclose(np.diff(g.r), g.dr, rtol=0, atol=1e-15)
    np.testing.assert_allclose(g.z, [0.0, 0.25, 0.5, 0.75])


@pytest.mark.parametrize(
    "args",
    [(3, 4, 1.0, 1.0), (4, 3, 1.0, 1.0), (4, 4, 0.0, 1.0), (4, 4, 1.0, -1.0), (4, 4, math.inf, 1.0), (4.5, 4, 1.0, 1.0)],
)
def test_build_grid_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_integral_constant_and_linear():
    g = build_grid(16, 8, 1.0, 1.0)
    one = g.field(1.0, Parity.EVEN)
    assert integral(one) == pytest.approx(math.pi, rel=1e-14)
    r_field = g.field(g.mesh()[0], Parity.ODD)
    # midpoint error of int r^2 dr is -dr^2/12 per unit length
    assert integral(r_field) == pytest.approx(2 * math.pi / 3, abs=2 * math.pi * g.dr**2 / 12 * 1.01)


def _fine_quadrature(func, R, Lz, n):
    """Independent midpoint oracle on an n x n grid built without the package."""
    r = (np.arange(n) + 0.5) * (R / n)
    z = np.arange(n) * (Lz / n)
    rr, zz = np.meshgrid(r, z, indexing="ij")
    return float(np.sum(func(rr, zz) * rr) * 2 * math.pi * (R / n) * (Lz / n))


def test_integral_matches_fine_quadrature():
    f = lambda r, z: np.exp(-(r**2) - np.sin(2 * math.pi * z) ** 2)
    g = build_grid(128, 128, 3.0, 1.0)
    r, z = g.mesh()
    oracle = _fine_quadrature(f, 3.0, 1.0, 1280)
    assert integral(g.field(f(r, z), Parity.EVEN)) == pytest.approx(oracle, rel=5e-5)


def test_lp_norm_examples():
    g = build_grid(8, 8, 1.0, 1.0)
    assert lp_norm(g.field(-2.5, Parity.EVEN), math.inf) == 2.5
    assert lp_norm(g.field(1.0, Parity.EVEN), 2) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        lp_norm(g.field(1.0, Parity.EVEN), 0.5)


def test_lp4_norm_matches_fine_quadrature():
    f = lambda r, z: np.exp(-((r - 1.0) ** 2 + (z - 2.0) ** 2) / 0.25)
    g = build_grid(128, 128, 4.0, 4.0)
    r, z = g.mesh()
    oracle = _fine_quadrature(lambda r, z: f(r, z) ** 4, 4.0, 4.0, 1280) ** 0.25
    assert lp_norm(g.field(f(r, z), Parity.EVEN), 4) == pytest.approx(oracle, rel=5e-5)


def test_d_dr_exact_on_low_degree():
    g = build_grid(10, 6, 2.0, 1.0)
    r, _ = g.mesh()
    np.testing.assert_allclose(d_dr(g.field(r, Parity.ODD)).values, 1.0, rtol=0, atol=1e-13)
    dr2 = d_dr(g.field(r**2, Parity.EVEN))
    assert dr2.parity is Parity.ODD
    np.testing.assert_allclose(dr2.values, 2 * r, rtol=0, atol=1e-13)
    # centred difference of r^3 is 3r^2 + dr^2; the mirror and cubic wall
    # ghosts are exact, so that holds on every row
    np.testing.assert_allclose(d_dr(g.field(r**3, Parity.ODD)).values, 3 * r**2 + g.dr**2, atol=1e-12)


def _max_err_ratio(op, expr, exact_expr, parity, sizes=(32, 64), R=2.0, Lz=2.0):
    f, df = lambdify(expr), lambdify(exact_expr)
    errs = []
    for n in sizes:
        g = build_grid(n, n, R, Lz)
        r, z = g.mesh()
        errs.append(np.max(np.abs(op(g.field(f(r, z), parity)).values - df(r, z))))
    return errs[0] / errs[1]


def test_d_dr_second_order_vs_symbolic():
    expr = sp.sin(R_SYM) * sp.cos(2 * sp.pi * Z_SYM / 2)
    ratio = _max_err_ratio(d_dr, expr, sp.diff(expr, R_SYM), Parity.ODD)
    assert 3.5 <= ratio <= 4.5


def test_d_dz_examples():
    g = build_grid(8, 32, 1.0, 2.0)
    r, z = g.mesh()
    assert np.all(d_dz(g.field(np.exp(-r), Parity.EVEN)).values == 0.0)
    k = 2 * math.pi / 2.0
    err = np.max(np.abs(d_dz(g.field(np.sin(k * z), Parity.EVEN)).values - k * np.cos(k * z)))
    assert err <= k**3 * g.dz**2 / 6 * 1.01
    expr = sp.exp(-(R_SYM**2)) * sp.sin(2 * sp.pi * Z_SYM / 2) ** 2 + R_SYM**2 * sp.cos(sp.pi * Z_SYM)
    ratio = _max_err_ratio(d_dz, expr, sp.diff(expr, Z_SYM), Parity.EVEN)
    assert 3.5 <= ratio <= 4.5


def test_div_axis():
    g = build_grid(8, 4, 1.0, 1.0)
    r, z = g.mesh()
    np.testing.assert_allclose(div_axis(g.field(r, Parity.ODD)).values, 1.0, rtol=1e-15)
    np.testing.assert_allclose(div_axis(g.field(r**3, Parity.ODD)).values, r**2, rtol=1e-14)
    with pytest.raises(ValueError):
        div_axis(g.field(r**2, Parity.EVEN))
    errs = []
    for n in (32, 64):
        g = build_grid(n, n, 2.0, 2.0)
        r, z = g.mesh()
        f = np.sin(r) * np.exp(-(z**2) - r**2)
        exact = np.sinc(r / np.pi) * np.exp(-(z**2) - r**2)
        errs.append(np.max(np.abs(div_axis(g.field(f, Parity.ODD)).values - exact)))
    assert max(errs) < 1e-14  # pointwise division at r_i > 0 is exact up to round-off


def test_parity_ghosts():
    v = np.arange(1.0, 9.0).reshape(4, 2)
    even, odd = pad_r(v, Parity.EVEN), pad_r(v, Parity.ODD)
    np.testing.assert_array_equal(even[0], v[0])
    np.testing.assert_array_equal(odd[0], -v[0])


def test_d_dr_even_output_vanishes_on_axis():
    g = build_grid(64, 8, 2.0, 1.0)
    r, z = g.mesh()
    out = d_dr(g.field(np.exp(-(r**2)) * np.cos(2 * math.pi * z), Parity.EVEN)).values
    axis = (3 * out[0] - out[1]) / 2  # linear extrapolation to r = 0
    assert np.max(np.abs(axis)) < 10 * g.dr**3 * np.max(np.abs(out))


def test_d_dr_twice_is_wide_second_difference_away_from_wall():
    g = build_grid(12, 5, 1.0, 1.0)
    rng = np.random.default_rng(0)
    f = g.field(rng.standard_normal(g.shape), Parity.EVEN)
    twice = d_dr(d_dr(f)).values
    p = pad_r(f.values, Parity.EVEN, width=2)
    wide = (p[4:] - 2 * p[2:-2] + p[:-4]) / (4 * g.dr**2)
    # identical wherever no wall ghost enters (rows 0 .. nr-3)
    np.testing.assert_allclose(twice[:-2], wide[:-2], rtol=1e-12, atol=1e-12)


def test_field_arithmetic_parity_rules():
    g = build_grid(4, 4, 1.0, 1.0)
    a, b = g.field(1.0, Parity.ODD), g.field(2.0, Parity.ODD)
    assert (a * b).parity is Parity.EVEN
    assert (a + b).parity is Parity.ODD
    with pytest.raises(ValueError):
        a + g.field(1.0, Parity.EVEN)
    with pytest.raises(FloatingPointError):
        g.field(np.nan, Parity.EVEN)


finite = st.floats(-1e3, 1e3, allow_nan=False)
GRID = build_grid(6, 5, 1.5, 2.0)


@given(arrays(float, GRID.shape, elements=finite), arrays(float, GRID.shape, elements=finite), finite, finite)
def test_integral_is_linear(f, g, a, b):
    F, G = GRID.field(f, Parity.EVEN), GRID.field(g, Parity.EVEN)
    lhs = integral(F * a + G * b)
    rhs = a * integral(F) + b * integral(G)
    scale = (abs(a) + abs(b) + 1) * (np.abs(f).max() + np.abs(g).max() + 1) * 2 * math.pi * 1.5**2 * 2
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(arrays(float, GRID.shape, elements=finite))
def test_holder_consistency(f):
    F = GRID.field(f, Parity.EVEN)
    l1, l2, linf = lp_norm(F, 1), lp_norm(F, 2), lp_norm(F, math.inf)
    assert l2**2 <= l1 * linf * (1 + 1e-12) + 1e-300


@given(arrays(float, GRID.shape, elements=finite), arrays(float, GRID.shape, elements=st.floats(0, 1)))
def test_lp_norm_monotone_in_magnitude(f, shrink):
    F, smaller = GRID.field(f, Parity.EVEN), GRID.field(f * shrink, Parity.EVEN)
    for p in (1, 2, 3, 4, math.inf):
        assert lp_norm(smaller, p) <= lp_norm(F, p) * (1 + 1e-12)
