import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from axisym_mhdb.fields import (
    FaceFlow,
    PhysParams,
    curl_theta,
    divergence,
    divergence_residual,
    lorentz_curl_residual,
    make_state,
    read_snapshot,
    state_from_snapshot,
    velocity_from_wtheta,
    write_snapshot,
)
from axisym_mhdb.grid import Parity, build_grid

from conftest import R_SYM as r, Z_SYM as z, l2, lambdify

R, LZ = 4.0, 8.0

PSI = r**2 * (1 - (r / R) ** 2) ** 2 * sp.sin(2 * sp.pi * z / LZ)
W = sp.simplify(-(sp.diff(PSI, r, 2) - sp.diff(PSI, r) / r + sp.diff(PSI, z, 2)) / r)
UR = sp.simplify(-sp.diff(PSI, z) / r)
UZ = sp.simplify(sp.diff(PSI, r) / r)


def _square(n):
    return build_grid(n, n, R, LZ)


def test_zero_vorticity_gives_zero_velocity():
    g = _square(16)
    ur, uz, psi = velocity_from_wtheta(g.zeros(Parity.ODD))
    for f in (ur, uz, psi):
        assert np.all(f.values == 0.0)
    assert (ur.parity, uz.parity, psi.parity) == (Parity.ODD, Parity.EVEN, Parity.EVEN)


@pytest.mark.parametrize("component", ["ur", "uz"])
def test_velocity_manufactured_second_order(component):
    w, exact = lambdify(W), lambdify(UR if component == "ur" else UZ)
    errs = []
    for n in (32, 64, 128):
        g = _square(n)
        rr, zz = g.mesh()
        ur, uz, _ = velocity_from_wtheta(g.field(w(rr, zz), Parity.ODD))
        got = ur if component == "ur" else uz
        errs.append(l2(got.values - exact(rr, zz), g))
    assert 3.0 <= errs[1] / errs[2] <= 5.0


def test_biot_savart_round_trip():
    w = lambdify(W)
    errs = []
    for n in (32, 64, 128):
        g = _square(n)
        rr, zz = g.mesh()
        wf = g.field(w(rr, zz), Parity.ODD)
        ur, uz, _ = velocity_from_wtheta(wf)
        errs.append(l2(curl_theta(ur, uz).values - wf.values, g))
    assert 3.0 <= errs[1] / errs[2] <= 5.0


def test_recovered_velocity_is_solenoidal():
    g = _square(48)
    rng = np.random.default_rng(0)
    ur, uz, _ = velocity_from_wtheta(g.field(rng.standard_normal(g.shape), Parity.ODD))
    assert divergence_residual(ur, uz) <= 1e-12


def test_linear_strain_divergence_free_in_interior():
    g = _square(16)
    rr, zz = g.mesh()
    div = divergence(g.field(rr, Parity.ODD), g.field(-2.0 * zz, Parity.EVEN)).values
    # z is periodic, so the linear profile wraps at the first and last row
    assert np.max(np.abs(div[:, 1:-1])) <= 1e-13


def test_divergence_symbolic_oracle():
    ur_s = r * sp.exp(-(r**2)) * sp.cos(2 * sp.pi * z / LZ)
    uz_s = sp.exp(-(r**2)) * sp.sin(4 * sp.pi * z / LZ)
    div_s = lambdify(sp.diff(r * ur_s, r) / r + sp.diff(uz_s, z))
    fu, fz = lambdify(ur_s), lambdify(uz_s)
    errs = []
    for n in (32, 64, 128):
        g = _square(n)
        rr, zz = g.mesh()
        d = divergence(g.field(fu(rr, zz), Parity.ODD), g.field(fz(rr, zz), Parity.EVEN))
        assert d.parity is Parity.EVEN
        errs.append(l2(d.values - div_s(rr, zz), g))
    assert 3.0 <= errs[1] / errs[2] <= 5.0


def test_curl_examples():
    g = _square(16)
    rr, _ = g.mesh()
    assert np.all(curl_theta(g.zeros(Parity.ODD), g.field(np.full(g.shape, 3.0), Parity.EVEN)).values == 0.0)
    c = curl_theta(g.zeros(Parity.ODD), g.field(rr**2, Parity.EVEN))
    assert c.parity is Parity.ODD
    np.testing.assert_allclose(c.values, -2.0 * rr, rtol=1e-13, atol=1e-13)


def test_curl_symbolic_oracle():
    ur_s = r * (1 - (r / R) ** 2) * sp.sin(2 * sp.pi * z / LZ)
    uz_s = sp.exp(-(r**2)) * sp.cos(2 * sp.pi * z / LZ)
    curl_s = lambdify(sp.diff(ur_s, z) - sp.diff(uz_s, r))
    fu, fz = lambdify(ur_s), lambdify(uz_s)
    errs = []
    for n in (32, 64, 128):
        g = _square(n)
        rr, zz = g.mesh()
        c = curl_theta(g.field(fu(rr, zz), Parity.ODD), g.field(fz(rr, zz), Parity.EVEN))
        errs.append(l2(c.values - curl_s(rr, zz), g))
    assert 3.0 <= errs[1] / errs[2] <= 5.0


def test_parity_violations_rejected():
    g = _square(8)
    with pytest.raises(ValueError):
        velocity_from_wtheta(g.zeros(Parity.EVEN))
    with pytest.raises(ValueError):
        divergence(g.zeros(Parity.EVEN), g.zeros(Parity.EVEN))
    with pytest.raises(ValueError):
        curl_theta(g.zeros(Parity.ODD), g.zeros(Parity.ODD))
    with pytest.raises(ValueError):
        lorentz_curl_residual(g.zeros(Parity.ODD))
    with pytest.raises(ValueError):
        make_state(0.0, g.zeros(Parity.EVEN), g.zeros(Parity.EVEN), g.zeros(Parity.EVEN))
    with pytest.raises(ValueError):
        make_state(0.0, g.zeros(Parity.ODD), g.zeros(Parity.ODD), g.zeros(Parity.EVEN))


def test_lorentz_examples():
    g = _square(16)
    rr, zz = g.mesh()
    assert lorentz_curl_residual(g.field(np.exp(-(rr**2)), Parity.EVEN)) == 0.0
    assert lorentz_curl_residual(g.field(np.full(g.shape, 2.5), Parity.EVEN)) == 0.0
    res = []
    for n in (32, 64, 128):
        g = _square(n)
        rr, zz = g.mesh()
        res.append(lorentz_curl_residual(g.field(np.exp(-(rr**2) - (zz - 4.0) ** 2), Parity.EVEN)))
    assert 3.0 <= res[1] / res[2] <= 5.0


def test_state_cache_invariants():
    g = _square(24)
    rr, zz = g.mesh()
    w = g.field(rr * np.exp(-((rr - 1) ** 2) - (zz - 4) ** 2), Parity.ODD)
    H = g.field(np.exp(-(rr**2) - (zz - 3) ** 2), Parity.EVEN)
    s = make_state(0.25, w, H, g.zeros(Parity.EVEN))
    assert s.cache_valid
    assert np.array_equal(s.htheta.values, rr * H.values)
    assert np.array_equal(s.Omega.values, w.values / rr)
    assert (s.psi.parity, s.ur.parity, s.uz.parity) == (Parity.EVEN, Parity.ODD, Parity.EVEN)
    assert divergence_residual(s.ur, s.uz) <= 1e-12
    assert np.max(np.abs(s.flow.net_outflow())) <= 1e-13 * np.max(np.abs(s.flow.radial))


def test_snapshot_round_trip(tmp_path):
    g = build_grid(12, 10, R, LZ)
    rng = np.random.default_rng(1)
    s = make_state(
        0.1 + 0.2,
        g.field(rng.standard_normal(g.shape), Parity.ODD),
        g.field(rng.standard_normal(g.shape), Parity.EVEN),
        g.field(rng.standard_normal(g.shape), Parity.EVEN),
    )
    path = tmp_path / "s.fld"
    write_snapshot(path, s)
    grid, t, a = read_snapshot(path)
    assert grid == g and t == s.t
    for name in ("wtheta", "H", "rho", "ur", "uz", "psi"):
        assert np.array_equal(a[name], getattr(s, name).values)
    back = state_from_snapshot(path)
    assert np.array_equal(back.psi.values, s.psi.values)


def test_snapshot_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.fld"
    p.write_bytes(b"NOTAFIELD 1\n")
    with pytest.raises(ValueError):
        read_snapshot(p)


@pytest.mark.parametrize(
    "kwargs",
    [{"mu": -1.0}, {"nu": float("nan")}, {"kappa": float("inf")}, {"mode": "euler"}, {"physics": "magic"}],
)
def test_physparams_validation(kwargs):
    with pytest.raises(ValueError):
        PhysParams(**kwargs)


def test_physparams_defaults():
    p = PhysParams()
    assert (p.mu, p.nu, p.kappa, p.mode) == (1.0, 0.0, 0.0, "mhd_boussinesq")
    assert PhysParams(mu=0.0).mu == 0.0


GRID = build_grid(6, 8, 2.0, 2.0)


@settings(max_examples=25)
@given(arrays(float, GRID.shape, elements=st.floats(-1e3, 1e3)))
def test_streamfunction_fluxes_telescope(values):
    flow = FaceFlow.from_streamfunction(GRID.field(values, Parity.EVEN))
    scale = max(np.max(np.abs(flow.radial)), np.max(np.abs(flow.axial)), 1e-300)
    assert np.max(np.abs(flow.net_outflow())) <= 1e-13 * scale
    assert np.all(flow.radial[0] == 0.0) and np.all(flow.radial[-1] == 0.0)
