"""Per-sample norms and residuals, inequality checks and envelope fits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .elliptic import DEFAULT_SOLVER, SolverSettings, apply_radial_laplacian, op_ML
from .fields import State, divergence_residual
from .grid import Parity, ScalarField, d_dr, d_dz, div_axis, integral, lp_norm, over_r

log = logging.getLogger(__name__)

__all__ = [
    "NORM_NAMES",
    "RESIDUAL_NAMES",
    "COLUMNS",
    "DiagnosticsRecord",
    "record",
    "L_field",
    "omega_equation_residual",
    "check_max_principle",
    "check_energy_bound",
    "cz_report",
    "phi",
    "phi_fit",
    "phi_fit_values",
]

NORM_NAMES = (
    "H_L1", "H_L2", "H_inf", "H_min", "H_max",
    "rho_L1", "rho_L2", "rho_inf", "rho_min", "rho_max",
    "u_L2", "h_L2", "uh_L2",
    "grad_u_L2", "grad_u_L4", "grad_u_inf",
    "Omega_L2", "w_L2", "w_L4", "htheta_L4",
    "ur_over_r_inf", "grad_ur_over_r_L2",
    "L_L2", "ML_rho_L2",
    "u_H1", "u_H2", "h_H1", "h_H2", "rho_H1", "rho_H2",
    "int_grad_u_L2sq", "int_grad_u_inf",
    "boundary_ring",
)  # fmt: skip
RESIDUAL_NAMES = ("omega_residual", "energy_margin", "div_residual")
COLUMNS = ("t",) + NORM_NAMES + RESIDUAL_NAMES



@dataclass
class DiagnosticsRecord:
    """One time sample: named norms and residuals."""

    t: float
    norms: dict[str, float]
    residuals: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        if name == "t":
            return self.t
        if name in self.norms:
            return self.norms[name]
        return self.residuals[name]

    def row(self) -> list[float]:
        return [self[c] for c in COLUMNS]

    @classmethod
    def from_row(cls, values: Sequence[float]) -> "DiagnosticsRecord":
        d = dict(zip(COLUMNS, (float(v) for v in values)))
        return cls(
            d["t"],
            {k: d[k] for k in NORM_NAMES},
            {k: d[k] for k in RESIDUAL_NAMES},
        )


def L_field(state: State, settings: SolverSettings = DEFAULT_SOLVER) -> ScalarField:
    """Corrected vorticity ``L = Omega - ML rho``."""
    return state.Omega - op_ML(state.rho, settings)


def _grad_u_squared(state: State) -> np.ndarray:
    ur, uz = state.ur, state.uz
    ur_over_r = over_r(ur.values, state.grid)
    return (
        d_dr(ur).values ** 2
        + d_dz(ur).values ** 2
        + d_dr(uz).values ** 2
        + d_dz(uz).values ** 2
        + ur_over_r**2
    )


def _even(values: np.ndarray, state: State) -> ScalarField:
    return ScalarField(state.grid, Parity.EVEN, values)


def _l2(values: np.ndarray, state: State) -> float:
    return lp_norm(_even(values, state), 2)


def omega_equation_residual(prev: State, cur: State) -> float:
    """``L^2`` residual of the ``Omega`` equation across one step.

    ``(Omega_new - Omega_old)/dt + u.grad Omega - L5 Omega + D_z H^2 +
    D_r rho / r`` with every spatial term taken at the earlier state, so the
    value is ``O(dt + h^2)``.
    """
    dt = cur.t - prev.t
    if not dt > 0:
        raise ValueError("states must be in increasing time order")
    g = prev.grid
    om_old, om_new = prev.Omega, cur.Omega
    adv = prev.ur.values * d_dr(om_old).values + prev.uz.values * d_dz(om_old).values
    diff = apply_radial_laplacian(om_old.values, g, 3)
    lorentz = d_dz(prev.H * prev.H).values
    buoy = div_axis(d_dr(prev.rho)).values
    res = (om_new.values - om_old.values) / dt + adv - diff + lorentz + buoy
    return _l2(res, prev)


def record(
    state: State,
    prev: Optional[DiagnosticsRecord] = None,
    initial: Optional[DiagnosticsRecord] = None,
    omega_residual: float = 0.0,
    settings: SolverSettings = DEFAULT_SOLVER,
    boundary_warn: float = 1e-6,
) -> DiagnosticsRecord:
    """Compute one :class:`DiagnosticsRecord`.

    ``prev`` feeds the trapezoidal time integrals, ``initial`` the energy
    margin; both default to "this is the first sample".
    """
    g = state.grid
    H, rho, w = state.H, state.rho, state.wtheta
    ur, uz = state.ur, state.uz
    h = state.htheta
    n: dict[str, float] = {}

    for name, f in (("H", H), ("rho", rho)):
        n[f"{name}_L1"] = lp_norm(f, 1)
        n[f"{name}_L2"] = lp_norm(f, 2)
        n[f"{name}_inf"] = lp_norm(f, math.inf)
        n[f"{name}_min"] = float(np.min(f.values))
        n[f"{name}_max"] = float(np.max(f.values))

    u_sq = integral(ur * ur) + integral(uz * uz)
    h_sq = integral(h * h)
    n["u_L2"] = math.sqrt(u_sq)
    n["h_L2"] = math.sqrt(h_sq)
    n["uh_L2"] = math.sqrt(u_sq + h_sq)

    gu2 = _grad_u_squared(state)
    grad_sq = integral(_even(gu2, state))
    n["grad_u_L2"] = math.sqrt(grad_sq)
    n["grad_u_L4"] = integral(_even(gu2 * gu2, state)) ** 0.25
    n["grad_u_inf"] = math.sqrt(float(np.max(gu2)))

    omega = state.Omega
    n["Omega_L2"] = lp_norm(omega, 2)
    n["w_L2"] = lp_norm(w, 2)
    n["w_L4"] = lp_norm(w, 4)
    n["htheta_L4"] = lp_norm(h, 4)
    ur_over_r = div_axis(ur)
    n["ur_over_r_inf"] = lp_norm(ur_over_r, math.inf)
    n["grad_ur_over_r_L2"] = math.sqrt(
        integral(d_dr(ur_over_r) * d_dr(ur_over_r)) + integral(d_dz(ur_over_r) * d_dz(ur_over_r))
    )
    ml_rho = op_ML(rho, settings)
    n["L_L2"] = lp_norm(omega - ml_rho, 2)
    n["ML_rho_L2"] = lp_norm(ml_rho, 2)

    # H^2 seminorms as ||Delta f||, which equals ||grad^2 f|| on R^3
    lap_ur = g.r[:, None] * apply_radial_laplacian(ur_over_r.values, g, 3)
    lap_uz = apply_radial_laplacian(uz.values, g, 1)
    n["u_H1"] = math.sqrt(u_sq + grad_sq)
    n["u_H2"] = math.sqrt(u_sq + grad_sq + _l2(lap_ur, state) ** 2 + _l2(lap_uz, state) ** 2)
    # |grad(h e_theta)|^2 = (d_r h)^2 + (d_z h)^2 + (h/r)^2, and h/r = H
    grad_h_sq = integral(d_dr(h) * d_dr(h)) + integral(d_dz(h) * d_dz(h)) + integral(H * H)
    lap_h = g.r[:, None] * apply_radial_laplacian(H.values, g, 3)
    n["h_H1"] = math.sqrt(h_sq + grad_h_sq)
    n["h_H2"] = math.sqrt(h_sq + grad_h_sq + _l2(lap_h, state) ** 2)
    rho_sq = n["rho_L2"] ** 2
    grad_rho_sq = integral(d_dr(rho) * d_dr(rho)) + integral(d_dz(rho) * d_dz(rho))
    lap_rho = apply_radial_laplacian(rho.values, g, 1)
    n["rho_H1"] = math.sqrt(rho_sq + grad_rho_sq)
    n["rho_H2"] = math.sqrt(rho_sq + grad_rho_sq + _l2(lap_rho, state) ** 2)

    if prev is None:
        n["int_grad_u_L2sq"] = 0.0
        n["int_grad_u_inf"] = 0.0
    else:
        dt = state.t - prev.t
        n["int_grad_u_L2sq"] = prev["int_grad_u_L2sq"] + 0.5 * dt * (prev["grad_u_L2"] ** 2 + grad_sq)
        n["int_grad_u_inf"] = prev["int_grad_u_inf"] + 0.5 * dt * (prev["grad_u_inf"] + n["grad_u_inf"])

    # velocity is nonlocal (the return flow always reaches the wall), so the
    # monitor tracks the locally supported fields only
    ring = 0.0
    for f in (w, H, rho):
        top = float(np.max(np.abs(f.values)))
        if top > 0:
            ring = max(ring, float(np.max(np.abs(f.values[-1]))) / top)
    n["boundary_ring"] = ring
    if ring > boundary_warn:
        log.warning("t=%.6g: outer-ring amplitude %.3e of field max exceeds %.1e", state.t, ring, boundary_warn)

    if initial is None:
        uh0, rho0, t0 = n["uh_L2"], n["rho_L2"], state.t
    else:
        uh0, rho0, t0 = initial["uh_L2"], initial["rho_L2"], initial.t
    residuals = {
        "omega_residual": float(omega_residual),
        "energy_margin": uh0 + 2.0 * rho0 * (state.t - t0) - n["uh_L2"],
        "div_residual": divergence_residual(ur, uz),
    }
    return DiagnosticsRecord(state.t, n, residuals)


# -- inequality checks --------------------------------------------------------


@dataclass
class CheckReport:
    passed: bool
    worst_margin: float
    failures: list[tuple[int, float, str, float]]
    details: dict[str, float] = field(default_factory=dict)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} worst margin {self.worst_margin:.3e}"
        if self.failures:
            i, t, name, m = self.failures[0]
            text += f"; first failure sample {i} (t={t:.6g}) {name} over by {m:.3e}"
        return text


def check_max_principle(
    series: Sequence[DiagnosticsRecord], mode: str = "mhd_boussinesq", tol: float = 1e-12
) -> CheckReport:
    """Sup bound of the transported fields against their initial value.

    The margin is ``||f(t)||_inf - ||f_0||_inf`` (``<= 0`` is compliant);
    ``rho`` is only checked in MHD-Boussinesq mode.
    """
    if not series:
        raise ValueError("empty diagnostics series")
    names = ["H_inf"] + (["rho_inf"] if mode == "mhd_boussinesq" else [])
    worst = -math.inf
    failures = []
    for i, rec in enumerate(series):
        for name in names:
            m = rec[name] - series[0][name]
            worst = max(worst, m)
            if m > tol:
                failures.append((i, rec.t, name, m))
    return CheckReport(not failures, worst, failures)


def check_energy_bound(series: Sequence[DiagnosticsRecord], slack: Optional[float] = None) -> CheckReport:
    """Linear-growth energy bound plus a fitted quadratic-in-time constant.

    Checks ``||(u,h)(t)|| <= ||(u0,h0)|| + 2 ||rho0|| t + slack`` at every
    sample; ``slack`` defaults to ``0.05 (||(u0,h0)|| + ||rho0||)``.  The
    report also carries ``C0``, the smallest constant with
    ``||(u,h)||^2 + int ||grad u||^2 <= C0 (1 + t)^2`` on the samples.
    """
    if not series:
        raise ValueError("empty diagnostics series")
    first = series[0]
    uh0, rho0 = first["uh_L2"], first["rho_L2"]
    if slack is None:
        slack = 0.05 * (uh0 + rho0)
    worst = -math.inf
    failures = []
    c0 = 0.0
    for i, rec in enumerate(series):
        dt = rec.t - first.t
        m = rec["uh_L2"] - (uh0 + 2.0 * rho0 * dt + slack)
        worst = max(worst, m)
        if m > 0:
            failures.append((i, rec.t, "uh_L2", m))
        c0 = max(c0, (rec["uh_L2"] ** 2 + rec["int_grad_u_L2sq"]) / (1.0 + dt) ** 2)
    return CheckReport(not failures, worst, failures, {"C0": c0, "slack": slack})


def cz_report(state: State) -> dict[str, Optional[float]]:
    """Calderon-Zygmund style ratios; ``None`` where the denominator is zero."""
    gu2 = _grad_u_squared(state)
    num2 = math.sqrt(integral(_even(gu2, state)))
    num4 = integral(_even(gu2 * gu2, state)) ** 0.25
    q = div_axis(state.ur)
    num_q = math.sqrt(integral(d_dr(q) * d_dr(q)) + integral(d_dz(q) * d_dz(q)))
    w2 = lp_norm(state.wtheta, 2)
    w4 = lp_norm(state.wtheta, 4)
    om2 = lp_norm(state.Omega, 2)

    def ratio(a: float, b: float) -> Optional[float]:
        return a / b if b > 0 else None

    return {
        "grad_u_over_w_L2": ratio(num2, w2),
        "grad_u_over_w_L4": ratio(num4, w4),
        "grad_ur_over_r_over_Omega_L2": ratio(num_q, om2),
    }


# -- tower-exponential envelopes ----------------------------------------------


def _log_phi(t: np.ndarray, k: int, c: float) -> np.ndarray:
    x = c * t
    with np.errstate(over="ignore"):
        for _ in range(k - 1):
            x = np.exp(x)
    return math.log(c) + x


def phi(t, k: int, c: float):
    """``c exp(exp(... exp(c t)))`` with ``k`` exponentials."""
    if k < 1:
        raise ValueError("k must be >= 1")
    x = c * np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        for _ in range(k):
            x = np.exp(x)
    return c * x


@dataclass
class PhiFit:
    c: float
    satisfied: bool


def phi_fit_values(t: Sequence[float], q: Sequence[float], k: int, c_cap: float = 1e3, rtol: float = 1e-6) -> PhiFit:
    """Smallest ``c`` with ``q(t_i) <= Phi_{k,c}(t_i)`` at every sample.

    Bisection on ``c`` (``Phi`` increases with ``c`` for ``t >= 0``),
    compared in log space so the towers never overflow.
    """
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    if t.size == 0:
        raise ValueError("empty series")
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise ValueError("phi_fit needs positive finite samples")
    if np.any(t < 0):
        raise ValueError("phi_fit needs t >= 0")
    logq = np.log(q)

    def ok(c: float) -> bool:
        return bool(np.all(logq <= _log_phi(t, k, c)))

    hi = max(float(np.max(q)), 1e-300)
    while not ok(hi):
        hi *= 2.0
        if hi > 1e300:
            return PhiFit(math.inf, False)
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return PhiFit(hi, hi <= c_cap)


def phi_fit(series: Sequence[DiagnosticsRecord], name: str, k: int, c_cap: float = 1e3) -> PhiFit:
    """:func:`phi_fit_values` on one named quantity of a diagnostics series."""
    return phi_fit_values([r.t for r in series], [r[name] for r in series], k, c_cap)
