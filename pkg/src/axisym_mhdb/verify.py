"""Acceptance suites, each at a fixed desk-scale configuration.

Every suite returns a :class:`SuiteResult` whose checks carry the measured
value, the bound it is compared with and a signed margin (``<= 0`` passes).
Long runs shared between suites are cached per configuration.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .config import Config, OutputSpec, dump_config, standard_config
from .convergence import advection_mms_study, convergence_study
from .diagnostics import DiagnosticsRecord, check_energy_bound, check_max_principle, cz_report, phi, phi_fit
from .dynamics import Bump, RunResult, StepControl, bump_field, run, step
from .elliptic import identity_residual_OL1
from .fields import PhysParams, curl_theta, lorentz_curl_residual, make_state, velocity_from_wtheta
from .grid import Grid, Parity, build_grid

__all__ = ["Check", "SuiteResult", "SUITES", "run_suite", "ol1_family", "manufactured_stream"]

STRICT = 1e-12


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    bound: str
    margin: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"  [{status}] {self.name}: value={self.value:.6g} bound {self.bound} margin={self.margin:.3e}"


@dataclass
class SuiteResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def report(self) -> str:
        head = f"suite {self.name}: {'PASS' if self.passed else 'FAIL'} ({self.seconds:.1f} s)"
        return "\n".join([head] + [c.line() for c in self.checks])


def _undefined(value: Optional[float]) -> bool:
    return value is None or math.isnan(value)


def at_most(name: str, value: Optional[float], limit: float) -> Check:
    if _undefined(value):
        return Check(name, False, math.nan, f"<= {limit:.6g}", math.inf)
    return Check(name, bool(value <= limit), value, f"<= {limit:.6g}", value - limit)


def at_least(name: str, value: Optional[float], limit: float) -> Check:
    if _undefined(value):
        return Check(name, False, math.nan, f">= {limit:.6g}", math.inf)
    return Check(name, bool(value >= limit), value, f">= {limit:.6g}", limit - value)


def within(name: str, value: Optional[float], lo: float, hi: float) -> Check:
    if value is None or not math.isfinite(value):
        return Check(name, False, math.nan, f"in [{lo:.6g}, {hi:.6g}]", math.inf)
    return Check(name, bool(lo <= value <= hi), value, f"in [{lo:.6g}, {hi:.6g}]", max(lo - value, value - hi))


# -- shared runs ----------------------------------------------------------------

_RUNS: dict[str, tuple[RunResult, float]] = {}


def cached_run(cfg: Config) -> tuple[RunResult, float]:
    """Run (or reuse) ``cfg``; returns the result and its wall time."""
    key = dump_config(cfg)
    if key not in _RUNS:
        t0 = time.perf_counter()
        res = run(cfg)
        _RUNS[key] = (res, time.perf_counter() - t0)
    return _RUNS[key]


def every_step(cfg: Config) -> Config:
    return cfg.replace(output=OutputSpec(record_interval=0.0, snapshot_interval=0.0, out_dir=cfg.output.out_dir))


def standard_run(t_end: float = 1.0) -> Config:
    return every_step(standard_config(128, 128, t_end=t_end))


def no_rho(cfg: Config) -> Config:
    return cfg.replace(initial={k: v for k, v in cfg.initial.items() if k != "rho"})


def rayleigh_benard_run() -> Config:
    cfg = no_rho(standard_run(1.0))
    return cfg.replace(params=PhysParams(mu=1.0, mode="rayleigh_benard"))


def monotone_margin(series: list[DiagnosticsRecord], name: str) -> float:
    """Largest relative per-sample increase of a recorded quantity."""
    v = np.array([r[name] for r in series])
    if v.size < 2:
        return -math.inf
    scale = np.maximum(np.abs(v[:-1]), np.finfo(float).tiny)
    return float(np.max((v[1:] - v[:-1]) / scale))


def run_checks(res: RunResult, label: str) -> list[Check]:
    checks = [Check(f"{label}: run completed", res.ok, float(res.steps), "no step failure", 0.0 if res.ok else math.inf)]
    div = max(r["div_residual"] for r in res.records)
    checks.append(at_most(f"{label}: max divergence residual", div, STRICT))
    return checks


# -- test families --------------------------------------------------------------


def ol1_family(grid: Grid, z_dependent: bool = True):
    """Even, axis-vanishing test fields for the commutation identity."""
    r, z = grid.mesh()
    if z_dependent:
        values = r**2 * np.exp(-(r**2) - np.sin(2.0 * math.pi * z / grid.Lz) ** 2)
    else:
        values = r**2 * (1.0 - (r / grid.R) ** 2) ** 2
    return grid.field(values, Parity.EVEN)


def manufactured_stream(grid: Grid) -> dict[str, np.ndarray]:
    """``psi = r^2 (1 - r^2/R^2)^2 sin(2 pi z / Lz)`` and its derived fields.

    Returns the exact ``psi``, ``w`` (from the stream relation), ``ur``, ``uz``
    on cell centres, all computed from closed-form derivatives.
    """
    r, z = grid.mesh()
    R, k = grid.R, 2.0 * math.pi / grid.Lz
    q = (1.0 - (r / R) ** 2) ** 2
    dq = -4.0 * r / R**2 * (1.0 - (r / R) ** 2)
    d2q = -4.0 / R**2 * (1.0 - (r / R) ** 2) + 8.0 * r**2 / R**4
    s, c = np.sin(k * z), np.cos(k * z)
    psi = r**2 * q * s
    psi_r = (2.0 * r * q + r**2 * dq) * s
    psi_rr = (2.0 * q + 4.0 * r * dq + r**2 * d2q) * s
    psi_zz = -(k**2) * psi
    w = -(psi_rr - psi_r / r + psi_zz) / r
    return {"psi": psi, "w": w, "ur": -k * r * q * c, "uz": psi_r / r}


def l2_error(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    return math.sqrt(float(np.sum((a - b) ** 2 * grid.weights())))


def ratio_ladder(values: list[float]) -> list[float]:
    return [a / b for a, b in zip(values[:-1], values[1:])]


# -- suites ---------------------------------------------------------------------


def suite_max_principle() -> list[Check]:
    res, secs = cached_run(standard_run(1.0))
    mp = check_max_principle(res.records, "mhd_boussinesq", tol=STRICT)
    checks = run_checks(res, "128x128 t=1")
    checks.append(Check("sup bound of H and rho at every record", mp.passed, mp.worst_margin, "<= 1e-12", mp.worst_margin - STRICT))
    first = res.records[0]
    for name in ("H", "rho"):
        low = min(r[f"{name}_min"] for r in res.records)
        checks.append(at_least(f"{name} min stays above its initial min", low, first[f"{name}_min"] - STRICT))
    checks.append(at_most("runtime seconds", secs, 120.0))
    return checks


def suite_lp_monotone() -> list[Check]:
    res, _ = cached_run(standard_run(1.0))
    checks = run_checks(res, "128x128 t=1")
    for name in ("H_L1", "H_L2", "H_inf", "rho_L1", "rho_L2", "rho_inf"):
        checks.append(at_most(f"{name} relative increase per step", monotone_margin(res.records, name), STRICT))
    return checks


def suite_energy_bound() -> list[Check]:
    res, _ = cached_run(standard_run(2.0))
    eb = check_energy_bound(res.records)
    checks = run_checks(res, "128x128 t=2")
    checks.append(
        Check("linear-growth energy bound with 5% slack", eb.passed, eb.worst_margin, "<= 0", eb.worst_margin)
    )
    checks.append(at_least("fitted C0 of the (1+t)^2 form is finite", eb.details["C0"], 0.0))
    res0, _ = cached_run(no_rho(standard_run(2.0)))
    checks += run_checks(res0, "rho0=0 t=2")
    checks.append(at_most("rho0=0: ||(u,h)||_2 relative increase per step", monotone_margin(res0.records, "uh_L2"), STRICT))
    return checks


def suite_incompressibility() -> list[Check]:
    checks = []
    for label, cfg in (
        ("standard t=1", standard_run(1.0)),
        ("standard t=2", standard_run(2.0)),
        ("rho0=0 t=2", no_rho(standard_run(2.0))),
        ("rayleigh-benard t=1", rayleigh_benard_run()),
    ):
        res, _ = cached_run(cfg)
        checks += run_checks(res, label)
    return checks


def suite_ol1_identity() -> list[Check]:
    checks = []
    for label, zdep in (("z-dependent family", True), ("z-independent family", False)):
        R, Lz = (4.0, 8.0) if zdep else (2.0, 8.0)
        res = [identity_residual_OL1(ol1_family(build_grid(n, n, R, Lz), zdep)) for n in (64, 128)]
        checks.append(at_most(f"{label}: residual at 128^2", res[1], res[0]))
        checks.append(within(f"{label}: refinement ratio 64^2 -> 128^2", res[0] / res[1], 3.0, 5.0))
    return checks


def suite_biot_savart() -> list[Check]:
    errs = {"psi": [], "ur": [], "uz": [], "curl": []}
    for n in (32, 64, 128):
        g = build_grid(n, n, 4.0, 8.0)
        m = manufactured_stream(g)
        w = g.field(m["w"], Parity.ODD)
        ur, uz, psi = velocity_from_wtheta(w)
        errs["psi"].append(l2_error(psi.values, m["psi"], g))
        errs["ur"].append(l2_error(ur.values, m["ur"], g))
        errs["uz"].append(l2_error(uz.values, m["uz"], g))
        errs["curl"].append(l2_error(curl_theta(ur, uz).values, m["w"], g))
    checks = []
    for name, e in errs.items():
        r = ratio_ladder(e)
        checks.append(within(f"{name} error ratio 64^2 -> 128^2", r[-1], 3.0, 5.0))
    checks.append(within("psi recovery ratio 64^2 -> 128^2 (tight)", ratio_ladder(errs["psi"])[-1], 3.5, 4.5))
    checks += _manufactured_cz()
    return checks


def _manufactured_cz() -> list[Check]:
    g = build_grid(128, 128, 4.0, 8.0)
    w = g.field(manufactured_stream(g)["w"], Parity.ODD)
    state = make_state(0.0, w, g.zeros(Parity.EVEN), g.zeros(Parity.EVEN))
    ratio = cz_report(state)["grad_u_over_w_L2"]
    return [within("manufactured ||grad u||_2 / ||w||_2 at 128^2", ratio, 0.98, 1.02)]


def cz_family(grid: Grid) -> list:
    states = []
    for m in range(10):
        b = Bump(1.0 + 0.2 * m, 0.6 + 0.1 * m, 3.0 + 0.2 * m, 0.4 + 0.05 * m)
        w = bump_field(grid, [b], Parity.ODD)
        states.append(make_state(0.0, w, grid.zeros(Parity.EVEN), grid.zeros(Parity.EVEN)))
    return states


def suite_cz_ratios() -> list[Check]:
    checks = _manufactured_cz()
    coarse = [cz_report(s) for s in cz_family(build_grid(64, 64, 4.0, 8.0))]
    fine = [cz_report(s) for s in cz_family(build_grid(128, 128, 4.0, 8.0))]
    for key in ("grad_u_over_w_L4", "grad_ur_over_r_over_Omega_L2"):
        drift = max(abs(a[key] - b[key]) / abs(b[key]) for a, b in zip(coarse, fine))
        checks.append(at_most(f"{key}: max drift 64^2 -> 128^2 over 10 states", drift, 0.10))
    g = build_grid(64, 64, 4.0, 8.0)
    base = cz_family(g)[3]
    scaled = make_state(0.0, base.wtheta * 3.0, base.H, base.rho)
    a, b = cz_report(base), cz_report(scaled)
    homog = max(abs(a[k] - b[k]) / abs(a[k]) for k in a)
    checks.append(at_most("ratios unchanged under rescaling by 3", homog, 1e-12))
    return checks


def suite_lorentz_curl() -> list[Check]:
    res = []
    for n in (32, 64, 128):
        g = build_grid(n, n, 4.0, 8.0)
        res.append(lorentz_curl_residual(bump_field(g, [Bump(1.0, 0.8, 3.5, 0.6)], Parity.EVEN)))
    r = ratio_ladder(res)
    return [within("residual ratio 64^2 -> 128^2", r[-1], 3.0, 5.0), at_most("residual at 128^2", res[-1], res[-2])]


def diffusion_study_config() -> Config:
    return standard_config(
        32,
        32,
        params=PhysParams(mu=1.0, nu=0.5, kappa=0.5, physics="diffusion"),
        step=StepControl(cfl=0.5, dt_max=0.01, t_end=0.2, fixed_dt=0.01),
    )


def temporal_study_config() -> Config:
    return standard_config(64, 64, step=StepControl(cfl=0.5, dt_max=0.02, t_end=0.5, fixed_dt=0.02))


def suite_mms_convergence() -> list[Check]:
    diff = convergence_study(diffusion_study_config(), 3, "space", dt_power=2.0)
    adv = advection_mms_study(3, 64)
    tem = convergence_study(temporal_study_config(), 3, "time")
    return [
        at_least("diffusion-only spatial order (32..128, dt ~ h^2)", diff.observed_order(), 1.9),
        at_least("advection-only order vs exact characteristics (L1)", adv.observed_order("L1"), 0.9),
        at_least("advection-only order vs exact characteristics (L2)", adv.observed_order("L2"), 0.9),
        at_least("coupled split-step temporal order (64^2, dt/2, dt/4)", tem.observed_order(), 0.9),
    ]


def omega_residual_ladder() -> list[float]:
    out = []
    for n, dt in ((32, 0.02), (64, 0.01), (128, 0.005)):
        cfg = standard_config(n, n, step=StepControl(cfl=0.5, dt_max=dt, t_end=0.5, fixed_dt=dt))
        res, _ = cached_run(cfg.replace(output=OutputSpec(record_interval=0.5)))
        if not res.ok:
            raise RuntimeError(f"omega residual run {n}^2 failed: {res.error}")
        out.append(res.records[-1]["omega_residual"])
    return out


def suite_omega_envelope() -> list[Check]:
    cfg = standard_run(1.0)
    res, _ = cached_run(cfg)
    checks = run_checks(res, "128x128 t=1")
    fit = phi_fit(res.records, "Omega_L2", 1, cfg.diagnostics.c_cap)
    checks.append(at_most("phi_fit(Omega_L2, k=1) constant", fit.c, cfg.diagnostics.c_cap))
    t = np.array([r.t for r in res.records])
    q = np.array([r["Omega_L2"] for r in res.records])
    env = phi(t, 1, fit.c) if math.isfinite(fit.c) else np.full_like(t, math.inf)
    checks.append(at_most("data minus envelope, worst sample", float(np.max(q - env)), 0.0))
    r = ratio_ladder(omega_residual_ladder())
    for (a, b), ratio in zip(((32, 64), (64, 128)), r):
        checks.append(within(f"omega residual ratio {a}^2 -> {b}^2 (dt halved too)", ratio, 1.8, 4.4))
    return checks


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def suite_determinism() -> list[Check]:
    from threadpoolctl import threadpool_limits

    from .output import write_run

    cfg = standard_config(64, 64, t_end=0.5).replace(output=OutputSpec(record_interval=0.1, snapshot_interval=0.25))
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "a", Path(tmp) / "b"
        write_run(cfg, a)
        write_run(cfg, b)
        ta, tb = _tree_bytes(a), _tree_bytes(b)
    same = ta == tb
    checks = [Check("two runs give byte-identical output trees", same, float(len(ta)), "identical", 0.0 if same else 1.0)]
    with threadpool_limits(limits=1):
        one = run(cfg).records
    with threadpool_limits(limits=None):
        many = run(cfg).records
    worst = 0.0
    for x, y in zip(one, many):
        for u, v in zip(x.row(), y.row()):
            if u != v:
                worst = max(worst, abs(u - v) / max(abs(u), abs(v)))
    checks.append(at_most("thread-count variation, max relative difference", worst, 1e-13))
    return checks


def suite_rayleigh_benard() -> list[Check]:
    g = build_grid(32, 32, 4.0, 8.0)
    zero = make_state(0.0, g.zeros(Parity.ODD), g.zeros(Parity.EVEN), g.zeros(Parity.EVEN))
    s = zero
    params = PhysParams(mu=1.0, nu=0.5, kappa=0.5, mode="rayleigh_benard")
    for _ in range(10):
        s = step(s, params, 0.01)
    dev = max(float(np.max(np.abs(getattr(s, n).values))) for n in ("wtheta", "H", "rho", "ur", "uz", "psi"))
    checks = [at_most("zero state is a fixed point (max |field| after 10 steps)", dev, 0.0)]
    cfg = rayleigh_benard_run()
    res, _ = cached_run(cfg)
    checks += run_checks(res, "rayleigh-benard 128x128 t=1")
    checks.append(at_least("rho_inf at t=1 with rho0=0 (buoyancy source active)", res.records[-1]["rho_inf"], 1e-6))
    mp = check_max_principle(res.records, "rayleigh_benard", tol=STRICT)
    checks.append(Check("sup bound of H at every record", mp.passed, mp.worst_margin, "<= 1e-12", mp.worst_margin - STRICT))
    return checks


SUITES: dict[str, Callable[[], list[Check]]] = {
    "max-principle": suite_max_principle,
    "lp-monotone": suite_lp_monotone,
    "energy-bound": suite_energy_bound,
    "incompressibility": suite_incompressibility,
    "ol1-identity": suite_ol1_identity,
    "biot-savart": suite_biot_savart,
    "cz-ratios": suite_cz_ratios,
    "lorentz-curl": suite_lorentz_curl,
    "mms-convergence": suite_mms_convergence,
    "omega-envelope": suite_omega_envelope,
    "determinism": suite_determinism,
    "rayleigh-benard": suite_rayleigh_benard,
}


def run_suite(name: str) -> SuiteResult:
    """Run one named suite.

    Raises:
        KeyError: for an unknown suite name.
    """
    if name not in SUITES:
        raise KeyError(name)
    t0 = time.perf_counter()
    checks = SUITES[name]()
    return SuiteResult(name, checks, time.perf_counter() - t0)
