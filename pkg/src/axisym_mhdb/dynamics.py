"""Time integration of the swirl-free axisymmetric MHD-Boussinesq system.

One step (operator split, first order in time):

1. transport ``H`` and ``rho`` with donor-cell upwinding on the
   streamfunction face fluxes; in Rayleigh-Benard mode add ``dt u^z`` to
   ``rho`` afterwards;
2. ``w* = w + dt * rhs(state)`` with the explicit vorticity terms evaluated on
   the beginning-of-step state;
3. backward Euler for viscosity, ``(I - mu dt (Delta - 1/r^2)) w = w*``;
4. backward Euler for resistivity / diffusivity when ``nu`` / ``kappa > 0``;
5. velocity recovery for the new state.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional, Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord, omega_equation_residual, record
from .elliptic import DEFAULT_SOLVER, SolverError, SolverSettings, solve_helmholtz
from .fields import FaceFlow, PhysParams, State, make_state
from .grid import Grid, Parity, ScalarField, d_dr, d_dz

if TYPE_CHECKING:
    from .config import Config

__all__ = [
    "Bump",
    "CFLError",
    "StepControl",
    "RunResult",
    "bump_field",
    "initial_state",
    "cfl_timestep",
    "stable_timestep",
    "advect",
    "wtheta_explicit_rhs",
    "step",
    "run",
]


class CFLError(ValueError):
    """Transport step would not be a convex combination."""


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.5
    dt_max: float = 0.02
    t_end: float = 1.0
    fixed_dt: Optional[float] = None

    def __post_init__(self) -> None:
        if not (0 < self.cfl <= 1):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not (self.dt_max > 0 and math.isfinite(self.dt_max)):
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.fixed_dt is not None and not (self.fixed_dt > 0 and math.isfinite(self.fixed_dt)):
            raise ValueError(f"fixed_dt must be positive, got {self.fixed_dt}")


@dataclass(frozen=True)
class Bump:
    """Gaussian ring ``amplitude * g(r) * exp(-(z - z0)^2 / sigma^2)``.

    ``g`` is the even radial profile
    ``[e^{-(r-r0)^2/s^2} + e^{-(r+r0)^2/s^2}] / (1 + e^{-4 r0^2/s^2})``,
    multiplied by ``r`` for odd fields.
    """

    amplitude: float
    r0: float
    z0: float
    sigma: float

    def __post_init__(self) -> None:
        for name in ("amplitude", "r0", "z0", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"bump {name} must be finite")
        if self.sigma <= 0:
            raise ValueError(f"bump sigma must be positive, got {self.sigma}")
        if self.r0 < 0:
            raise ValueError(f"bump r0 must be >= 0, got {self.r0}")


def bump_field(grid: Grid, bumps: Sequence[Bump], parity: Parity) -> ScalarField:
    """Sum of parity-respecting Gaussian rings, periodised in ``z``."""
    r, z = grid.mesh()
    out = np.zeros(grid.shape)
    for b in bumps:
        s2 = b.sigma**2
        radial = (np.exp(-((r - b.r0) ** 2) / s2) + np.exp(-((r + b.r0) ** 2) / s2)) / (
            1.0 + math.exp(-4.0 * b.r0**2 / s2)
        )
        axial = sum(np.exp(-((z - b.z0 + k * grid.Lz) ** 2) / s2) for k in (-2, -1, 0, 1, 2))
        out += b.amplitude * radial * axial
    if parity is Parity.ODD:
        out *= r
    return ScalarField(grid, parity, out)


def initial_state(cfg: "Config") -> State:
    g = cfg.grid
    return make_state(
        0.0,
        bump_field(g, cfg.initial.get("wtheta", ()), Parity.ODD),
        bump_field(g, cfg.initial.get("H", ()), Parity.EVEN),
        bump_field(g, cfg.initial.get("rho", ()), Parity.EVEN),
        cfg.solver,
    )


def cfl_timestep(state: State, ctrl: StepControl) -> float:
    """``min(dt_max, cfl / max(|u^r|/dr + |u^z|/dz))`` over cell centres."""
    g = state.grid
    rate = float(np.max(np.abs(state.ur.values) / g.dr + np.abs(state.uz.values) / g.dz))
    if rate == 0.0:
        return ctrl.dt_max
    return min(ctrl.dt_max, ctrl.cfl / rate)


def stable_timestep(state: State, ctrl: StepControl) -> float:
    """:func:`cfl_timestep` further limited by the face-flux transport bound.

    Near the axis the finite-volume inflow rate can exceed the cell-centre
    estimate (the axis cell is half as wide as its outer face suggests).
    """
    rate = float(np.max(state.flow.inflow_rate()))
    dt = cfl_timestep(state, ctrl)
    if rate > 0.0:
        dt = min(dt, ctrl.cfl / rate)
    return dt


def advect(f: ScalarField, flow: FaceFlow, dt: float) -> ScalarField:
    """One forward-Euler donor-cell step of ``f_t + u.grad f = 0``.

    Advective form on face fluxes::

        f_i <- f_i + dt / V_i * sum_{inflow faces} |F| (f_nb - f_i)

    which is a convex combination whenever ``dt * inflow / V <= 1``, hence
    ``min f <= f_new <= max f``.  With solenoidal fluxes it also conserves
    ``int f`` and cannot increase any ``L^p`` norm.  The wall ghost is
    ``f[-1]`` (zero gradient) and the axis face carries no flux.

    Raises:
        CFLError: if the update would not be a convex combination.
    """
    if f.grid != flow.grid:
        raise ValueError("field and flow live on different grids")
    if not dt >= 0:
        raise ValueError("dt must be non-negative")
    c = dt * flow.inflow_rate()
    cmax = float(np.max(c))
    if cmax > 1.0 + 1e-12:
        raise CFLError(f"transport CFL number {cmax:.4f} exceeds 1")
    v = f.values
    fr, fz = flow.radial, flow.axial
    vol = flow.volumes
    acc = np.zeros_like(v)
    # inner radial face: inflow when fr[i] > 0, neighbour i-1 (axis face has fr = 0)
    inner = np.maximum(fr[:-1], 0.0)
    acc[1:] += inner[1:] * (v[:-1] - v[1:])
    # outer radial face: inflow when fr[i+1] < 0, neighbour i+1; wall ghost = v[-1]
    outer = np.maximum(-fr[1:], 0.0)
    acc[:-1] += outer[:-1] * (v[1:] - v[:-1])
    lower = np.maximum(np.roll(fz, 1, axis=1), 0.0)
    acc += lower * (np.roll(v, 1, axis=1) - v)
    upper = np.maximum(-fz, 0.0)
    acc += upper * (np.roll(v, -1, axis=1) - v)
    return ScalarField(f.grid, f.parity, v + (dt / vol) * acc)


def wtheta_explicit_rhs(state: State) -> ScalarField:
    """Advection, stretching, Lorentz and buoyancy terms of the ``w`` equation.

    ``-(u^r D_r + u^z D_z) w + (u^r / r) w - D_z(r H^2) - D_r rho``.
    """
    w = state.wtheta
    ur, uz = state.ur, state.uz
    transport = ur * d_dr(w) + uz * d_dz(w)
    stretch = ScalarField(state.grid, Parity.EVEN, ur.values / state.grid.r[:, None]) * w
    lorentz = d_dz((state.H * state.H).times_r())
    return stretch - transport - lorentz - d_dr(state.rho)


def step(state: State, params: PhysParams, dt: float, settings: SolverSettings = DEFAULT_SOLVER) -> State:
    """Advance ``state`` by ``dt`` (see the module docstring for the split).

    Deterministic: identical inputs give bit-identical outputs.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    w, H, rho = state.wtheta, state.H, state.rho
    if params.physics != "diffusion":
        H = advect(H, state.flow, dt)
        rho = advect(rho, state.flow, dt)
        if params.mode == "rayleigh_benard" and params.physics == "full":
            rho = rho + state.uz * dt
    if params.physics == "full":
        w = w + wtheta_explicit_rhs(state) * dt
    if params.physics != "advection":
        if params.mu > 0:
            w = solve_helmholtz("helmholtz_vort", params.mu * dt, w, settings)
        if params.nu > 0:
            H = solve_helmholtz("helmholtz5", params.nu * dt, H, settings)
        if params.kappa > 0:
            rho = solve_helmholtz("helmholtz_flat", params.kappa * dt, rho, settings)
    return make_state(state.t + dt, w, H, rho, settings)


# -- run loop -----------------------------------------------------------------


@dataclass
class RunResult:
    records: list[DiagnosticsRecord]
    final: State
    steps: int
    snapshot_times: list[float]
    error: Optional[BaseException] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _next_mark(t: float, interval: float, t_end: float) -> float:
    if interval <= 0:
        return t_end
    k = math.floor(t / interval + 1e-9) + 1
    return min(k * interval, t_end)


def run(
    cfg: "Config",
    on_record: Optional[Callable[[DiagnosticsRecord], None]] = None,
    on_snapshot: Optional[Callable[[State], None]] = None,
    state: Optional[State] = None,
) -> RunResult:
    """Integrate ``cfg`` to ``t_end``.

    Records are taken at ``t = 0``, at every multiple of ``record_interval``
    (after every step when the interval is 0) and at ``t_end``; snapshots at
    ``t = 0``, multiples of ``snapshot_interval`` and ``t_end``.  Steps are
    clipped to land exactly on those times.  A failing step ends the run with
    the error stored on the result; everything emitted so far stands.
    """
    ctrl = cfg.step
    out = cfg.output
    state = initial_state(cfg) if state is None else state
    warn = cfg.diagnostics.boundary_warn
    rec = record(state, settings=cfg.solver, boundary_warn=warn)
    first = rec
    records = [rec]
    snaps = [state.t]
    if on_record:
        on_record(rec)
    if on_snapshot:
        on_snapshot(state)

    t_end = ctrl.t_end
    nsteps = 0
    error: Optional[BaseException] = None
    while state.t < t_end:
        t = state.t
        next_rec = _next_mark(t, out.record_interval, t_end)
        next_snap = _next_mark(t, out.snapshot_interval, t_end)
        target = min(next_rec, next_snap)
        try:
            dt = ctrl.fixed_dt if ctrl.fixed_dt is not None else stable_timestep(state, ctrl)
            landed = t + dt >= target - 1e-12 * max(1.0, abs(target))
            if landed:
                dt = target - t
            new = step(state, cfg.params, dt, cfg.solver)
        except (SolverError, CFLError, FloatingPointError, ValueError) as exc:
            error = exc
            break
        if landed:
            new = dataclasses.replace(new, t=target)
        nsteps += 1
        if landed and new.t == next_rec or out.record_interval <= 0 or new.t == t_end:
            res = omega_equation_residual(state, new)
            rec = record(
                new,
                prev=rec,
                initial=first,
                omega_residual=res,
                settings=cfg.solver,
                boundary_warn=warn,
            )
            if rec["boundary_ring"] > warn:
                warn = math.inf  # warn once per run
            records.append(rec)
            if on_record:
                on_record(rec)
        if landed and new.t == next_snap:
            snaps.append(new.t)
            if on_snapshot:
                on_snapshot(new)
        state = new
    return RunResult(records, state, nsteps, snaps, error)
