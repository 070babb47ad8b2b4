"""Self-refinement convergence studies.

Each level runs the same configuration on a grid refined by ``2^l`` (space
studies) or with the time step halved ``l`` times (time studies).  Solutions
of neighbouring levels are compared on the coarser grid after restriction,
and the observed order is ``log2(e_l / e_{l+1})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import Config, OutputSpec
from .dynamics import StepControl, initial_state, run, stable_timestep
from .fields import State
from .grid import Grid

__all__ = [
    "MAX_CELLS",
    "ConvergenceError",
    "ConvergenceReport",
    "restrict",
    "convergence_study",
    "advection_mms_study",
]

MAX_CELLS = 2048 * 2048
FIELDS = ("wtheta", "H", "rho")


class ConvergenceError(ValueError):
    """Bad study parameters (too few levels, too many cells)."""


def restrict(values: np.ndarray, fine: Grid) -> np.ndarray:
    """Map a fine-grid array onto the grid coarsened by 2.

    Radially the two children are averaged with weights ``r`` (cell-volume
    average); axially the nodes ``z = j dz`` nest, so the standard
    ``(1/4, 1/2, 1/4)`` full weighting is used.
    """
    if fine.nr % 2 or fine.nz % 2:
        raise ConvergenceError("restriction needs even nr and nz")
    r = fine.r[:, None]
    wv = values * r
    radial = (wv[0::2] + wv[1::2]) / (r[0::2] + r[1::2])
    return 0.25 * np.roll(radial, 1, axis=1)[:, 0::2] + 0.5 * radial[:, 0::2] + 0.25 * radial[:, 1::2]


@dataclass
class ConvergenceReport:
    vary: str
    levels: list[dict]
    errors: list[dict]
    orders: list[dict]
    notes: list[str] = field(default_factory=list)

    def observed_order(self, name: str = "combined") -> Optional[float]:
        """Order from the two finest levels (``None`` if undefined)."""
        if not self.orders:
            return None
        return self.orders[-1].get(name)

    def as_dict(self) -> dict:
        return {"vary": self.vary, "levels": self.levels, "errors": self.errors, "orders": self.orders, "notes": self.notes}

    def table(self) -> str:
        lines = [f"convergence study ({self.vary})"]
        for lv in self.levels:
            lines.append(f"  level {lv['level']}: {lv['nr']}x{lv['nz']}, dt={lv['dt']:.6g}, steps={lv['steps']}")
        for e, o in zip(self.errors, [None] + self.orders):
            txt = ", ".join(f"{k}={v:.4e}" for k, v in e.items() if k != "pair")
            if o is not None:
                txt += "; order " + ", ".join(f"{k}={'n/a' if v is None else format(v, '.3f')}" for k, v in o.items())
            lines.append(f"  {e['pair'][0]} vs {e['pair'][1]}: {txt}")
        return "\n".join(lines)


def _base_dt(cfg: Config) -> float:
    if cfg.step.fixed_dt is not None:
        return cfg.step.fixed_dt
    return stable_timestep(initial_state(cfg), cfg.step)


def _fit_dt(dt: float, t_end: float) -> float:
    """Largest ``dt' <= dt`` dividing ``t_end`` into whole steps."""
    if t_end <= 0:
        return dt
    return t_end / math.ceil(t_end / dt - 1e-9)


def convergence_study(cfg: Config, levels: int, vary: str = "space", dt_power: float = 1.0) -> ConvergenceReport:
    """Run the refinement ladder described in the module docstring.

    Args:
        cfg: base (coarsest) configuration.
        levels: number of levels, at least 2.
        vary: ``"space"`` refines the grid by 2 per level with
            ``dt ~ h^dt_power``; ``"time"`` keeps the grid and halves ``dt``.
        dt_power: time-step scaling exponent for space studies (use 2 for
            diffusion-dominated problems, 1 for transport).

    Raises:
        ConvergenceError: for ``levels < 2``, an unknown ``vary`` or a ladder
            whose finest grid exceeds ``MAX_CELLS``.
        RuntimeError: if a level's run fails.
    """
    if int(levels) != levels or levels < 2:
        raise ConvergenceError(f"a convergence study needs levels >= 2, got {levels}")
    if vary not in ("space", "time"):
        raise ConvergenceError(f"vary must be 'space' or 'time', got {vary!r}")
    if not dt_power > 0:
        raise ConvergenceError("dt_power must be positive")
    g0 = cfg.grid
    top = 2 ** (levels - 1) if vary == "space" else 1
    cells = g0.nr * g0.nz * top * top
    if cells > MAX_CELLS:
        raise ConvergenceError(f"finest level has {cells} cells, above the limit of {MAX_CELLS} (2048^2)")

    t_end = cfg.step.t_end
    dt0 = _base_dt(cfg)
    results: list[State] = []
    meta = []
    for lev in range(levels):
        if vary == "space":
            f = 2**lev
            grid = (g0.nr * f, g0.nz * f)
            dt = _fit_dt(dt0 / f**dt_power, t_end)
        else:
            grid = (g0.nr, g0.nz)
            dt = _fit_dt(dt0, t_end) / 2**lev
        step = StepControl(cfl=1.0, dt_max=dt, t_end=t_end, fixed_dt=dt)
        # only the final state matters; record at the ends only
        output = OutputSpec(record_interval=t_end, snapshot_interval=0.0, out_dir=cfg.output.out_dir)
        res = run(cfg.replace(grid=grid, step=step, output=output))
        if not res.ok:
            raise RuntimeError(f"level {lev} failed: {res.error}")
        results.append(res.final)
        meta.append({"level": lev, "nr": grid[0], "nz": grid[1], "dt": dt, "steps": res.steps})

    errors = []
    for lev in range(levels - 1):
        coarse, fine = results[lev], results[lev + 1]
        e = {"pair": [lev, lev + 1]}
        total = 0.0
        weights = coarse.grid.weights()
        for name in FIELDS:
            a = getattr(coarse, name).values
            b = getattr(fine, name).values
            if vary == "space":
                b = restrict(b, fine.grid)
            err = math.sqrt(float(np.sum((a - b) ** 2 * weights)))
            e[name] = err
            total += err * err
        e["combined"] = math.sqrt(total)
        errors.append(e)

    orders = []
    for lev in range(len(errors) - 1):
        o = {}
        for name in FIELDS + ("combined",):
            a, b = errors[lev][name], errors[lev + 1][name]
            o[name] = math.log2(a / b) if a > 0 and b > 0 else None
        orders.append(o)
    notes = []
    if len(errors) < 2:
        notes.append("two levels give one error and no observed order; use levels >= 3")
    return ConvergenceReport(vary, meta, errors, orders, notes)



# -- manufactured transport problem -------------------------------------------

_MMS_R, _MMS_LZ, _MMS_AMP = 2.0, 4.0, 0.5


def _mms_psi(r: np.ndarray, z: np.ndarray) -> np.ndarray:
    k = 2.0 * math.pi / _MMS_LZ
    return _MMS_AMP * r**2 * (1.0 - (r / _MMS_R) ** 2) ** 2 * np.sin(k * z)


def _mms_velocity(_t: float, y: np.ndarray) -> np.ndarray:
    n = y.size // 2
    r, z = y[:n], y[n:]
    k = 2.0 * math.pi / _MMS_LZ
    q = (1.0 - (r / _MMS_R) ** 2) ** 2
    dq = -4.0 * r / _MMS_R**2 * (1.0 - (r / _MMS_R) ** 2)
    ur = -_MMS_AMP * k * r * q * np.cos(k * z)
    uz = _MMS_AMP * (2.0 * q + r * dq) * np.sin(k * z)
    return np.concatenate([ur, uz])


def _mms_profile(r: np.ndarray, z: np.ndarray) -> np.ndarray:
    # even-extended Gaussian ring
    s2 = 0.3**2
    return np.exp(-((r - 1.0) ** 2 + (z - 1.5) ** 2) / s2) + np.exp(-((r + 1.0) ** 2 + (z - 1.5) ** 2) / s2)


def advection_mms_study(levels: int = 3, n0: int = 64, t_end: float = 0.5, cfl: float = 0.5) -> ConvergenceReport:
    """Transport-only convergence against the exact solution.

    A Gaussian ring is carried by the steady flow with streamfunction
    ``0.5 r^2 (1 - r^2/4)^2 sin(pi z / 2)`` on ``R = 2``, ``Lz = 4``.  The
    exact solution is the initial profile at the foot of each characteristic,
    traced backwards with an 8th-order Runge-Kutta integrator.  Grids are
    ``n/2 x n`` with ``n = n0 2^l`` (square cells) and ``dt ~ h``.
    """
    from scipy.integrate import solve_ivp

    from .dynamics import advect
    from .fields import FaceFlow
    from .grid import Parity, build_grid

    if int(levels) != levels or levels < 2:
        raise ConvergenceError(f"a convergence study needs levels >= 2, got {levels}")
    top = n0 * 2 ** (levels - 1)
    if top * top // 2 > MAX_CELLS:
        raise ConvergenceError(f"finest level exceeds the limit of {MAX_CELLS} cells")
    meta, errors = [], []
    for lev in range(levels):
        n = n0 * 2**lev
        g = build_grid(n // 2, n, _MMS_R, _MMS_LZ)
        r, z = g.mesh()
        flow = FaceFlow.from_streamfunction(g.field(_mms_psi(r, z), Parity.EVEN))
        steps = math.ceil(t_end * float(np.max(flow.inflow_rate())) / cfl)
        dt = t_end / steps
        f = g.field(_mms_profile(r, z), Parity.EVEN)
        for _ in range(steps):
            f = advect(f, flow, dt)
        sol = solve_ivp(
            _mms_velocity, (t_end, 0.0), np.concatenate([r.ravel(), z.ravel()]), method="DOP853", rtol=1e-11, atol=1e-12
        )
        foot = sol.y[:, -1]
        exact = _mms_profile(foot[: r.size], foot[r.size :]).reshape(g.shape)
        d = np.abs(f.values - exact)
        w = g.weights()
        errors.append({"pair": [lev, "exact"], "L1": float(np.sum(d * w)), "L2": math.sqrt(float(np.sum(d * d * w)))})
        meta.append({"level": lev, "nr": g.nr, "nz": g.nz, "dt": dt, "steps": steps})
    orders = [
        {name: math.log2(a[name] / b[name]) for name in ("L1", "L2")} for a, b in zip(errors[:-1], errors[1:])
    ]
    return ConvergenceReport("advection-mms", meta, errors, orders)
