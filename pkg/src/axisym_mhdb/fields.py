"""Simulation state, velocity recovery and pointwise vector-calculus identities."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .elliptic import DEFAULT_SOLVER, SolverSettings, solve_stream
from .grid import Grid, Parity, ScalarField, build_grid, d_dr, d_dz, div_axis, lp_norm, over_r

__all__ = [
    "MODES",
    "PHYSICS",
    "PhysParams",
    "FaceFlow",
    "State",
    "make_state",
    "velocity_from_wtheta",
    "divergence",
    "divergence_residual",
    "curl_theta",
    "lorentz_curl_residual",
    "write_snapshot",
    "read_snapshot",
    "state_from_snapshot",
]

MODES = ("mhd_boussinesq", "rayleigh_benard")
PHYSICS = ("full", "diffusion", "advection")


@dataclass(frozen=True)
class PhysParams:
    """Viscosity, resistivity, diffusivity and model variant.

    ``physics`` restricts the step to a sub-problem for verification:
    ``"diffusion"`` keeps only the implicit solves, ``"advection"`` only the
    transport of ``H`` and ``rho`` by the (frozen) flow.
    """

    mu: float = 1.0
    nu: float = 0.0
    kappa: float = 0.0
    mode: str = "mhd_boussinesq"
    physics: str = "full"

    def __post_init__(self) -> None:
        for name in ("mu", "nu", "kappa"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.physics not in PHYSICS:
            raise ValueError(f"physics must be one of {PHYSICS}, got {self.physics!r}")


@dataclass(frozen=True)
class FaceFlow:
    """Volume fluxes (per radian) through cell faces.

    ``radial[i, j]`` crosses the face ``r = i dr`` of row ``j`` (shape
    ``(nr + 1, nz)``), ``axial[i, j]`` the face between rows ``j`` and
    ``j + 1`` of column ``i`` (shape ``(nr, nz)``).  Positive means towards
    larger ``r`` / ``z``.
    """

    grid: Grid
    radial: np.ndarray
    axial: np.ndarray

    @property
    def volumes(self) -> np.ndarray:
        g = self.grid
        return (g.r * g.dr * g.dz)[:, None]

    @classmethod
    def from_streamfunction(cls, psi: ScalarField) -> "FaceFlow":
        """Fluxes as differences of corner streamfunction values.

        Corners take ``r_c^2`` times the average of ``psi / r^2`` over the
        four adjacent cells, which is exact for the ``r^2`` axis behaviour.
        The fluxes telescope, so every cell balance is zero to round-off.
        """
        g = psi.grid
        phi = psi.values / g.r[:, None] ** 2
        faces = np.empty((g.nr + 1, g.nz))
        faces[0] = 0.0
        faces[1:-1] = 0.5 * (phi[:-1] + phi[1:])
        faces[-1] = 0.0  # psi = 0 on the wall
        corners = 0.5 * (faces + np.roll(faces, -1, axis=1)) * g.r_faces[:, None] ** 2
        radial = -(corners - np.roll(corners, 1, axis=1))
        axial = corners[1:] - corners[:-1]
        return cls(g, radial, axial)

    @classmethod
    def from_cell_velocity(cls, ur: ScalarField, uz: ScalarField) -> "FaceFlow":
        """Fluxes from cell-centred velocities by face averaging.

        Not discretely solenoidal in general; transport stays bounded, but
        ``L^p`` monotonicity needs :meth:`from_streamfunction`.
        """
        g = ur.grid
        u = ur.values
        face_u = np.empty((g.nr + 1, g.nz))
        face_u[0] = 0.0
        face_u[1:-1] = 0.5 * (u[:-1] + u[1:])
        face_u[-1] = 1.5 * u[-1] - 0.5 * u[-2]
        radial = face_u * (g.r_faces[:, None] * g.dz)
        w = uz.values
        axial = 0.5 * (w + np.roll(w, -1, axis=1)) * (g.r * g.dr)[:, None]
        return cls(g, radial, axial)

    def inflow_rate(self) -> np.ndarray:
        """Sum of inflowing fluxes divided by cell volume (per unit time)."""
        fr, fz = self.radial, self.axial
        inflow = np.maximum(fr[:-1], 0.0) + np.maximum(-fr[1:], 0.0)
        inflow += np.maximum(np.roll(fz, 1, axis=1), 0.0) + np.maximum(-fz, 0.0)
        return inflow / self.volumes

    def net_outflow(self) -> np.ndarray:
        """Discrete divergence times volume; zero for solenoidal fluxes."""
        return self.radial[1:] - self.radial[:-1] + self.axial - np.roll(self.axial, 1, axis=1)


def velocity_from_wtheta(
    w: ScalarField, settings: SolverSettings = DEFAULT_SOLVER
) -> tuple[ScalarField, ScalarField, ScalarField]:
    """Recover ``(u^r, u^z, psi)`` from the azimuthal vorticity.

    ``u^r = -D_z psi / r`` and ``u^z = D_r psi / r`` with the centred
    stencils, so :func:`divergence` cancels exactly (the stencils commute).
    """
    if w.parity is not Parity.ODD:
        raise ValueError("w_theta must be odd")
    psi = solve_stream(w, settings)
    ur = ScalarField(w.grid, Parity.ODD, -over_r(d_dz(psi).values, w.grid))
    uz = div_axis(d_dr(psi))
    return ur, uz, psi


def _check_velocity(ur: ScalarField, uz: ScalarField) -> None:
    if ur.parity is not Parity.ODD or uz.parity is not Parity.EVEN:
        raise ValueError("velocity must have parities (u^r odd, u^z even)")


def divergence(ur: ScalarField, uz: ScalarField) -> ScalarField:
    """``(1/r) D_r(r u^r) + D_z u^z``."""
    _check_velocity(ur, uz)
    return div_axis(d_dr(ur.times_r())) + d_dz(uz)


def divergence_residual(ur: ScalarField, uz: ScalarField) -> float:
    """``max |div u|`` relative to the largest of its two terms (0 for u = 0)."""
    _check_velocity(ur, uz)
    a = div_axis(d_dr(ur.times_r())).values
    b = d_dz(uz).values
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a + b))) / scale


def curl_theta(ur: ScalarField, uz: ScalarField) -> ScalarField:
    """``w^theta = D_z u^r - D_r u^z``."""
    _check_velocity(ur, uz)
    return d_dz(ur) - d_dr(uz)


def lorentz_curl_residual(H: ScalarField) -> float:
    """Compare the two equal forms of the azimuthal Lorentz source.

    ``-2 H D_z(r H)`` against ``-D_z(H * r H)``; they differ only by the
    discrete product rule.  Normalised by ``max(1, ||H||_2^2)``.
    """
    if H.parity is not Parity.EVEN:
        raise ValueError("H must be even")
    h = H.times_r()
    a = -2.0 * (H * d_dz(h))
    b = -d_dz(H * h)
    return lp_norm(a - b, 2) / max(1.0, lp_norm(H, 2) ** 2)


@dataclass(frozen=True)
class State:
    """Evolved fields ``(w, H, rho)`` at time ``t`` plus the derived cache.

    Build instances through :func:`make_state`, which is the only place the
    cache is computed.
    """

    t: float
    wtheta: ScalarField
    H: ScalarField
    rho: ScalarField
    psi: ScalarField
    ur: ScalarField
    uz: ScalarField
    flow: FaceFlow

    @property
    def grid(self) -> Grid:
        return self.wtheta.grid

    @property
    def cache_valid(self) -> bool:
        return True

    @property
    def htheta(self) -> ScalarField:
        return self.H.times_r()

    @property
    def Omega(self) -> ScalarField:
        return div_axis(self.wtheta)


def make_state(
    t: float,
    wtheta: ScalarField,
    H: ScalarField,
    rho: ScalarField,
    settings: SolverSettings = DEFAULT_SOLVER,
) -> State:
    """Assemble a :class:`State`, recovering the velocity from ``wtheta``."""
    if wtheta.parity is not Parity.ODD:
        raise ValueError("w_theta must be odd")
    if H.parity is not Parity.EVEN or rho.parity is not Parity.EVEN:
        raise ValueError("H and rho must be even")
    if not (wtheta.grid == H.grid == rho.grid):
        raise ValueError("fields live on different grids")
    ur, uz, psi = velocity_from_wtheta(wtheta, settings)
    return State(float(t), wtheta, H, rho, psi, ur, uz, FaceFlow.from_streamfunction(psi))


# -- snapshot files -----------------------------------------------------------

SNAPSHOT_MAGIC = "AXMHDB-FLD"
SNAPSHOT_VERSION = 1
SNAPSHOT_ARRAYS = ("wtheta", "H", "rho", "ur", "uz", "psi")


def write_snapshot(path: str | Path, state: State) -> None:
    """Write one snapshot.

    One ASCII header line, then the arrays back to back as little-endian
    float64 with ``i`` (radial index) varying fastest.  Header example::

        AXMHDB-FLD 1 nr=64 nz=64 R=4 Lz=8 t=0.5 dtype=<f8 order=i-fastest \
arrays=wtheta@0,H@32768,...

    Offsets are bytes from the first byte after the header newline.
    """
    g = state.grid
    nbytes = g.nr * g.nz * 8
    arrays = {
        "wtheta": state.wtheta.values,
        "H": state.H.values,
        "rho": state.rho.values,
        "ur": state.ur.values,
        "uz": state.uz.values,
        "psi": state.psi.values,
    }
    spec = ",".join(f"{name}@{k * nbytes}" for k, name in enumerate(SNAPSHOT_ARRAYS))
    header = (
        f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} nr={g.nr} nz={g.nz} R={g.R!r} Lz={g.Lz!r} "
        f"t={state.t!r} dtype=<f8 order=i-fastest arrays={spec}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for name in SNAPSHOT_ARRAYS:
            fh.write(np.ascontiguousarray(arrays[name].T, dtype="<f8").tobytes())


_HEADER_RE = re.compile(r"(\w+)=(\S+)")


def read_snapshot(path: str | Path) -> tuple[Grid, float, dict[str, np.ndarray]]:
    """Read a snapshot written by :func:`write_snapshot`."""
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    header = data[:nl].decode("ascii")
    parts = header.split()
    if len(parts) < 2 or parts[0] != SNAPSHOT_MAGIC or int(parts[1]) != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: not a version {SNAPSHOT_VERSION} snapshot")
    meta = dict(_HEADER_RE.findall(header))
    if meta.get("dtype") != "<f8" or meta.get("order") != "i-fastest":
        raise ValueError(f"{path}: unsupported layout")
    grid = build_grid(int(meta["nr"]), int(meta["nz"]), float(meta["R"]), float(meta["Lz"]))
    body = data[nl + 1 :]
    n = grid.nr * grid.nz
    arrays = {}
    for item in meta["arrays"].split(","):
        name, off = item.split("@")
        off = int(off)
        flat = np.frombuffer(body, dtype="<f8", count=n, offset=off)
        arrays[name] = flat.reshape(grid.nz, grid.nr).T.astype(np.float64)
    return grid, float(meta["t"]), arrays


def state_from_snapshot(path: str | Path, settings: SolverSettings = DEFAULT_SOLVER) -> State:
    """Rebuild a :class:`State` from the evolved arrays of a snapshot."""
    grid, t, a = read_snapshot(path)
    return make_state(
        t,
        ScalarField(grid, Parity.ODD, a["wtheta"]),
        ScalarField(grid, Parity.EVEN, a["H"]),
        ScalarField(grid, Parity.EVEN, a["rho"]),
        settings,
    )
