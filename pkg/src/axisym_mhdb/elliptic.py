"""Inverse-operator solves on the cylindrical grid.

Every axis-singular operator in the model is reduced to a single kernel, the
finite-volume axisymmetric Laplacian with radial weight ``r^m``::

    L_m f = r^-m d_r(r^m d_r f) + d_zz f        (m = 1: 3D, m = 3: "5D")

discretised conservatively (face weights ``r_{i+1/2}^m``, cell weights
``int r^m dr``), so the axis face carries zero flux, ``W L_m`` is symmetric
and ``L_m`` is an M-matrix.  The outer wall is homogeneous Dirichlet (ghost
``-f``), ``z`` is periodic.  The other operators are conjugations of ``L_3``::

    stream:  d_rr - (1/r) d_r + d_zz  =  r^2 L_3 r^-2     (psi = r^2 phi)
    vort:    Delta - 1/r^2            =  r   L_3 r^-1     (w   = r Omega)

Solves diagonalise the periodic direction with a real FFT and run a batched
tridiagonal (Thomas) elimination in ``r`` for all axial modes at once.  A few
passes of iterative refinement enforce the residual contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, Parity, ScalarField, d_dr, d_dz, div_axis, lp_norm, over_r

__all__ = [
    "SolverError",
    "SolverSettings",
    "DEFAULT_SOLVER",
    "OPERATOR_TAGS",
    "apply_operator",
    "solve_stream",
    "solve_laplace5",
    "solve_helmholtz",
    "op_ML",
    "op_ML_tilde",
    "identity_residual_OL1",
    "ol1_terms",
]

OPERATOR_TAGS = ("stream", "laplace5", "helmholtz_vort", "helmholtz5", "helmholtz_flat")


class SolverError(RuntimeError):
    """An elliptic solve missed its residual target."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = 1e-10
    max_iter: int = 4

    def __post_init__(self) -> None:
        if not (0.0 < self.tolerance <= 1e-6):
            raise ValueError(f"solver tolerance must lie in (0, 1e-6], got {self.tolerance}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"solver max_iter must be a positive integer, got {self.max_iter}")


DEFAULT_SOLVER = SolverSettings()


def _radial_stencil(grid: Grid, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rf = grid.r_faces
    w = (rf[1:] ** (m + 1) - rf[:-1] ** (m + 1)) / (m + 1)
    lower = rf[:-1] ** m / (grid.dr * w)
    upper = rf[1:] ** m / (grid.dr * w)
    diag = -(lower + upper)
    # Dirichlet wall: ghost value -f[n-1]
    diag[-1] -= upper[-1]
    return lower, diag, upper


def apply_radial_laplacian(values: np.ndarray, grid: Grid, m: int) -> np.ndarray:
    """Apply ``L_m`` to a raw array of cell values."""
    lower, diag, upper = _radial_stencil(grid, m)
    out = diag[:, None] * values
    out[1:] += lower[1:, None] * values[:-1]
    out[:-1] += upper[:-1, None] * values[1:]
    out += (np.roll(values, 1, axis=1) + np.roll(values, -1, axis=1) - 2.0 * values) / grid.dz**2
    return out


def _solve_shifted(b: np.ndarray, grid: Grid, m: int, alpha: float, beta: float) -> np.ndarray:
    """Direct solve of ``(alpha + beta L_m) x = b``."""
    lower, diag, upper = _radial_stencil(grid, m)
    nr, nz = grid.shape
    bh = np.fft.rfft(b, axis=1)
    k = np.arange(bh.shape[1])
    sig = -4.0 / grid.dz**2 * np.sin(math.pi * k / nz) ** 2
    d = alpha + beta * (diag[:, None] + sig[None, :])
    a = beta * lower  # a[i] couples row i to i-1
    c = beta * upper  # c[i] couples row i to i+1

    cp = np.empty((nr, bh.shape[1]))
    dp = np.empty_like(bh)
    cp[0] = c[0] / d[0]
    dp[0] = bh[0] / d[0]
    for i in range(1, nr):
        denom = d[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / denom
        dp[i] = (bh[i] - a[i] * dp[i - 1]) / denom
    xh = np.empty_like(bh)
    xh[-1] = dp[-1]
    for i in range(nr - 2, -1, -1):
        xh[i] = dp[i] - cp[i] * xh[i + 1]
    return np.fft.irfft(xh, n=nz, axis=1)


@dataclass(frozen=True)
class _Operator:
    """``A x = r^s (alpha + beta L_m)(r^-s x)``."""

    grid: Grid
    m: int
    alpha: float
    beta: float
    s: int

    def _rpow(self) -> np.ndarray:
        return self.grid.r[:, None] ** self.s

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.s == 0:
            y = x
        else:
            y = x / self._rpow()
        out = self.beta * apply_radial_laplacian(y, self.grid, self.m)
        if self.alpha:
            out += self.alpha * y
        return out if self.s == 0 else out * self._rpow()

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.s == 0:
            return _solve_shifted(b, self.grid, self.m, self.alpha, self.beta)
        rp = self._rpow()
        return rp * _solve_shifted(b / rp, self.grid, self.m, self.alpha, self.beta)


def _operator(tag: str, grid: Grid, lam: float = 0.0) -> _Operator:
    if tag == "stream":
        return _Operator(grid, 3, 0.0, 1.0, 2)
    if tag == "laplace5":
        return _Operator(grid, 3, 0.0, 1.0, 0)
    if tag == "helmholtz_vort":
        return _Operator(grid, 3, 1.0, -lam, 1)
    if tag == "helmholtz5":
        return _Operator(grid, 3, 1.0, -lam, 0)
    if tag == "helmholtz_flat":
        return _Operator(grid, 1, 1.0, -lam, 0)
    raise ValueError(f"unknown operator tag {tag!r}; expected one of {OPERATOR_TAGS}")


def apply_operator(tag: str, x: ScalarField, lam: float = 0.0) -> np.ndarray:
    """Apply the discrete operator behind ``tag`` (``I - lam Op`` for Helmholtz tags)."""
    return _operator(tag, x.grid, lam).apply(x.values)


def _residual_solve(op: _Operator, b: np.ndarray, settings: SolverSettings, what: str) -> np.ndarray:
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b)
    x = op.solve(b)
    rel = math.inf
    for _ in range(settings.max_iter):
        res = b - op.apply(x)
        rel = float(np.linalg.norm(res)) / bnorm
        if rel <= settings.tolerance:
            return x
        x = x + op.solve(res)
    res = b - op.apply(x)
    rel = float(np.linalg.norm(res)) / bnorm
    if rel <= settings.tolerance:
        return x
    raise SolverError(f"{what} solve did not reach tolerance {settings.tolerance:g}", rel)


_RHS_PARITY = {
    "stream": Parity.ODD,
    "laplace5": Parity.EVEN,
    "helmholtz_vort": Parity.ODD,
    "helmholtz5": Parity.EVEN,
    "helmholtz_flat": Parity.EVEN,
}


def _expect(f: ScalarField, parity: Parity, what: str) -> None:
    if f.parity is not parity:
        raise ValueError(f"{what} needs a {parity.name.lower()} field, got {f.parity.name.lower()}")


def solve_stream(w: ScalarField, settings: SolverSettings = DEFAULT_SOLVER) -> ScalarField:
    """Streamfunction ``psi`` with ``(d_rr - d_r/r + d_zz) psi = -r w``.

    ``psi = 0`` at ``r = R``; near the axis ``psi ~ r^2`` by construction.
    """
    _expect(w, Parity.ODD, "solve_stream")
    op = _operator("stream", w.grid)
    b = -w.values * w.grid.r[:, None]
    return ScalarField(w.grid, Parity.EVEN, _residual_solve(op, b, settings, "stream"))


def solve_laplace5(rhs: ScalarField, settings: SolverSettings = DEFAULT_SOLVER) -> ScalarField:
    """Solve ``(d_rr + (3/r) d_r + d_zz) g = rhs`` with ``g(R) = 0``."""
    _expect(rhs, Parity.EVEN, "solve_laplace5")
    return ScalarField(rhs.grid, Parity.EVEN, _solve5(rhs.values, rhs.grid, settings))


def _solve5(values: np.ndarray, grid: Grid, settings: SolverSettings) -> np.ndarray:
    return _residual_solve(_operator("laplace5", grid), values, settings, "laplace5")


def solve_helmholtz(
    tag: str, lam: float, rhs: ScalarField, settings: SolverSettings = DEFAULT_SOLVER
) -> ScalarField:
    """Backward-Euler diffusion solve ``(I - lam Op) x = rhs``.

    ``tag`` selects ``Op``: ``helmholtz_vort`` is ``Delta - 1/r^2`` (odd
    fields), ``helmholtz5`` the 5D Laplacian and ``helmholtz_flat`` the 3D
    Laplacian (both even).
    """
    if tag not in ("helmholtz_vort", "helmholtz5", "helmholtz_flat"):
        raise ValueError(f"not a Helmholtz tag: {tag!r}")
    if not lam > 0:
        raise ValueError(f"Helmholtz coefficient must be positive, got {lam}")
    _expect(rhs, _RHS_PARITY[tag], tag)
    op = _operator(tag, rhs.grid, lam)
    return ScalarField(rhs.grid, rhs.parity, _residual_solve(op, rhs.values, settings, tag))


def op_ML(rho: ScalarField, settings: SolverSettings = DEFAULT_SOLVER) -> ScalarField:
    """``(Delta + (2/r) d_r)^-1 (d_r rho / r)`` for an even ``rho``."""
    _expect(rho, Parity.EVEN, "op_ML")
    return solve_laplace5(div_axis(d_dr(rho)), settings)


def op_ML_tilde(f: ScalarField, settings: SolverSettings = DEFAULT_SOLVER) -> ScalarField:
    """``(Delta + (2/r) d_r)^-1 (d_z f / r)`` for an odd ``f``."""
    _expect(f, Parity.ODD, "op_ML_tilde")
    return solve_laplace5(div_axis(d_dz(f)), settings)


def ol1_terms(f: ScalarField, settings: SolverSettings = DEFAULT_SOLVER) -> dict[str, np.ndarray]:
    """Discrete pieces of the commutation identity for an axis-vanishing even ``f``.

    The identity reads ``ML d_r f = f/r - ML(f/r) - d_z ML~ f``.  Its
    operands are singular-looking (``f/r`` is odd, ``d_rr f / r`` and
    ``d_r(f/r) / r`` blow up like ``1/r``), so the composition used here is:

    * ``lhs  = L5^-1[ (D_r D_r f) / r ]``
    * ``f/r``      pointwise at cell centres
    * ``ML(f/r) = L5^-1[ D_r(f/r) / r ]`` with ``f/r`` carried as odd
    * ``d_z ML~ f = D_z L5^-1[ (D_z f) / r ]``

    where ``D_r``, ``D_z`` are the centred stencils of :mod:`.grid` and every
    quotient is taken pointwise (all ``r_i > 0``).  ``L5^-1`` is the same
    Dirichlet solve as :func:`solve_laplace5`.
    """
    _expect(f, Parity.EVEN, "identity_residual_OL1")
    g = f.grid
    v = f.values
    axis = (9.0 * v[0] - v[1]) / 8.0
    scale = float(np.max(np.abs(v)))
    if scale > 0 and float(np.max(np.abs(axis))) > g.dr * scale:
        raise ValueError("identity needs f vanishing on the axis; f/r would be singular")
    f_over_r = ScalarField(g, Parity.ODD, over_r(v, g))
    lhs = _solve5(over_r(d_dr(d_dr(f)).values, g), g, settings)
    ml_f_over_r = _solve5(over_r(d_dr(f_over_r).values, g), g, settings)
    mlt = _solve5(over_r(d_dz(f).values, g), g, settings)
    dz_mlt = d_dz(ScalarField(g, Parity.EVEN, mlt)).values
    return {"lhs": lhs, "f_over_r": f_over_r.values, "ML_f_over_r": ml_f_over_r, "dz_MLt_f": dz_mlt}


def identity_residual_OL1(f: ScalarField, settings: SolverSettings = DEFAULT_SOLVER) -> float:
    """Normalised ``L^2`` defect of the discrete commutation identity.

    Returns ``||lhs - rhs||_2 / max(1, ||f||_2)``; see :func:`ol1_terms` for
    the discrete composition.
    """
    t = ol1_terms(f, settings)
    res = t["lhs"] - (t["f_over_r"] - t["ML_f_over_r"] - t["dz_MLt_f"])
    # the defect has no parity; the L2 norm does not look at it
    return lp_norm(ScalarField(f.grid, Parity.EVEN, res), 2) / max(1.0, lp_norm(f, 2))
