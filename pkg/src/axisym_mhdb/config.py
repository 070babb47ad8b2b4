"""Run configuration: a small TOML grammar, validated fail-closed.

Grammar (every section optional except ``[grid]`` and ``[step]``)::

    [grid]
    nr = 128            # int >= 4
    nz = 128            # int >= 4
    R = 4.0             # > 0
    Lz = 8.0            # > 0

    [params]
    mu = 1.0            # >= 0 (the verification suites use mu > 0)
    nu = 0.0            # >= 0
    kappa = 0.0         # >= 0
    mode = "mhd_boussinesq"   # or "rayleigh_benard"
    physics = "full"          # or "diffusion", "advection"

    [[initial.wtheta]]  # also initial.H, initial.rho; zero or more bumps each
    amplitude = 2.0
    r0 = 1.0
    z0 = 4.0
    sigma = 0.5

    [step]
    cfl = 0.5           # (0, 1]
    dt_max = 0.02       # > 0
    t_end = 1.0         # >= 0
    fixed_dt = 0.01     # optional, > 0

    [output]
    record_interval = 0.0     # 0 records after every step
    snapshot_interval = 0.0   # 0 writes only the first and last state
    out_dir = "out"

    [solver]
    tolerance = 1e-10   # (0, 1e-6]
    max_iter = 4        # >= 1

    [diagnostics]
    c_cap = 1e3         # > 0
    boundary_warn = 1e-6

Unknown sections or keys are errors.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import tomli
import tomli_w

from .dynamics import Bump, StepControl
from .elliptic import SolverSettings
from .fields import PhysParams
from .grid import Grid, build_grid

__all__ = [
    "ConfigError",
    "OutputSpec",
    "DiagnosticsSpec",
    "Config",
    "INITIAL_FIELDS",
    "parse_config",
    "load_config",
    "dump_config",
    "standard_config",
]

INITIAL_FIELDS = ("wtheta", "H", "rho")


class ConfigError(ValueError):
    """Invalid configuration text or value."""


@dataclass(frozen=True)
class OutputSpec:
    record_interval: float = 0.0
    snapshot_interval: float = 0.0
    out_dir: str = "out"


@dataclass(frozen=True)
class DiagnosticsSpec:
    c_cap: float = 1e3
    boundary_warn: float = 1e-6


@dataclass(frozen=True)
class Config:
    grid: Grid
    params: PhysParams = PhysParams()
    initial: Mapping[str, tuple[Bump, ...]] = field(default_factory=dict)
    step: StepControl = StepControl()
    output: OutputSpec = OutputSpec()
    solver: SolverSettings = SolverSettings()
    diagnostics: DiagnosticsSpec = DiagnosticsSpec()

    def replace(self, **sections: Any) -> "Config":
        """Copy with some sections swapped; ``grid=(nr, nz)`` keeps the extents."""
        if isinstance(sections.get("grid"), tuple):
            nr, nz = sections["grid"]
            sections["grid"] = build_grid(nr, nz, self.grid.R, self.grid.Lz)
        return dataclasses.replace(self, **sections)


_SECTIONS: dict[str, dict[str, type]] = {
    "grid": {"nr": int, "nz": int, "R": float, "Lz": float},
    "params": {"mu": float, "nu": float, "kappa": float, "mode": str, "physics": str},
    "step": {"cfl": float, "dt_max": float, "t_end": float, "fixed_dt": float},
    "output": {"record_interval": float, "snapshot_interval": float, "out_dir": str},
    "solver": {"tolerance": float, "max_iter": int},
    "diagnostics": {"c_cap": float, "boundary_warn": float},
}
_REQUIRED = {"grid": ("nr", "nz", "R", "Lz"), "step": ("t_end",)}
_BUMP_KEYS = ("amplitude", "r0", "z0", "sigma")


def _typed(where: str, value: Any, kind: type) -> Any:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected {kind.__name__}, got a boolean")
    if kind is int:
        if not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where}: must be finite")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string, got {value!r}")
    return value


def _section(doc: Mapping[str, Any], name: str) -> dict[str, Any]:
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    spec = _SECTIONS[name]
    out = {}
    for key, value in raw.items():
        if key not in spec:
            raise ConfigError(f"unknown key '{name}.{key}' (allowed: {', '.join(spec)})")
        out[key] = _typed(f"{name}.{key}", value, spec[key])
    for key in _REQUIRED.get(name, ()):
        if key not in out:
            raise ConfigError(f"missing required key '{name}.{key}'")
    return out


def _build(where: str, factory, kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] {exc}") from None


def config_from_dict(doc: Mapping[str, Any]) -> Config:
    """Validate a parsed document and build a :class:`Config`."""
    allowed = set(_SECTIONS) | {"initial"}
    for name in doc:
        if name not in allowed:
            raise ConfigError(f"unknown section '[{name}]' (allowed: {', '.join(sorted(allowed))})")
    grid = _build("grid", build_grid, _section(doc, "grid"))
    params = _build("params", PhysParams, _section(doc, "params"))
    step = _build("step", StepControl, _section(doc, "step"))
    output = _build("output", OutputSpec, _section(doc, "output"))
    solver = _build("solver", SolverSettings, _section(doc, "solver"))
    diag = _build("diagnostics", DiagnosticsSpec, _section(doc, "diagnostics"))
    if output.record_interval < 0 or output.snapshot_interval < 0:
        raise ConfigError("[output] intervals must be >= 0")
    if not output.out_dir:
        raise ConfigError("[output] out_dir must be non-empty")
    if not diag.c_cap > 0 or not diag.boundary_warn > 0:
        raise ConfigError("[diagnostics] c_cap and boundary_warn must be positive")

    raw_init = doc.get("initial", {})
    if not isinstance(raw_init, dict):
        raise ConfigError("[initial] must be a table of bump arrays")
    initial: dict[str, tuple[Bump, ...]] = {}
    for name, bumps in raw_init.items():
        if name not in INITIAL_FIELDS:
            raise ConfigError(f"unknown key 'initial.{name}' (allowed: {', '.join(INITIAL_FIELDS)})")
        if not isinstance(bumps, list):
            raise ConfigError(f"initial.{name} must be an array of tables ([[initial.{name}]])")
        out = []
        for k, b in enumerate(bumps):
            where = f"initial.{name}[{k}]"
            if not isinstance(b, dict):
                raise ConfigError(f"{where} must be a table")
            for key in b:
                if key not in _BUMP_KEYS:
                    raise ConfigError(f"unknown key '{where}.{key}' (allowed: {', '.join(_BUMP_KEYS)})")
            for key in _BUMP_KEYS:
                if key not in b:
                    raise ConfigError(f"missing required key '{where}.{key}'")
            vals = {key: _typed(f"{where}.{key}", b[key], float) for key in _BUMP_KEYS}
            out.append(_build(where, Bump, vals))
        initial[name] = tuple(out)
    return Config(grid, params, initial, step, output, solver, diag)


def parse_config(text: str) -> Config:
    """Parse TOML text; syntax errors carry the line and column."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return config_from_dict(doc)


def load_config(path: str | Path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def config_to_dict(cfg: Config) -> dict[str, Any]:
    g = cfg.grid
    step = {k: v for k, v in dataclasses.asdict(cfg.step).items() if v is not None}
    return {
        "grid": {"nr": g.nr, "nz": g.nz, "R": g.R, "Lz": g.Lz},
        "params": dataclasses.asdict(cfg.params),
        "initial": {
            name: [dataclasses.asdict(b) for b in cfg.initial[name]] for name in INITIAL_FIELDS if name in cfg.initial
        },
        "step": step,
        "output": dataclasses.asdict(cfg.output),
        "solver": dataclasses.asdict(cfg.solver),
        "diagnostics": dataclasses.asdict(cfg.diagnostics),
    }


def dump_config(cfg: Config) -> str:
    """Serialise to TOML text that :func:`parse_config` maps back to ``cfg``."""
    return tomli_w.dumps(config_to_dict(cfg))


def standard_config(nr: int = 128, nz: int = 128, t_end: float = 1.0, **sections: Any) -> Config:
    """The reference Gaussian-ring setup used by the verification suites."""
    cfg = Config(
        grid=build_grid(nr, nz, 4.0, 8.0),
        params=PhysParams(mu=1.0, nu=0.0, kappa=0.0),
        initial={
            "wtheta": (Bump(2.0, 1.0, 4.0, 0.5),),
            "H": (Bump(1.0, 0.8, 3.5, 0.6),),
            "rho": (Bump(1.0, 1.2, 4.5, 0.6),),
        },
        step=StepControl(cfl=0.5, dt_max=0.02, t_end=t_end),
    )
    return cfg.replace(**sections) if sections else cfg
