"""Run output tree: ``diagnostics.csv``, ``snapshots/NNNNNN.fld``, ``report.json``.

``diagnostics.csv`` has one header line naming the columns
(:data:`~axisym_mhdb.diagnostics.COLUMNS`) followed by one row per record,
every value printed with ``%.17g`` so it parses back bit-exactly.
``report.json`` (schema version 1) summarises the run and its checks.
Snapshots are numbered in emission order.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional, Sequence

from .config import Config, config_to_dict
from .diagnostics import COLUMNS, DiagnosticsRecord, check_energy_bound, check_max_principle, phi_fit
from .dynamics import RunResult, run
from .fields import write_snapshot

__all__ = ["REPORT_VERSION", "write_run", "read_diagnostics", "format_row", "run_report"]

REPORT_VERSION = 1


def format_row(values: Sequence[float]) -> str:
    return ",".join("%.17g" % v for v in values)


def read_diagnostics(path: str | Path) -> list[DiagnosticsRecord]:
    """Parse a ``diagnostics.csv`` file.

    Raises:
        ValueError: if the header does not match the current column set.
    """
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != COLUMNS:
        raise ValueError(f"{path}: unexpected diagnostics header")
    return [DiagnosticsRecord.from_row([float(x) for x in row]) for row in rows[1:]]


def _finite(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None


def run_report(cfg: Config, result: RunResult) -> dict:
    series = result.records
    mp = check_max_principle(series, cfg.params.mode)
    report = {
        "version": REPORT_VERSION,
        "status": "ok" if result.ok else "failed",
        "error": None if result.ok else f"{type(result.error).__name__}: {result.error}",
        "t_final": result.final.t,
        "steps": result.steps,
        "records": len(series),
        "snapshots": len(result.snapshot_times),
        "config": config_to_dict(cfg),
        "checks": {
            "max_principle": {"passed": mp.passed, "worst_margin": mp.worst_margin},
            "max_div_residual": max(r["div_residual"] for r in series),
            "max_boundary_ring": max(r["boundary_ring"] for r in series),
        },
    }
    if cfg.params.mode == "mhd_boussinesq":
        eb = check_energy_bound(series)
        report["checks"]["energy_bound"] = {"passed": eb.passed, "worst_margin": eb.worst_margin, **eb.details}
    if all(r["Omega_L2"] > 0 for r in series):
        fit = phi_fit(series, "Omega_L2", 1, cfg.diagnostics.c_cap)
        report["checks"]["phi_fit_Omega_L2_k1"] = {"c": _finite(fit.c), "satisfied": fit.satisfied}
    return report


def write_run(cfg: Config, out_dir: Optional[str | Path] = None) -> RunResult:
    """Run ``cfg`` and stream its outputs into ``out_dir``.

    Records and snapshots are flushed as they are produced, so a failing run
    leaves everything up to the failure on disk; ``report.json`` is written
    last and records the failure.
    """
    root = Path(out_dir if out_dir is not None else cfg.output.out_dir)
    snap_dir = root / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for old in snap_dir.glob("*.fld"):
        old.unlink()
    count = 0

    with open(root / "diagnostics.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(COLUMNS) + "\n")

        def on_record(rec: DiagnosticsRecord) -> None:
            fh.write(format_row(rec.row()) + "\n")
            fh.flush()

        def on_snapshot(state) -> None:
            nonlocal count
            write_snapshot(snap_dir / f"{count:06d}.fld", state)
            count += 1

        result = run(cfg, on_record, on_snapshot)

    with open(root / "report.json", "w", encoding="utf-8") as fh:
        json.dump(run_report(cfg, result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result
