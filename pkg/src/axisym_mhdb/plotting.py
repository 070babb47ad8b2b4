"""Deterministic SVG line charts of diagnostics quantities."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import COLUMNS, DiagnosticsRecord, phi, phi_fit  # noqa: E402

__all__ = ["PLOTTABLE", "plot_quantity", "plot_series"]

PLOTTABLE = tuple(c for c in COLUMNS if c != "t")


def plot_quantity(
    series: Sequence[DiagnosticsRecord],
    name: str,
    path: str | Path,
    phi_k: Optional[int] = None,
    c_cap: float = 1e3,
) -> Optional[float]:
    """Write one chart of ``name`` against time; returns the fitted ``c``.

    With ``phi_k`` the smallest envelope ``Phi_{k,c}`` above the data is
    overlaid (only for strictly positive series).  Output bytes depend only
    on the inputs: the SVG id salt is fixed and no date is embedded.

    Raises:
        KeyError: if ``name`` is not a diagnostics column.
    """
    if name not in PLOTTABLE:
        raise KeyError(name)
    t = np.array([r.t for r in series])
    q = np.array([r[name] for r in series])
    c = None
    with plt.rc_context({"svg.hashsalt": "axisym-mhdb", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.plot(t, q, marker=".", label=name)
        if phi_k is not None:
            fit = phi_fit(series, name, phi_k, c_cap)
            c = fit.c
            if np.isfinite(c):
                ax.plot(t, phi(t, phi_k, c), linestyle="--", label=f"Phi k={phi_k}, c={c:.4g}")
        ax.set_xlabel("t")
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return c


def plot_series(
    series: Sequence[DiagnosticsRecord],
    names: Sequence[str],
    out_dir: str | Path,
    phi_k: Optional[int] = None,
    c_cap: float = 1e3,
) -> list[Path]:
    """One ``<name>.svg`` per quantity in ``out_dir``."""
    unknown = [n for n in names if n not in PLOTTABLE]
    if unknown:
        raise KeyError(", ".join(unknown))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in names:
        p = out / f"{name}.svg"
        plot_quantity(series, name, p, phi_k, c_cap)
        paths.append(p)
    return paths
