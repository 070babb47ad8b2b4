import logging

import numpy as np
import pytest
import sympy as sp
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

R_SYM, Z_SYM = sp.symbols("r z", real=True)


@pytest.fixture(autouse=True)
def _quiet_boundary_monitor():
    logging.getLogger("axisym_mhdb").setLevel(logging.ERROR)
    yield


def lambdify(expr):
    """Vectorised numpy callable of a sympy expression in (r, z)."""
    f = sp.lambdify((R_SYM, Z_SYM), expr, "numpy")
    return lambda r, z: np.broadcast_to(f(r, z), np.broadcast(r, z).shape).astype(float)


def l2(values, grid):
    return float(np.sqrt(np.sum(values**2 * grid.weights())))
