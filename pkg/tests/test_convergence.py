import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from axisym_mhdb.config import standard_config
from axisym_mhdb.convergence import (
    MAX_CELLS,
    ConvergenceError,
    advection_mms_study,
    convergence_study,
    restrict,
)
from axisym_mhdb.dynamics import StepControl
from axisym_mhdb.fields import PhysParams
from axisym_mhdb.grid import build_grid, integral, Parity


def test_levels_below_two_rejected():
    with pytest.raises(ConvergenceError):
        convergence_study(standard_config(16, 16), 1)
    with pytest.raises(ConvergenceError):
        advection_mms_study(1)


def test_resource_guard():
    cfg = standard_config(256, 256)
    # 256 * 2^4 = 4096 > 2048
    with pytest.raises(ConvergenceError, match="2048"):
        convergence_study(cfg, 5)
    assert MAX_CELLS == 2048 * 2048


def test_bad_vary_rejected():
    with pytest.raises(ConvergenceError):
        convergence_study(standard_config(16, 16), 2, vary="both")


def test_restrict_preserves_constants_and_mass():
    fine = build_grid(16, 12, 4.0, 8.0)
    assert np.array_equal(restrict(np.full(fine.shape, 3.0), fine), np.full((8, 6), 3.0))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(fine.shape)
    coarse = build_grid(8, 6, 4.0, 8.0)
    a = integral(fine.field(v, Parity.EVEN))
    b = integral(coarse.field(restrict(v, fine), Parity.EVEN))
    assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


def test_restrict_rejects_odd_sizes():
    with pytest.raises(ConvergenceError):
        restrict(np.zeros((5, 4)), build_grid(5, 4, 1.0, 1.0))


@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2**31 - 1))
def test_restrict_is_linear(a, b, seed):
    fine = build_grid(8, 8, 2.0, 2.0)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(fine.shape), rng.standard_normal(fine.shape)
    lhs = restrict(a * x + b * y, fine)
    rhs = a * restrict(x, fine) + b * restrict(y, fine)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_diffusion_only_second_order():
    cfg = standard_config(
        16,
        16,
        params=PhysParams(mu=1.0, nu=0.5, kappa=0.5, physics="diffusion"),
        step=StepControl(cfl=0.5, dt_max=0.02, t_end=0.2, fixed_dt=0.02),
    )
    rep = convergence_study(cfg, 3, "space", dt_power=2.0)
    assert rep.observed_order() >= 1.8
    assert [lv["nr"] for lv in rep.levels] == [16, 32, 64]
    assert "0 vs 1" in rep.table()


def test_time_study_first_order():
    cfg = standard_config(32, 32, step=StepControl(cfl=0.5, dt_max=0.02, t_end=0.2, fixed_dt=0.02))
    rep = convergence_study(cfg, 3, "time")
    assert 0.85 <= rep.observed_order() <= 1.3
    assert [lv["steps"] for lv in rep.levels] == [10, 20, 40]


def test_two_levels_note():
    rep = convergence_study(standard_config(16, 16, t_end=0.05), 2)
    assert rep.observed_order() is None and rep.notes
    d = rep.as_dict()
    assert set(d) == {"vary", "levels", "errors", "orders", "notes"}
