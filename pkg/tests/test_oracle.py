import pytest

from axisym_mhdb.config import OutputSpec, standard_config
from axisym_mhdb.diagnostics import COLUMNS
from axisym_mhdb.dynamics import StepControl, run
from axisym_mhdb.fields import PhysParams

from oracle_straightline import Oracle, compare_records

WTHETA = [(2.0, 1.0, 4.0, 0.5)]
H0 = [(1.0, 0.8, 3.5, 0.6)]
RHO0 = [(1.0, 1.2, 4.5, 0.6)]


def package_run(n, steps, dt, params=None):
    cfg = standard_config(
        n, n, step=StepControl(cfl=0.5, dt_max=dt, t_end=steps * dt, fixed_dt=dt), output=OutputSpec()
    )
    if params is not None:
        cfg = cfg.replace(params=params)
    res = run(cfg)
    assert res.ok and res.steps == steps
    return res


def oracle_worst(n=64, steps=100, dt=0.01):
    res = package_run(n, steps, dt)
    oracle = Oracle(n, n, 4.0, 8.0)
    recs, _ = oracle.run(oracle.initial(WTHETA, H0, RHO0), dt, steps)
    return compare_records(res.records, recs, COLUMNS)


def test_straightline_oracle_64_100_steps():
    worst = oracle_worst()
    assert max(worst.values()) <= 1e-13, worst


@pytest.mark.parametrize("variant", ["rayleigh_benard", "diffusive"])
def test_straightline_oracle_variants(variant):
    if variant == "rayleigh_benard":
        params, oracle = PhysParams(mode="rayleigh_benard"), Oracle(32, 32, 4.0, 8.0, rayleigh_benard=True)
    else:
        params, oracle = PhysParams(mu=0.5, nu=0.3, kappa=0.2), Oracle(32, 32, 4.0, 8.0, 0.5, 0.3, 0.2)
    res = package_run(32, 20, 0.02, params)
    recs, _ = oracle.run(oracle.initial(WTHETA, H0, RHO0), 0.02, 20)
    worst = compare_records(res.records, recs, COLUMNS)
    assert max(worst.values()) <= 1e-13, worst


def test_oracle_zero_state_fixed_point():
    oracle = Oracle(16, 16, 4.0, 8.0, rayleigh_benard=True)
    s = oracle.initial([], [], [])
    for _ in range(3):
        s = oracle.step(s, 0.05)
    assert not any(s[k].any() for k in ("w", "H", "rho"))
