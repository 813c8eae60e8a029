import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from spavg import (
    DomainError,
    IntegrationError,
    IntegratorConfig,
    SystemSpec,
    Trajectory,
    example_boundary_closed_form,
    integrate_boundary_layer,
    integrate_full,
    integrate_reduced,
)
from spavg.integrate import integrate_boundary_layer_batch, solve

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


def test_example_run_stays_in_domain(example):
    sys_, dom, _ = example
    xt, zt = integrate_full(sys_, [2.0], [0.0, 1.5], 0.15, 10.0, dom=dom)
    assert xt.t_end == 10.0 and zt.t0 == 0.0
    assert np.all(np.abs(xt.states) <= dom.R)
    assert all(dom.M.contains(z) for z in zt.states)


def test_constant_fields_give_constant_trajectories():
    sys_ = SystemSpec(n=1, m=2, f=lambda x, z, e: np.zeros(1), g=lambda x, z, e: np.zeros(2))
    xt, zt = integrate_full(sys_, [0.3], [1.0, -2.0], 0.1, 5.0)
    assert np.all(xt.states == 0.3)
    assert np.all(zt.states == [1.0, -2.0])


def test_linear_decay_closed_form():
    tr = integrate_reduced(lambda x: -x, [1.5], 3.0, TIGHT)
    assert tr.final[0] == pytest.approx(1.5 * math.exp(-3.0), abs=1e-8)


def test_adaptive_honours_tolerance():
    # accepted steps carry the controlled error; cubic Hermite fill-in is coarser
    for rt in (1e-6, 1e-8, 1e-10):
        cfg = IntegratorConfig(rel_tol=rt, abs_tol=1e-14)
        tr = integrate_reduced(lambda x: -x, [1.0], 5.0, cfg)
        exact = np.exp(-tr.times)
        assert (np.abs(tr.states[:, 0] - exact) / exact).max() <= 10 * rt


def test_rk4_fourth_order():
    errs = []
    for h in (0.2, 0.1, 0.05):
        tr = integrate_reduced(lambda x: -x, [1.0], 2.0, IntegratorConfig(method="rk4-fixed", h=h))
        errs.append(abs(tr.final[0] - math.exp(-2.0)))
    for a, b in zip(errs, errs[1:]):
        assert 14 <= a / b <= 18


def test_boundary_layer_decay_rate(example):
    sys_ = example[0]
    tr = integrate_boundary_layer(sys_, [0.8], [1.5, 0.0], 1.0)
    assert abs(np.linalg.norm(tr.final) - 1) == pytest.approx(0.5 * math.exp(-1), abs=1e-8)
    assert tr.clock == "fast-time"


def test_boundary_layer_orbit_invariant(example):
    tr = integrate_boundary_layer(example[0], [-1.0], [0.0, 1.0], 20.0)
    assert np.max(np.abs(np.linalg.norm(tr.states, axis=1) - 1)) < 1e-8


def test_boundary_layer_matches_closed_form(example):
    fine = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)
    tr = integrate_boundary_layer(example[0], [2.0], [0.5, 0.0], 5.0, fine)
    taus = np.linspace(0, 5, 100)
    assert np.max(np.abs(tr.at(taus) - example_boundary_closed_form([0.5, 0.0], taus))) < 1e-8


def test_boundary_layer_closed_form_random_starts(example, rng):
    for _ in range(3):
        r, th = rng.uniform(0.5, 1.5), rng.uniform(0, 2 * np.pi)
        z0 = [r * math.cos(th), r * math.sin(th)]
        tr = integrate_boundary_layer(example[0], [0.0], z0, 15.0)
        taus = np.sort(rng.uniform(0, 15, 100))
        assert np.max(np.abs(tr.at(taus) - example_boundary_closed_form(z0, taus))) < 1e-7


def test_batch_matches_single_runs(example):
    xs = np.array([[0.0], [1.0], [-2.0]])
    zs = np.array([[1.5, 0.0], [0.0, 0.5], [0.7, 0.7]])
    batch = integrate_boundary_layer_batch(example[0], xs, zs, 8.0)
    for x, z, tr in zip(xs, zs, batch):
        single = integrate_boundary_layer(example[0], x, z, 8.0)
        assert np.allclose(tr.at(np.linspace(0, 8, 40)), single.at(np.linspace(0, 8, 40)), atol=1e-8)


def test_reduced_examples():
    tr = integrate_reduced(lambda x: -x, [2.0], 1.0)
    assert tr.final[0] == pytest.approx(2 * math.exp(-1), abs=1e-8)
    assert np.all(integrate_reduced(lambda x: np.zeros(1), [0.4], 1.0).states == 0.4)
    tr = integrate_reduced(lambda x: -x * x, [1.0], 1.0)
    assert tr.final[0] == pytest.approx(0.5, abs=1e-8)


def test_full_system_against_scipy(example):
    # independent stiff-free oracle: scipy's DOP853 in fast time
    sys_ = example[0]
    eps, T = 0.15, 3.0
    xt, zt = integrate_full(sys_, [2.0], [0.0, 1.5], eps, T, TIGHT)

    def rhs(tau, w):
        x, z1, z2 = w
        r = math.hypot(z1, z2)
        return [eps * (-x + z1 + eps * x * x), -z1 + z2 + z1 / r, -z1 - z2 + z2 / r + eps * x]

    ref = solve_ivp(rhs, (0, T / eps), [2.0, 0.0, 1.5], method="DOP853", rtol=1e-12, atol=1e-13,
                    dense_output=True)
    ts = np.linspace(0, T, 300)
    w = ref.sol(ts / eps).T
    assert np.max(np.abs(xt.at(ts)[:, 0] - w[:, 0])) < 1e-7
    assert np.max(np.abs(zt.at(ts) - w[:, 1:])) < 1e-7


def test_small_eps_run_completes(example):
    sys_, dom, _ = example
    xt, zt = integrate_full(sys_, [2.0], [0.0, 1.5], 0.015, 10.0, dom=dom)
    assert all(dom.M.contains(z) for z in zt.states[::50])


def test_domain_exit_reported():
    from spavg.model import Annulus, DomainSpec

    sys_ = SystemSpec(n=1, m=1, f=lambda x, z, e: np.ones(1), g=lambda x, z, e: -z)
    dom = DomainSpec(R=1.0, M=Annulus(center=(0.0,), inner=0.0, outer=2.0), eps1=0.5)
    with pytest.raises(DomainError) as info:
        integrate_full(sys_, [0.0], [1.0], 0.1, 3.0, dom=dom)
    assert info.value.time == pytest.approx(1.0, abs=0.05)


def test_excluded_region_hit():
    sys_ = SystemSpec(n=1, m=1, f=lambda x, z, e: np.zeros(1), g=lambda x, z, e: -np.ones(1),
                      excluded_region=lambda z: bool(abs(z[0]) < 0.1))
    with pytest.raises(DomainError):
        integrate_boundary_layer(sys_, [0.0], [1.0], 5.0)


def test_eps_above_eps1_rejected(example):
    sys_, dom, _ = example
    with pytest.raises(ValueError):
        integrate_full(sys_, [2.0], [0.0, 1.5], 0.2, 1.0, dom=dom)


def test_step_budget_exhaustion():
    with pytest.raises(IntegrationError):
        solve(lambda t, y: -y, 0.0, np.ones(1), 10.0, IntegratorConfig(max_steps=3))
    with pytest.raises(IntegrationError):
        solve(lambda t, y: -y, 0.0, np.ones(1), 10.0, IntegratorConfig(method="rk4-fixed", h=0.1, max_steps=5))


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(h=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)


def test_trajectory_csv_roundtrip_and_validation():
    tr = integrate_reduced(lambda x: -x, [1.0, 2.0], 1.0)
    text = tr.to_csv()
    assert text.splitlines()[0] == "clock,t,state_0,state_1"
    back = Trajectory.from_csv(text)
    assert np.array_equal(back.times, tr.times) and np.array_equal(back.states, tr.states)
    assert back.clock == "slow-time"
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [[1.0], [1.0]])
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], [[1.0], [np.nan]])
    with pytest.raises(ValueError):
        tr.at(1.5)


def test_hermite_dense_output_is_cubic_exact():
    ts = np.array([0.0, 0.5, 1.3, 2.0])
    ys = (ts**3 - ts)[:, None]
    ds = (3 * ts**2 - 1)[:, None]
    tr = Trajectory(ts, ys, ds)
    q = np.linspace(0, 2, 37)
    assert np.allclose(tr.at(q)[:, 0], q**3 - q, atol=1e-13)
