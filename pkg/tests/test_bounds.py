import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from spavg import (
    ConstantSet,
    LogReal,
    bound_report,
    check_gamma_condition,
    d_bar,
    delta_bar,
    eps_bar,
    eps_double_star,
    f_eps,
    k_eps,
    solve_Seps,
)
from spavg.averaging import GammaEnvelope
from spavg.bounds import BOUND_HEADER, CoarseGridError, bounds_to_csv, d_bar_terms, delta_bar_terms

UNIT = ConstantSet(L=1.0, P=1.0, L_av=1.0, R=2.5, z_bar=1.5, T=1.0)
EPS_GRID = 10.0 ** -np.arange(2, 13)


def test_delta_bar_against_oracle():
    c = UNIT.replace(L=0.1)
    S = solve_Seps(0.1, 1.0, 1e-4)
    assert oracles.rel_err(delta_bar(1e-4, S, c), oracles.delta_bar(1e-4, S, 0.1, 1, 1)) <= 1e-10
    db = delta_bar(1e-4, S, c)
    assert oracles.rel_err(d_bar(1e-4, S, db, c), oracles.d_bar(1e-4, S, 0.1, 1, 1)) <= 1e-10


@settings(max_examples=50)
@given(st.floats(1e-12, 0.5), st.floats(1e-3, 20.0), st.floats(0.01, 5.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_bounds_dominate_their_first_terms(eps, S, L, P, T):
    c = UNIT.replace(L=L, P=P, T=T)
    db = delta_bar(eps, S, c)
    first = delta_bar_terms(eps, S, c)[0]
    assert db.log() >= first.log() - 1e-12 * abs(first.log())
    floor = LogReal.from_float(S * L * eps) * LogReal.exp(L * S)
    assert d_bar(eps, S, db, c).log() >= floor.log() - 1e-12 * abs(floor.log())


def test_deviation_bounds_are_sqrt_eps_order():
    ratios_D, ratios_d = [], []
    for e in EPS_GRID:
        S = solve_Seps(1.0, 1.0, e)
        db = delta_bar(e, S, UNIT)
        ratios_D.append((db / math.sqrt(e)).to_float())
        ratios_d.append((d_bar(e, S, db, UNIT) / math.sqrt(e)).to_float())
    for r in (ratios_D, ratios_d):
        assert max(r) < 10
        assert np.all(np.diff(r[-4:]) < 0)


def test_appendix_term_mirrors_decrease():
    rows = []
    for e in EPS_GRID:
        S = solve_Seps(1.0, 1.0, e)
        db = delta_bar(e, S, UNIT)
        terms = list(delta_bar_terms(e, S, UNIT)) + list(d_bar_terms(e, S, db, UNIT))
        rows.append([(t / math.sqrt(e)).to_float() for t in terms])
        total = terms[0] + terms[1] + terms[2]
        assert oracles.rel_err(total, oracles.delta_bar(e, S, 1, 1, 1)) <= 1e-10
    tail = np.array(rows)[-4:]
    assert np.all(np.diff(tail, axis=0) < 0)


def test_k_with_zero_gamma():
    eps, S = 0.01, 0.4
    db = delta_bar(eps, S, UNIT)
    want = db + (eps * S) * 1.0 * (eps * S * 1.0) * math.exp(eps * S)
    assert abs(k_eps(eps, S, db, 0.0, UNIT).log() - want.log()) < 1e-14
    with pytest.raises(ValueError):
        k_eps(eps, S, db, -1.0, UNIT)


def test_k_example_against_oracle():
    c = ConstantSet(L=7.5, P=5.1, L_av=1.2, R=2.5, z_bar=1.5, T=10.0)
    S = solve_Seps(c.L, c.T, 0.15)
    g = 2 * 1.5 / S
    K = k_eps(0.15, S, delta_bar(0.15, S, c), g, c)
    assert oracles.rel_err(K, oracles.k_eps(0.15, S, 7.5, 5.1, 10, 1.2, 2.5, 1.5, g)) <= 1e-10


def test_k_decreases_along_eps_grid():
    # K tends to zero only as S grows without bound, which is very slow; along the grid it decreases
    Ks = []
    for e in EPS_GRID[:7]:
        S = solve_Seps(1.0, 1.0, e)
        Ks.append(k_eps(e, S, delta_bar(e, S, UNIT), 3.0 / S, UNIT).to_float())
    assert np.all(np.diff(Ks) < 0)


def test_f_large_interval_limit():
    c = UNIT
    db = LogReal.from_float(0.3)
    assert f_eps(0.01, 60.0, db, c).to_float() == pytest.approx(0.3, rel=1e-12)


def test_f_against_oracle():
    e = 0.015
    S = solve_Seps(1.0, 1.0, e)
    db = delta_bar(e, S, UNIT)
    F = f_eps(e, S, d_bar(e, S, db, UNIT), UNIT)
    assert oracles.rel_err(F, oracles.f_eps(e, S, 1, 1, 1, 1, 1, 0.5)) <= 1e-10


def test_f_coarse_grid_error():
    c = ConstantSet(L=7.5, P=5.1, L_av=1.2, R=2.5, z_bar=1.5, T=10.0)
    S = solve_Seps(c.L, c.T, 0.015)
    with pytest.raises(CoarseGridError, match="grid too coarse"):
        f_eps(0.015, S, LogReal.from_float(1.0), c)
    assert bound_report(0.015, c).F_eps is None


def test_f_over_sqrt_eps_bounded():
    r = []
    for e in EPS_GRID:
        S = solve_Seps(1.0, 1.0, e)
        F = f_eps(e, S, d_bar(e, S, delta_bar(e, S, UNIT), UNIT), UNIT)
        r.append((F / math.sqrt(e)).to_float())
    assert max(r) < 20 and np.all(np.diff(r[-4:]) < 0)


def test_eps_bar_cases():
    assert eps_bar(UNIT, 0.15) == 0.15
    S = 0.8
    c = UNIT.replace(r_y=math.exp(UNIT.delta_y * S))
    e = eps_bar(c, 0.15)
    assert solve_Seps(1.0, 1.0, e) == pytest.approx(S, rel=1e-9)
    bigger = eps_bar(UNIT.replace(r_y=c.r_y * 1.5), 0.15)
    assert bigger < e


def test_eps_double_star_cases():
    c = UNIT.replace(beta_y=2.0, delta_y=1.0, T=5.0)
    # (beta - delta) t_a = e^{-2} is solved by eps = e^{-2} since ln(1/sqrt(e^{-2})) = 1
    e, vacuous = eps_double_star(math.exp(-2), c)
    assert not vacuous and e == pytest.approx(math.exp(-2), rel=1e-12)
    small, _ = eps_double_star(1e-12, c)
    assert small < 1e-12
    e, vacuous = eps_double_star(4.0, c)
    assert vacuous and e == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        eps_double_star(6.0, c)


def test_eps_double_star_residual(rng):
    for _ in range(100):
        c = UNIT.replace(beta_y=float(rng.uniform(0.5, 3)), T=10.0)
        c = c.replace(delta_y=c.beta_y / 2)
        t_a = float(rng.uniform(1e-3, 0.3))
        e, vacuous = eps_double_star(t_a, c)
        if not vacuous:
            assert abs((c.beta_y - c.delta_y) * t_a - e * math.log(1 / math.sqrt(e))) <= 1e-12


def test_gamma_condition_reports():
    rows = check_gamma_condition(lambda s: 0.0, UNIT, 1.0, 3.0, [1e-2, 1e-4])
    assert all(r.holds for r in rows)
    c = UNIT.replace(T=10.0)
    rows = check_gamma_condition(lambda s: 2.0 / s, c, 1.0, 3.0, [1e-2, 1e-4, 1e-8])
    assert all(not r.holds and r.log_gap > 0 for r in rows)
    shifted = check_gamma_condition(lambda s: 2.0 / s, c, 10.0, 3.0, [1e-2, 1e-4, 1e-8])
    for a, b in zip(rows, shifted):
        assert a.log_gap - b.log_gap == pytest.approx(math.log(10.0), abs=1e-12)
    with pytest.raises(ValueError):
        check_gamma_condition(lambda s: 0.0, UNIT, 1.0, 2.0, [0.1])


def test_gamma_condition_outside_envelope():
    env = GammaEnvelope(s_grid=np.array([5.0, 100.0]), gamma_hat=np.array([0.4, 0.02]), s_star=5.0)
    with pytest.raises(ValueError, match="extend s_grid"):
        check_gamma_condition(env, UNIT, 1.0, 3.0, [1e-4])


def test_constant_set_validation_and_text_roundtrip():
    c = ConstantSet(L=7.5, P=5.1, L_av=1.2, R=2.5, z_bar=1.5, T=10.0, r_y=1.01, beta_y=0.99,
                    meta={"seed": 42, "lipschitz_safety": 1.2})
    assert c.delta_y == 0.495
    back = ConstantSet.from_text(c.to_text())
    assert back == c and back.meta["seed"] == "42"
    with pytest.raises(ValueError):
        ConstantSet(L=0.0, P=1, L_av=1, R=1, z_bar=1, T=1)
    with pytest.raises(ValueError):
        ConstantSet(L=1, P=1, L_av=1, R=1, z_bar=1, T=1, beta_y=1.0, delta_y=1.0)


def test_report_and_csv():
    reps = [bound_report(e, UNIT, lambda s: 2.0 / s) for e in (1e-2, 1e-4)]
    text = bounds_to_csv(reps)
    lines = text.splitlines()
    assert lines[0] == ",".join(BOUND_HEADER)
    assert len(lines) == 3
    assert reps[0].ratio("Delta_bar") == pytest.approx((reps[0].Delta_bar / 0.1).to_float())
    assert reps[0].K_eps > reps[0].Delta_bar
