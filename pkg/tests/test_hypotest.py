import dataclasses
import math

import numpy as np
import pytest

from bifurk import hypotest
from bifurk.bar import BarParams, simulate_bar
from bifurk.errors import DegenerateVariance, UnstableFit
from bifurk.hypotest import (
    chi2_survival,
    normal_survival,
    run_test,
    test_equal_alpha as equal_alpha,
    test_equal_beta as equal_beta,
    test_equal_dynamics as equal_dynamics,
    test_equal_fixed_point as equal_fixed_point,
    test_sister_difference as sister_difference,
)
from bifurk.inference import fit
from bifurk.lineage import Lineage

from oracles import chi2_sf_quad, normal_sf_quad

REF = BarParams(0.5, 1.0, 0.7, 0.3, 1.0, 0.4)
CHI = (equal_dynamics, equal_alpha, equal_beta, equal_fixed_point)


@pytest.mark.parametrize("x,k", [(0.5, 1), (3.84, 1), (5.991465, 2), (7.8, 3), (20.0, 5)])
def test_chi2_survival_vs_quadrature(x, k):
    assert chi2_survival(x, k) == pytest.approx(chi2_sf_quad(x, k), rel=1e-8, abs=1e-12)


def test_chi2_survival_values():
    assert chi2_survival(0.0, 1) == 1.0 and chi2_survival(0.0, 4) == 1.0
    assert chi2_survival(5.991465, 2) == pytest.approx(0.05, abs=1e-6)
    for x in (0.1, 2.0, 40.0):
        assert chi2_survival(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-12)
    with pytest.raises(ValueError):
        chi2_survival(-1.0, 1)


def test_normal_survival():
    assert normal_survival(0.0) == 0.5
    assert normal_survival(1.959964) == pytest.approx(0.025, abs=1e-6)
    for z in (-7.5, -1.0, 0.3, 4.0, 8.0):
        assert normal_survival(z) + normal_survival(-z) == pytest.approx(1.0, abs=1e-12)
        assert normal_survival(z) == pytest.approx(normal_sf_quad(z), rel=1e-9, abs=1e-15)


def _with_theta(res, theta):
    return dataclasses.replace(res, theta_hat=np.asarray(theta, dtype=float))


def test_identical_branches_give_zero():
    res = fit(simulate_bar(REF, 8, seed=1))
    a0, b0 = res.theta_hat[:2]
    same = _with_theta(res, [a0, b0, a0, b0])
    same = dataclasses.replace(same, gamma_hat=(b0 / (1 - a0),) * 2)
    for fn in CHI:
        rep = fn(same)
        assert rep.statistic == 0.0 and rep.p_value == 1.0


def test_fixed_point_zero_with_different_branches():
    lin = simulate_bar(REF, 8, seed=2)
    res = fit(lin)
    res = dataclasses.replace(res, gamma_hat=(1.0, 1.0))
    assert equal_fixed_point(res).statistic == 0.0
    assert equal_dynamics(res).statistic > 0


def test_statistics_nonnegative_and_report_fields():
    res = fit(simulate_bar(REF, 9, seed=3))
    for fn in CHI:
        rep = fn(res)
        assert rep.statistic >= 0 and 0 <= rep.p_value <= 1
        assert rep.n_effective == res.n_effective
        assert {"name", "statistic", "dof", "p_value"} <= set(rep.to_dict())
    assert equal_dynamics(res).dof == 2 and equal_alpha(res).dof == 1


def test_beta_statistic_without_mean():
    res = fit(simulate_bar(BarParams(0.2, 0.5, -0.2, -0.5, 1.0, 0.1), 8, seed=4))
    res = dataclasses.replace(res, mu_hats=dataclasses.replace(res.mu_hats, mu1=0.0, mu2=res.mu_hats.variance))
    db = res.theta_hat[1] - res.theta_hat[3]
    expect = res.n_effective * db * db / (2 * res.sigma2_hat * (1 - res.rho_hat))
    assert equal_beta(res).statistic == pytest.approx(expect, rel=1e-12)


def test_swap_invariance():
    lin = simulate_bar(REF, 9, seed=5)
    a, b = fit(lin), fit(lin.swap_branches())
    for fn in CHI:
        assert fn(a).statistic == pytest.approx(fn(b).statistic, rel=1e-9)


def test_scale_invariance():
    lin = simulate_bar(REF, 9, seed=6)
    a, b = fit(lin), fit(lin.map_values(lambda v: 3.7 * v))
    for fn in CHI:
        assert fn(a).statistic == pytest.approx(fn(b).statistic, rel=1e-8)
    sis = simulate_bar(BarParams(0.0, 1.0, 0.0, 0.9, 1.0, 0.2), 9, seed=7)
    scaled = sis.map_values(lambda v: 3.7 * v)
    x0 = sister_difference(sis, fit(sis, True)).statistic
    x1 = sister_difference(scaled, fit(scaled, True)).statistic
    assert x0 == pytest.approx(x1, rel=1e-8)


def test_sister_equal_daughters():
    vals = np.random.default_rng(0).normal(size=31)
    for n in range(1, 16):
        vals[2 * n] = vals[2 * n - 1]
    lin = Lineage.from_dense(vals)
    rep = run_test(lin, "sister")
    assert rep.statistic == 0.0 and rep.p_value == 1.0


def test_sister_one_sided_values():
    lin = simulate_bar(BarParams(0.0, 1.0, 0.0, 0.9, 1.0, 0.2), 10, seed=8)
    rep = run_test(lin, "sister")
    assert rep.statistic > 0
    assert rep.extra["p_upper"] + rep.extra["p_lower"] == pytest.approx(1.0, abs=1e-12)
    assert rep.p_value == pytest.approx(2 * rep.extra["p_upper"], rel=1e-12)


def test_degenerate_inputs():
    res = fit(simulate_bar(REF, 7, seed=9))
    with pytest.raises(DegenerateVariance):
        equal_dynamics(dataclasses.replace(res, sigma2_hat=0.0))
    with pytest.raises(DegenerateVariance):
        equal_alpha(dataclasses.replace(res, rho_hat=1.5))
    with pytest.raises(UnstableFit):
        equal_fixed_point(_with_theta(res, [1.2, 1.0, 0.5, 1.0]))


def test_rho_near_one_is_clipped_not_rejected():
    res = dataclasses.replace(fit(simulate_bar(REF, 7, seed=10)), rho_hat=1.0)
    assert math.isfinite(equal_alpha(res).statistic)


def test_unknown_test_name():
    with pytest.raises(ValueError):
        run_test(simulate_bar(REF, 4, seed=0), "nonsense")


def test_statistic_grows_under_alternative():
    alt = BarParams(0.5, 1.0, 0.5, 0.8, 1.0, 0.4)
    med = {}
    for r in (9, 12):
        stats = [run_test(simulate_bar(alt, r, seed=100 + s), "equal-dynamics").statistic for s in range(15)]
        med[r] = np.median(stats)
    assert med[12] > 4 * med[9]


def test_module_functions_not_collected():
    assert hypotest.test_equal_dynamics.__test__ is False
