import csv
import math

import numpy as np
import pytest

from bifurk.bar import BarParams
from bifurk.errors import InvalidParameters
from bifurk.experiments import (
    ExperimentPlan,
    ExperimentReport,
    aging_scenario,
    fixed_point_se,
    params_with_fixed_point_gap,
    run,
    threads,
)
from bifurk.kernel import Categorical, Dirac, FiniteKernel
from bifurk.io import dumps_report

REF = BarParams(0.5, 1.0, 0.7, 0.3, 1.0, 0.4)


def test_identical_plans_give_identical_reports():
    plan = ExperimentPlan("clt", REF, (5, 6), 6, seed=17)
    assert dumps_report(run(plan)) == dumps_report(run(plan))


def test_threads_do_not_change_results(monkeypatch):
    plan = ExperimentPlan("calibration", REF, (6,), 8, seed=3, test="equal-alpha")
    serial = dumps_report(run(plan))
    monkeypatch.setenv("BIFURK_THREADS", "2")
    assert threads() == 2
    assert dumps_report(run(plan)) == serial
    monkeypatch.setenv("BIFURK_THREADS", "two")
    with pytest.raises(InvalidParameters):
        threads()


def test_split_runs_pool_to_single_run():
    whole = run(ExperimentPlan("clt", REF, (6,), 10, seed=5))
    a = run(ExperimentPlan("clt", REF, (6,), 4, seed=5))
    b = run(ExperimentPlan("clt", REF, (6,), 6, seed=5, replication_offset=4))
    pooled = ExperimentReport.merge(b, a)
    assert pooled.records == whole.records
    s, t = pooled.summaries[6], whole.summaries[6]
    assert np.allclose(s["covariance"], t["covariance"], rtol=1e-9, atol=1e-12)
    assert s["frobenius_rel"] == pytest.approx(t["frobenius_rel"], rel=1e-9)


def test_merge_rejects_gaps_and_foreign_plans():
    a = run(ExperimentPlan("clt", REF, (5,), 2, seed=5))
    gap = run(ExperimentPlan("clt", REF, (5,), 2, seed=5, replication_offset=3))
    other = run(ExperimentPlan("clt", REF, (5,), 2, seed=6, replication_offset=2))
    with pytest.raises(ValueError):
        ExperimentReport.merge(a, gap)
    with pytest.raises(ValueError):
        ExperimentReport.merge(a, other)


def test_constant_functional_has_no_error():
    rep = run(ExperimentPlan("lln", REF, (3, 5, 7), 3, seed=1, functional="1"))
    for s in rep.summaries.values():
        assert s["l2_error"] == 0.0 and s["bias"] == 0.0
    assert rep.passed


def test_lln_second_moment_limit():
    rep = run(ExperimentPlan("lln", REF, (8, 12), 10, seed=2, functional="x^2"))
    assert rep.summaries[12]["limit"] == pytest.approx(4.28373015873, abs=1e-10)
    assert rep.verdict("lln.bias_within_se").passed


def test_zero_level_never_rejects():
    plan = ExperimentPlan("calibration", REF, (6,), 10, seed=4, levels=(0.0, 1.0))
    s = run(plan).summaries[6]
    assert s["rejection_rate"]["0.0"] == 0.0
    assert s["rejection_rate"]["1.0"] == 1.0


def test_uncorrelated_noise_gives_zero_cross_block():
    p = BarParams(0.5, 1.0, 0.7, 0.3, 1.0, 0.0)
    rep = run(ExperimentPlan("clt", p, (9,), 200, seed=8))
    assert rep.verdict("clt.cross_block").passed


def test_sister_sum_variance():
    p = BarParams(0.0, 1.0, 0.0, 1.0, 1.0, 0.3)
    rep = run(ExperimentPlan("clt", p, (9,), 300, seed=9))
    s = rep.summaries[9]
    assert s["sister_variance_target"] == pytest.approx(1.4)
    assert rep.verdict("clt.sister_variance").passed


def test_finite_kernel_second_moment_cross_check():
    kernel = FiniteKernel.random(3, np.random.default_rng(12), states=[0.0, 1.0, 2.5])
    root = Categorical([0.0, 1.0, 2.5], [0.2, 0.5, 0.3])
    rep = run(ExperimentPlan("lln", kernel, (1, 3, 5, 7), 400, seed=13, root=root))
    checks = [v for v in rep.verdicts if v.rule == "exact.gen_second_moment"]
    assert len(checks) == 4 and all(v.passed for v in checks)


def test_swap_kernel_flagged_without_limit():
    plan = ExperimentPlan("lln", FiniteKernel.swap(), tuple(range(8)), 1, seed=0, root=Dirac(0.0))
    rep = run(plan)
    assert rep.summaries[1]["mean"] == pytest.approx(2 / 3)
    assert rep.summaries[2]["mean"] == pytest.approx(2 / 7)
    assert rep.flags["no_limit_detected"]
    assert not any(v.rule.startswith("lln.") for v in rep.verdicts)


def test_plan_validation():
    with pytest.raises(InvalidParameters):
        ExperimentPlan("bogus", REF, (3,), 1, seed=0)
    with pytest.raises(InvalidParameters):
        ExperimentPlan("lln", REF, (5, 3), 1, seed=0)
    with pytest.raises(InvalidParameters):
        ExperimentPlan("clt", FiniteKernel.swap(), (3,), 1, seed=0, root=Dirac(0.0))
    with pytest.raises(InvalidParameters):
        ExperimentPlan("lln", FiniteKernel.swap(), (3,), 1, seed=0)


def test_tolerances_from_plan():
    p = BarParams(0.5, 1.0, 0.5, 1.0, 1.0, 0.4)
    plan = ExperimentPlan("calibration", p, (6,), 20, seed=3, null_holds=True,
                          tolerances={"size_band": (0.0, 1.0), "ks_level": 0.0})
    assert run(plan).passed


def test_csv_rows(tmp_path):
    rep = run(ExperimentPlan("clt", REF, (4,), 3, seed=1))
    path = tmp_path / "reps.csv"
    rep.write_csv(path)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 3
    assert {"depth", "rep", "seed", "theta_hat0", "theta_hat3"} <= set(rows[0])
    assert float(rows[1]["theta_hat2"]) == rep.records[4][1]["theta_hat"][2]


def test_gap_in_se_units():
    base = BarParams(0.3, 0.7, 0.6, 0.4, 1.0, 0.4)
    alt = params_with_fixed_point_gap(base, 0.5)
    g0, g1 = alt.fixed_points
    assert g0 - g1 == pytest.approx(0.5 * fixed_point_se(alt), rel=1e-10)
    assert alt.theta[:3].tolist() == base.theta[:3].tolist()


def test_aging_scenario_half_width():
    p = aging_scenario()
    g0, g1 = p.fixed_points
    assert g0 - g1 == pytest.approx(0.0012, rel=1e-10)
    half = 1.959963984540054 * fixed_point_se(p) / math.sqrt(511)
    assert half == pytest.approx(0.0011, rel=1e-8)
