"""Monte Carlo checks of the limit theorems and of test calibration.

An :class:`ExperimentPlan` names a model, a list of depths, a replication
count and a base seed. Replication ``k`` at depth ``r`` simulates with seed
``derive_seed(seed, k, r)``, so replications can run in any order or be
split across several runs and pooled. Per-replication records are kept and
every summary is a pure function of them, in replication order.

Depth conventions: the law-of-large-numbers run averages over ``T_r`` of a
depth-``r`` tree. Estimation-based runs (clt, consistency, calibration,
coverage) simulate depth ``r + 1`` so the fit at ``r`` uses the ``|T_r|``
triangles rooted in ``T_r``.

Verdicts are tagged with rule names; thresholds come from
``plan.tolerances`` on top of :data:`DEFAULT_TOLERANCES`.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, special

from . import hypotest, inference
from .bar import BarParams, Stationary, simulate_bar, stationary_moments
from .empirics import Generation, Subtree, node_average, triangle_average
from .errors import BifurkError, InvalidParameters
from .inference import asymptotic_covariance, fixed_point_gradient
from .kernel import (
    Categorical,
    Dirac,
    FiniteKernel,
    exact_gen_second_moment,
    simulate_tmc,
    stationary_distribution,
)
from .ks import ks_normal, ks_uniform
from .rng import derive_seed

__all__ = [
    "DEFAULT_TOLERANCES",
    "ExperimentPlan",
    "ExperimentReport",
    "Verdict",
    "aging_scenario",
    "fixed_point_se",
    "params_with_fixed_point_gap",
    "run",
    "run_calibration",
    "run_clt",
    "run_consistency",
    "run_coverage",
    "run_lln",
]

KINDS = ("lln", "clt", "consistency", "calibration", "coverage")
LEVELS = (0.01, 0.05, 0.10)

DEFAULT_TOLERANCES = {
    "lln_bias_se": 3.0,
    "lln_l2_ratio": 0.5,
    "lln_moment_se": 4.0,
    "oscillation": 0.05,
    "clt_frobenius": 0.15,
    "ks_level": 0.01,
    "cross_block_abs": 0.1,
    "sister_variance_rel": 0.10,
    "size_level": 0.05,
    "size_band": (0.035, 0.065),
    "power_level": 0.05,
    "power_min": 0.99,
    "consistency_max": 0.05,
    "positive_gap_min": 0.80,
    "coverage_band": (0.90, 0.98),
    "coverage_level": 0.95,
}

# name -> (arity, vectorized function)
FUNCTIONALS = {
    "1": (1, lambda x: np.ones_like(x)),
    "x": (1, lambda x: x),
    "x^2": (1, lambda x: x * x),
    "y-z": (3, lambda x, y, z: y - z),
}


def threads() -> int:
    """Worker count from ``BIFURK_THREADS`` (default 1)."""
    raw = os.environ.get("BIFURK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidParameters(f"BIFURK_THREADS must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class ExperimentPlan:
    kind: str
    model: BarParams | FiniteKernel
    depths: tuple[int, ...]
    replications: int
    seed: int
    root: object = None
    functional: str = "x"
    test: str = "equal-dynamics"
    null_holds: bool | None = None
    levels: tuple[float, ...] = LEVELS
    tolerances: dict = field(default_factory=dict)
    replication_offset: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameters(f"unknown experiment kind {self.kind!r}")
        depths = tuple(int(r) for r in self.depths)
        if not depths or any(r < 0 for r in depths):
            raise InvalidParameters("depths must be a non-empty list of r >= 0")
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise InvalidParameters("depths must be strictly increasing")
        object.__setattr__(self, "depths", depths)
        if self.replications < 1:
            raise InvalidParameters("replications must be >= 1")
        if self.functional not in FUNCTIONALS:
            raise InvalidParameters(f"unknown functional {self.functional!r}")
        if self.kind != "lln" and not isinstance(self.model, BarParams):
            raise InvalidParameters(f"{self.kind} experiments need a BAR model")
        if self.root is None:
            root = Stationary(self.model) if isinstance(self.model, BarParams) else None
            if root is None:
                raise InvalidParameters("finite-kernel plans need an explicit root")
            object.__setattr__(self, "root", root)

    def tol(self, key):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def key(self) -> tuple:
        """Everything except the replication range, for pooling checks."""
        return (
            self.kind,
            repr(self.model),
            self.depths,
            self.seed,
            repr(self.root),
            self.functional,
            self.test,
            self.null_holds,
            tuple(self.levels),
            tuple(sorted((k, repr(v)) for k, v in self.tolerances.items())),
        )

    def seed_for(self, k: int, r: int) -> int:
        return derive_seed(self.seed, self.replication_offset + k, r)


@dataclass(frozen=True)
class Verdict:
    rule: str
    passed: bool
    value: float
    threshold: object
    depth: int | None = None

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "passed": bool(self.passed),
            "value": self.value,
            "threshold": list(self.threshold)
            if isinstance(self.threshold, tuple)
            else self.threshold,
            "depth": self.depth,
        }


@dataclass
class ExperimentReport:
    plan: ExperimentPlan
    records: dict[int, list[dict]]
    summaries: dict[int, dict]
    verdicts: list[Verdict]
    flags: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, rule: str, depth: int | None = None) -> Verdict:
        for v in self.verdicts:
            if v.rule == rule and (depth is None or v.depth == depth):
                return v
        raise KeyError(rule)

    def to_dict(self) -> dict:
        p = self.plan
        return {
            "kind": p.kind,
            "seed": p.seed,
            "replications": p.replications,
            "replication_offset": p.replication_offset,
            "depths": list(p.depths),
            "functional": p.functional,
            "test": p.test if p.kind == "calibration" else None,
            "summaries": {str(r): s for r, s in self.summaries.items()},
            "verdicts": [v.to_dict() for v in self.verdicts],
            "flags": self.flags,
            "passed": self.passed,
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for r, recs in self.records.items():
            for rec in recs:
                row = {"depth": r}
                for key, val in rec.items():
                    if isinstance(val, (list, tuple, np.ndarray)):
                        for j, v in enumerate(val):
                            row[f"{key}{j}"] = v
                    else:
                        row[key] = val
                rows.append(row)
        return rows

    def write_csv(self, path) -> None:
        rows = self.csv_rows()
        fields = list(dict.fromkeys(k for row in rows for k in row))
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

    @classmethod
    def merge(cls, *reports: ExperimentReport) -> ExperimentReport:
        """Pool runs of one plan that differ only in replication ranges."""
        if not reports:
            raise ValueError("nothing to merge")
        ordered = sorted(reports, key=lambda rep: rep.plan.replication_offset)
        base = ordered[0].plan
        expected = base.replication_offset
        for rep in ordered:
            if rep.plan.key() != base.key():
                raise ValueError("reports come from different plans")
            if rep.plan.replication_offset != expected:
                raise ValueError("replication ranges overlap or leave a gap")
            expected += rep.plan.replications
        plan = replace(base, replications=expected - base.replication_offset)
        records = {r: [rec for rep in ordered for rec in rep.records[r]] for r in base.depths}
        return _finish(plan, records)


def _map(fn, items):
    n = threads()
    if n == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _simulate(plan: ExperimentPlan, depth: int, seed: int):
    if isinstance(plan.model, BarParams):
        return simulate_bar(plan.model, depth, seed, plan.root)
    return simulate_tmc(plan.model, plan.root, depth, seed)


def _collect(plan: ExperimentPlan, one) -> dict[int, list[dict]]:
    records = {}
    for r in plan.depths:
        jobs = [(k, r, plan.seed_for(k, r)) for k in range(plan.replications)]
        records[r] = _map(lambda job: one(*job), jobs)
    return records


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(np.mean(x)), math.nan
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


# ---------------------------------------------------------------- lln


def lln_limit(plan: ExperimentPlan) -> float:
    """Almost-sure limit of the subtree average of the plan's functional."""
    name = plan.functional
    model = plan.model
    if isinstance(model, BarParams):
        m = stationary_moments(model)
        a0, b0, a1, b1 = model.theta
        return {"1": 1.0, "x": m.mu1, "x^2": m.mu2, "y-z": (a0 - a1) * m.mu1 + b0 - b1}[name]
    pi = stationary_distribution(model)
    s = model.states
    if name == "y-z":
        return float(pi @ (model.P0 @ s - model.P1 @ s))
    return float(pi @ FUNCTIONALS[name][1](s))


def _root_law(plan: ExperimentPlan):
    """Root distribution as a probability vector over the kernel's states."""
    kernel, root = plan.model, plan.root
    if isinstance(root, Dirac):
        nu = np.zeros(kernel.size)
        nu[kernel.index_of(root.x)] = 1.0
        return nu
    if isinstance(root, Categorical) and np.array_equal(root.states, kernel.states):
        return root.probs
    return None


def _lln_one(plan: ExperimentPlan, k: int, r: int, seed: int) -> dict:
    lineage = _simulate(plan, r, seed)
    arity, f = FUNCTIONALS[plan.functional]
    rec = {"rep": plan.replication_offset + k, "seed": seed}
    if arity == 1:
        rec["mean"] = node_average(lineage, f, Subtree(r))[0]
        rec["gen_mean"] = node_average(lineage, f, Generation(r))[0]
    else:
        rec["mean"] = triangle_average(lineage, f, Subtree(max(r - 1, 0)))[0] if r else math.nan
    return rec


def _summarize_lln(plan: ExperimentPlan, r: int, recs: list[dict], limit: float) -> dict:
    means = np.array([rec["mean"] for rec in recs])
    mean, se = _mean_se(means)
    out = {
        "mean": mean,
        "se": se,
        "limit": limit,
        "bias": mean - limit,
        "l2_error": float(np.sqrt(np.mean((means - limit) ** 2))),
    }
    if "gen_mean" in recs[0]:
        sq = np.array([rec["gen_mean"] for rec in recs]) ** 2
        out["gen_second_moment"], out["gen_second_moment_se"] = _mean_se(sq)
    return out


def _oscillates(plan: ExperimentPlan, summaries: dict[int, dict]) -> bool | None:
    """Flag a subtree mean that keeps jumping at the deepest depths.

    Looks at the last two steps between consecutive depths. A convergent
    sequence has shrinking steps; a step larger than the oscillation
    tolerance plus four combined standard errors, twice in a row, is taken
    as evidence of no limit. Needs at least three depths.
    """
    depths = plan.depths
    if len(depths) < 3:
        return None
    tol = plan.tol("oscillation")
    jumps = []
    for a, b in zip(depths[-3:], depths[-2:]):
        sa, sb = summaries[a], summaries[b]
        se = math.hypot(np.nan_to_num(sa["se"]), np.nan_to_num(sb["se"]))
        jumps.append(abs(sb["mean"] - sa["mean"]) > tol + 4 * se)
    return all(jumps)


def _verdicts_lln(plan: ExperimentPlan, summaries: dict[int, dict], flags: dict) -> list[Verdict]:
    out = []
    if isinstance(plan.model, FiniteKernel) and "gen_second_moment" in summaries[plan.depths[0]]:
        nu = _root_law(plan)
        if nu is not None:
            f = FUNCTIONALS[plan.functional][1](plan.model.states)
            f = np.broadcast_to(f, plan.model.states.shape)
            k = plan.tol("lln_moment_se")
            for r in plan.depths:
                s = summaries[r]
                exact = exact_gen_second_moment(plan.model, nu, f, r)
                s["gen_second_moment_exact"] = exact
                gap = abs(s["gen_second_moment"] - exact)
                bound = k * np.nan_to_num(s["gen_second_moment_se"]) + 1e-12
                out.append(Verdict("exact.gen_second_moment", gap <= bound, gap, bound, r))
    no_limit = _oscillates(plan, summaries)
    flags["no_limit_detected"] = bool(no_limit)
    flags["oscillation_checked"] = no_limit is not None
    if no_limit:
        return out
    last, first = summaries[plan.depths[-1]], summaries[plan.depths[0]]
    k = plan.tol("lln_bias_se")
    bound = k * np.nan_to_num(last["se"])
    out.append(Verdict("lln.bias_within_se", abs(last["bias"]) <= bound, abs(last["bias"]), bound, plan.depths[-1]))
    if len(plan.depths) > 1:
        ratio = plan.tol("lln_l2_ratio")
        value = last["l2_error"] / first["l2_error"] if first["l2_error"] > 0 else 0.0
        out.append(Verdict("lln.l2_shrinks", value < ratio or last["l2_error"] == 0.0, value, ratio, plan.depths[-1]))
    return out


def run_lln(plan: ExperimentPlan) -> ExperimentReport:
    """Subtree averages against their limit, depth by depth.

    Reports mean, standard error, bias and L2 error of the subtree average.
    On finite kernels the simulated second moment of each generation average
    is also checked against :func:`exact_gen_second_moment`. If the means
    keep oscillating no law-of-large-numbers verdict is issued and the
    ``no_limit_detected`` flag is raised instead.
    """
    return _finish(plan, _collect(plan, lambda k, r, s: _lln_one(plan, k, r, s)))


# ---------------------------------------------------------------- clt / consistency


def _fit_one(plan: ExperimentPlan, k: int, r: int, seed: int) -> dict:
    lineage = _simulate(plan, r + 1, seed)
    rec = {"rep": plan.replication_offset + k, "seed": seed}
    try:
        res = inference.fit(lineage)
    except BifurkError as exc:
        rec.update(ok=False, error=type(exc).__name__)
        return rec
    p = plan.model
    rec.update(
        ok=True,
        n=res.n_effective,
        theta_hat=[float(t) for t in res.theta_hat],
        sigma2_hat=res.sigma2_hat,
        rho_hat=res.rho_hat,
    )
    if p.alpha0 == 0 and p.alpha1 == 0:
        _, _, y, z = lineage.triangles()
        rec["sister_sum"] = float(np.sum(y - z - (p.beta0 - p.beta1))) / math.sqrt(y.size)
    return rec


def _summarize_fit(plan: ExperimentPlan, r: int, recs: list[dict]) -> dict:
    p = plan.model
    good = [rec for rec in recs if rec["ok"]]
    out = {"replications": len(recs), "failures": len(recs) - len(good)}
    if not good:
        return out
    n = good[0]["n"]
    theta = np.array([rec["theta_hat"] for rec in good])
    z = math.sqrt(n) * (theta - p.theta)
    target = asymptotic_covariance(p.theta, p.sigma2, p.rho)
    cov = np.cov(z, rowvar=False) if len(good) > 1 else np.full((4, 4), np.nan)
    ks = [ks_normal(z[:, j] / math.sqrt(target[j, j])) for j in range(4)]
    s2 = np.array([rec["sigma2_hat"] for rec in good])
    rho = np.array([rec["rho_hat"] for rec in good])
    out.update(
        n=n,
        mean_scaled_error=z.mean(axis=0).tolist(),
        covariance=cov.tolist(),
        sigma_prime=target.tolist(),
        frobenius_rel=float(np.linalg.norm(cov - target) / np.linalg.norm(target)),
        cross_block_max=float(np.max(np.abs(cov[:2, 2:]))),
        ks_distance=[d for d, _ in ks],
        ks_pvalue=[pv for _, pv in ks],
        median_theta_error=float(np.median(np.linalg.norm(theta - p.theta, axis=1))),
        median_sigma2_error=float(np.median(np.abs(s2 - p.sigma2))),
        median_rho_error=float(np.median(np.abs(rho - p.rho))),
    )
    if "sister_sum" in good[0]:
        sums = np.array([rec["sister_sum"] for rec in good])
        out["sister_variance"] = float(np.var(sums, ddof=1)) if sums.size > 1 else math.nan
        out["sister_variance_target"] = 2 * p.sigma2 * (1 - p.rho)
    return out


def _verdicts_clt(plan: ExperimentPlan, summaries: dict[int, dict]) -> list[Verdict]:
    out = []
    for r in plan.depths:
        s = summaries[r]
        if "n" not in s:
            out.append(Verdict("clt.fits", False, s["failures"], 0, r))
            continue
        tol = plan.tol("clt_frobenius")
        out.append(Verdict("clt.covariance", s["frobenius_rel"] <= tol, s["frobenius_rel"], tol, r))
        level = plan.tol("ks_level")
        for j, pv in enumerate(s["ks_pvalue"]):
            out.append(Verdict(f"clt.ks_theta{j}", pv > level, pv, level, r))
        if plan.model.rho == 0:
            tol = plan.tol("cross_block_abs")
            out.append(Verdict("clt.cross_block", s["cross_block_max"] <= tol, s["cross_block_max"], tol, r))
        if "sister_variance" in s:
            rel = abs(s["sister_variance"] / s["sister_variance_target"] - 1)
            tol = plan.tol("sister_variance_rel")
            out.append(Verdict("clt.sister_variance", rel <= tol, rel, tol, r))
    return out


def _verdicts_consistency(plan: ExperimentPlan, summaries: dict[int, dict]) -> list[Verdict]:
    out = []
    cap = plan.tol("consistency_max")
    last = plan.depths[-1]
    for key in ("median_theta_error", "median_sigma2_error", "median_rho_error"):
        if any(key not in summaries[r] for r in plan.depths):
            out.append(Verdict(f"consistency.{key}", False, math.nan, cap, last))
            continue
        seq = [summaries[r][key] for r in plan.depths]
        monotone = all(b <= a for a, b in zip(seq, seq[1:]))
        out.append(Verdict(f"consistency.{key}.non_increasing", monotone, seq[-1] - seq[0], 0.0, last))
        out.append(Verdict(f"consistency.{key}.final", seq[-1] < cap, seq[-1], cap, last))
    return out


def run_clt(plan: ExperimentPlan) -> ExperimentReport:
    """Covariance and marginal normality of ``sqrt(n) (theta_hat - theta)``.

    Fit failures are counted, not raised. With both alphas zero, the
    variance of the centered, scaled sister-difference sum is also compared
    with ``2 sigma2 (1 - rho)``.
    """
    return _finish(plan, _collect(plan, lambda k, r, s: _fit_one(plan, k, r, s)))


def run_consistency(plan: ExperimentPlan) -> ExperimentReport:
    """Median estimation errors across depths; same runs as :func:`run_clt`."""
    return _finish(plan, _collect(plan, lambda k, r, s: _fit_one(plan, k, r, s)))


# ---------------------------------------------------------------- calibration


def _test_one(plan: ExperimentPlan, k: int, r: int, seed: int) -> dict:
    lineage = _simulate(plan, r + 1, seed)
    rec = {"rep": plan.replication_offset + k, "seed": seed}
    try:
        rep = hypotest.run_test(lineage, plan.test)
    except BifurkError as exc:
        rec.update(ok=False, error=type(exc).__name__)
        return rec
    rec.update(ok=True, statistic=rep.statistic, p_value=rep.p_value)
    return rec


def _summarize_calibration(plan: ExperimentPlan, r: int, recs: list[dict]) -> dict:
    good = [rec for rec in recs if rec["ok"]]
    out = {"replications": len(recs), "failures": len(recs) - len(good)}
    if not good:
        return out
    p = np.array([rec["p_value"] for rec in good])
    stat = np.array([rec["statistic"] for rec in good])
    d, pv = ks_uniform(p)
    out.update(
        rejection_rate={str(a): float(np.mean(p < a)) for a in plan.levels},
        ks_distance=d,
        ks_pvalue=pv,
        median_statistic=float(np.median(stat)),
    )
    return out


def _rate(s: dict, level: float) -> float:
    return s["rejection_rate"][str(level)]


def _verdicts_calibration(plan: ExperimentPlan, summaries: dict[int, dict]) -> list[Verdict]:
    out = []
    for r in plan.depths:
        s = summaries[r]
        if "rejection_rate" not in s:
            out.append(Verdict("calibration.fits", False, s["failures"], 0, r))
            continue
        if plan.null_holds:
            lo, hi = plan.tol("size_band")
            rate = _rate(s, plan.tol("size_level"))
            out.append(Verdict("calibration.size", lo <= rate <= hi, rate, (lo, hi), r))
            level = plan.tol("ks_level")
            out.append(Verdict("calibration.pvalue_uniform", s["ks_pvalue"] > level, s["ks_pvalue"], level, r))
        elif plan.null_holds is False:
            floor = plan.tol("power_min")
            rate = _rate(s, plan.tol("power_level"))
            out.append(Verdict("calibration.power", rate >= floor, rate, floor, r))
    return out


def run_calibration(plan: ExperimentPlan) -> ExperimentReport:
    """Rejection rates of ``plan.test`` at ``plan.levels``.

    A test rejects when its p-value is below the level. With
    ``null_holds=True`` the size and the uniformity of p-values are judged;
    with ``False`` the power; with ``None`` only rates are reported.
    """
    levels = tuple(plan.levels)
    for lvl in (plan.tol("size_level"), plan.tol("power_level")):
        if lvl not in levels:
            levels += (lvl,)
    plan = replace(plan, levels=levels)
    return _finish(plan, _collect(plan, lambda k, r, s: _test_one(plan, k, r, s)))


# ---------------------------------------------------------------- coverage


def _coverage_one(plan: ExperimentPlan, k: int, r: int, seed: int) -> dict:
    lineage = _simulate(plan, r + 1, seed)
    rec = {"rep": plan.replication_offset + k, "seed": seed}
    try:
        res = inference.fit(lineage)
        gap, half = inference.fixed_point_gap_ci(res, plan.tol("coverage_level"))
    except BifurkError as exc:
        rec.update(ok=False, error=type(exc).__name__)
        return rec
    rec.update(ok=True, gap_hat=gap, half_width=half)
    return rec


def _summarize_coverage(plan: ExperimentPlan, r: int, recs: list[dict]) -> dict:
    good = [rec for rec in recs if rec["ok"]]
    out = {"replications": len(recs), "failures": len(recs) - len(good)}
    if not good:
        return out
    g0, g1 = plan.model.fixed_points
    truth = g0 - g1
    gap = np.array([rec["gap_hat"] for rec in good])
    half = np.array([rec["half_width"] for rec in good])
    out.update(
        true_gap=truth,
        mean_gap=float(gap.mean()),
        median_half_width=float(np.median(half)),
        positive_fraction=float(np.mean(gap > 0)),
        coverage=float(np.mean(np.abs(gap - truth) <= half)),
    )
    return out


def _verdicts_coverage(plan: ExperimentPlan, summaries: dict[int, dict]) -> list[Verdict]:
    out = []
    for r in plan.depths:
        s = summaries[r]
        if "coverage" not in s:
            out.append(Verdict("coverage.fits", False, s["failures"], 0, r))
            continue
        floor = plan.tol("positive_gap_min")
        out.append(Verdict("coverage.sign", s["positive_fraction"] >= floor, s["positive_fraction"], floor, r))
        lo, hi = plan.tol("coverage_band")
        out.append(Verdict("coverage.interval", lo <= s["coverage"] <= hi, s["coverage"], (lo, hi), r))
    return out


def run_coverage(plan: ExperimentPlan) -> ExperimentReport:
    """Sign recovery and delta-method interval coverage for ``gamma0 - gamma1``."""
    return _finish(plan, _collect(plan, lambda k, r, s: _coverage_one(plan, k, r, s)))


# ---------------------------------------------------------------- dispatch


def _finish(plan: ExperimentPlan, records: dict[int, list[dict]]) -> ExperimentReport:
    flags = {}
    if plan.kind == "lln":
        limit = lln_limit(plan)
        summaries = {r: _summarize_lln(plan, r, records[r], limit) for r in plan.depths}
        verdicts = _verdicts_lln(plan, summaries, flags)
    elif plan.kind in ("clt", "consistency"):
        summaries = {r: _summarize_fit(plan, r, records[r]) for r in plan.depths}
        if plan.kind == "clt":
            verdicts = _verdicts_clt(plan, summaries)
        else:
            verdicts = _verdicts_consistency(plan, summaries)
    elif plan.kind == "calibration":
        summaries = {r: _summarize_calibration(plan, r, records[r]) for r in plan.depths}
        verdicts = _verdicts_calibration(plan, summaries)
    else:
        summaries = {r: _summarize_coverage(plan, r, records[r]) for r in plan.depths}
        verdicts = _verdicts_coverage(plan, summaries)
    return ExperimentReport(plan, records, summaries, verdicts, flags)


_RUNNERS = {
    "lln": run_lln,
    "clt": run_clt,
    "consistency": run_consistency,
    "calibration": run_calibration,
    "coverage": run_coverage,
}


def run(plan: ExperimentPlan) -> ExperimentReport:
    return _RUNNERS[plan.kind](plan)


# ---------------------------------------------------------------- scenarios


def fixed_point_se(params: BarParams) -> float:
    """Asymptotic sd ``s`` of ``sqrt(n) (gamma0_hat - gamma1_hat)``."""
    dg = fixed_point_gradient(params.theta)
    cov = asymptotic_covariance(params.theta, params.sigma2, params.rho)
    return math.sqrt(float(dg @ cov @ dg))


def params_with_fixed_point_gap(base: BarParams, units: float) -> BarParams:
    """Move ``beta1`` so that ``gamma0 - gamma1 = units * s``.

    ``s`` is :func:`fixed_point_se` at the returned parameters, so the gap is
    measured in units of the asymptotic standard deviation (not divided by
    ``sqrt(n)``).
    """
    a1 = base.alpha1
    g0 = base.fixed_points[0]

    def excess(g1):
        p = replace(base, beta1=g1 * (1 - a1))
        return g0 - g1 - units * fixed_point_se(p)

    width = max(1.0, abs(g0))
    lo = g0 - 100 * width * max(units, 1.0)
    g1 = optimize.brentq(excess, lo, g0, xtol=1e-14)
    return replace(base, beta1=g1 * (1 - a1))


def aging_scenario(
    r: int = 8,
    alpha: float = 0.4,
    gamma1: float = 0.036,
    gap: float = 0.0012,
    half_width: float = 0.0011,
    rho: float = 0.5,
    level: float = 0.95,
) -> BarParams:
    """Small fixed-point gap with noise tuned to a target interval width.

    Both branches share ``alpha``; ``gamma0 = gamma1 + gap``. ``sigma2`` is
    solved so that the delta-method half-width ``z s / sqrt(|T_r|)`` at the
    true parameters equals ``half_width``.
    """
    n = (1 << (r + 1)) - 1
    z = math.sqrt(2.0) * float(special.erfinv(level))
    g0 = gamma1 + gap

    def build(sigma):
        return BarParams(alpha, g0 * (1 - alpha), alpha, gamma1 * (1 - alpha), sigma * sigma, rho)

    def excess(sigma):
        return z * fixed_point_se(build(sigma)) / math.sqrt(n) - half_width

    hi = 1e-6
    while excess(hi) < 0:
        hi *= 2
    return build(optimize.brentq(excess, hi / 2 if hi > 1e-6 else 1e-12, hi, xtol=1e-16))
