"""Wald-type tests of branch asymmetry.

All statistics use the triangle count of the fit as the effective sample
size and the plug-in stationary moments of the fitted parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import inference
from .errors import DegenerateVariance, UnstableFit
from .inference import FitResult, fixed_point_gradient
from .lineage import Lineage

__all__ = [
    "TestReport",
    "chi2_survival",
    "normal_survival",
    "run_test",
    "test_equal_alpha",
    "test_equal_beta",
    "test_equal_dynamics",
    "test_equal_fixed_point",
    "test_sister_difference",
]

_RHO_GUARD = 1e-12


def chi2_survival(x: float, k: int) -> float:
    """``P(chi2(k) >= x)`` via the regularized upper incomplete gamma."""
    if x < 0 or math.isnan(x):
        raise ValueError("chi-square statistic must be >= 0")
    if k < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if k == 2:
        return math.exp(-0.5 * x)
    return float(special.gammaincc(0.5 * k, 0.5 * x))


def normal_survival(z: float) -> float:
    """``P(N(0, 1) >= z)``."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    dof: int | str
    p_value: float
    n_effective: int
    null: str
    alternative: str
    extra: dict = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    def reject(self, level: float) -> bool:
        return self.p_value < level

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "n_effective": self.n_effective,
            "null": self.null,
            "alternative": self.alternative,
        }
        out.update(self.extra)
        return out


def _noise_scale(fit: FitResult) -> float:
    """``2 sigma2 (1 - rho)`` after guarding ``rho``."""
    s2, rho = fit.sigma2_hat, fit.rho_hat
    if not s2 > 0 or not math.isfinite(s2):
        raise DegenerateVariance("sigma2_hat must be positive")
    if not math.isfinite(rho) or abs(rho) > 1 + 1e-9:
        raise DegenerateVariance(f"rho_hat = {rho} is outside [-1, 1]")
    rho = min(max(rho, -1 + _RHO_GUARD), 1 - _RHO_GUARD)
    return 2.0 * s2 * (1.0 - rho)


def _stationary_variance(fit: FitResult) -> float:
    var = fit.mu_hats.variance
    if not var > 0 or not math.isfinite(var):
        raise DegenerateVariance("plug-in stationary variance is not positive")
    return var


def _n(fit: FitResult, n) -> int:
    n = fit.n_effective if n is None else int(n)
    if n < 1:
        raise DegenerateVariance("no complete triangle")
    return n


def test_equal_dynamics(fit: FitResult, n: int | None = None) -> TestReport:
    """Joint test of ``(alpha0, beta0) == (alpha1, beta1)``; chi2(2)."""
    n = _n(fit, n)
    scale = _noise_scale(fit)
    var = _stationary_variance(fit)
    a0, b0, a1, b1 = fit.theta_hat
    da, db = a0 - a1, b0 - b1
    stat = n / scale * (da * da * var + (da * fit.mu_hats.mu1 + db) ** 2)
    return TestReport(
        "equal_dynamics", float(stat), 2, chi2_survival(stat, 2), n,
        "(alpha0, beta0) = (alpha1, beta1)", "(alpha0, beta0) != (alpha1, beta1)",
    )


def test_equal_alpha(fit: FitResult, n: int | None = None) -> TestReport:
    """Test of ``alpha0 == alpha1``; chi2(1)."""
    n = _n(fit, n)
    scale = _noise_scale(fit)
    var = _stationary_variance(fit)
    da = fit.theta_hat[0] - fit.theta_hat[2]
    stat = n * da * da * var / scale
    return TestReport(
        "equal_alpha", float(stat), 1, chi2_survival(stat, 1), n,
        "alpha0 = alpha1", "alpha0 != alpha1",
    )


def test_equal_beta(fit: FitResult, n: int | None = None) -> TestReport:
    """Test of ``beta0 == beta1``; chi2(1).

    Wald statistic for ``g(theta) = beta0 - beta1``: its asymptotic variance is
    ``2 sigma2 (1 - rho) K22`` with ``K22 = mu2 / (mu2 - mu1**2)``.
    """
    n = _n(fit, n)
    scale = _noise_scale(fit)
    var = _stationary_variance(fit)
    k22 = fit.mu_hats.mu2 / var
    db = fit.theta_hat[1] - fit.theta_hat[3]
    stat = n * db * db / (scale * k22)
    return TestReport(
        "equal_beta", float(stat), 1, chi2_survival(stat, 1), n,
        "beta0 = beta1", "beta0 != beta1",
    )


def test_equal_fixed_point(fit: FitResult, n: int | None = None) -> TestReport:
    """Test of ``gamma0 == gamma1`` with ``gamma = beta / (1 - alpha)``; chi2(1).

    Delta method: ``s**2 = dg Sigma' dg^T`` with ``dg`` the gradient of
    ``gamma0 - gamma1``.
    """
    n = _n(fit, n)
    a0, _, a1, _ = fit.theta_hat
    if not (abs(a0) < 1 and abs(a1) < 1):
        raise UnstableFit(f"fitted alphas ({a0}, {a1}) are not in (-1, 1)")
    _noise_scale(fit)
    _stationary_variance(fit)
    dg = fixed_point_gradient(fit.theta_hat)
    s2 = float(dg @ fit.sigma_prime_hat @ dg)
    if not s2 > 0:
        raise DegenerateVariance("delta-method variance is not positive")
    gap = fit.gamma_hat[0] - fit.gamma_hat[1]
    stat = n * gap * gap / s2
    return TestReport(
        "equal_fixed_point", float(stat), 1, chi2_survival(stat, 1), n,
        "gamma0 = gamma1", "gamma0 != gamma1",
        {"gap": gap, "se": math.sqrt(s2 / n)},
    )


def test_sister_difference(lineage: Lineage, fit_constrained: FitResult) -> TestReport:
    """Normalized sum of sister differences, for data with both alphas zero.

    Validity needs the generating alphas to vanish; this is not checked. The
    two-sided p-value is reported, together with the one-sided values for
    ``beta0 > beta1`` (``p_upper``) and ``beta0 < beta1`` (``p_lower``).
    """
    _, _, y, z = lineage.triangles()
    n = _n(fit_constrained, y.size)
    scale = _noise_scale(fit_constrained)
    xi = float(np.sum(y - z)) / math.sqrt(n * scale)
    p_upper = normal_survival(xi)
    p_lower = normal_survival(-xi)
    p_two = min(1.0, 2.0 * min(p_upper, p_lower))
    return TestReport(
        "sister_difference", xi, "normal", p_two, n,
        "beta0 = beta1 (alphas zero)", "beta0 != beta1",
        {"p_upper": p_upper, "p_lower": p_lower},
    )


# the public names start with "test_"; keep pytest from collecting them
for _fn in (
    test_equal_dynamics,
    test_equal_alpha,
    test_equal_beta,
    test_equal_fixed_point,
    test_sister_difference,
):
    _fn.__test__ = False

TESTS = {
    "equal-dynamics": test_equal_dynamics,
    "equal-alpha": test_equal_alpha,
    "equal-beta": test_equal_beta,
    "equal-fixed-point": test_equal_fixed_point,
}


def run_test(lineage: Lineage, which: str) -> TestReport:
    """Fit ``lineage`` as the test requires and run the test named ``which``."""
    if which == "sister":
        constrained = inference.fit(lineage, constrain_alpha_zero=True)
        return test_sister_difference(lineage, constrained)
    try:
        fn = TESTS[which]
    except KeyError:
        raise ValueError(f"unknown test {which!r}") from None
    return fn(inference.fit(lineage))
