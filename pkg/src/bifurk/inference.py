"""Least-squares estimation for the bifurcating autoregressive model.

Per branch the fit is an ordinary simple regression of daughters on mothers.
On an incomplete tree every observed (mother, daughter) pair is used for
``theta``, while the noise variance and sister correlation come from complete
triangles only. Sums run in ascending label order so repeated fits are
bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .bar import StationaryMoments, moments_from_theta
from .errors import DegenerateDesign, InsufficientData, ZeroVariance
from .lineage import Lineage

__all__ = [
    "FitCounts",
    "FitResult",
    "Residuals",
    "asymptotic_covariance",
    "fit",
    "fit_sigma2_rho",
    "fit_theta",
    "fixed_point_gap_ci",
    "fixed_point_gradient",
    "residuals",
]


class FitCounts(NamedTuple):
    n_pairs0: int
    n_pairs1: int
    n_triangles: int


def _regress(x: np.ndarray, y: np.ndarray, constrain_alpha_zero: bool, branch: int):
    if x.size == 0:
        raise InsufficientData(f"no observed mother-daughter pair on branch {branch}")
    if constrain_alpha_zero:
        return 0.0, float(np.mean(y))
    mx, my = np.mean(x), np.mean(y)
    dx = x - mx
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise DegenerateDesign(f"mothers on branch {branch} have zero variance")
    a = float(np.dot(dx, y - my)) / sxx
    return a, float(my - a * mx)


def fit_theta(lineage: Lineage, constrain_alpha_zero: bool = False):
    """Estimate ``(alpha0, beta0, alpha1, beta1)``.

    Returns
    -------
    theta : ndarray of shape (4,)
    counts : tuple of int
        Number of pairs used on branch 0 and on branch 1.
    """
    theta = np.empty(4)
    counts = []
    for eps in (0, 1):
        _, x, y = lineage.pairs(eps)
        theta[2 * eps : 2 * eps + 2] = _regress(x, y, constrain_alpha_zero, eps)
        counts.append(int(x.size))
    return theta, tuple(counts)


@dataclass(frozen=True)
class Residuals:
    """Fitted innovations on complete triangles, in label order."""

    mothers: np.ndarray
    e0: np.ndarray
    e1: np.ndarray

    def __len__(self) -> int:
        return int(self.mothers.size)


def residuals(lineage: Lineage, theta_hat) -> Residuals:
    a0, b0, a1, b1 = (float(t) for t in theta_hat)
    mothers, x, y, z = lineage.triangles()
    return Residuals(mothers, y - a0 * x - b0, z - a1 * x - b1)


def fit_sigma2(res: Residuals) -> float:
    if len(res) == 0:
        raise InsufficientData("no complete triangle")
    return float(np.mean(0.5 * (res.e0**2 + res.e1**2)))


def fit_sigma2_rho(res: Residuals) -> tuple[float, float]:
    """Noise variance and sister correlation from residues.

    ``rho_hat`` cannot leave [-1, 1] since ``2|e0 e1| <= e0**2 + e1**2``.
    """
    s2 = fit_sigma2(res)
    if s2 == 0.0:
        raise ZeroVariance("all residues vanish; rho is undefined")
    rho = float(np.mean(res.e0 * res.e1)) / s2
    return s2, rho


def asymptotic_covariance(theta, sigma2: float, rho: float) -> np.ndarray:
    """Limit covariance of ``sqrt(n) (theta_hat - theta)``.

    Both branch blocks equal ``sigma2 * K`` and the cross blocks ``rho *
    sigma2 * K``, where ``K`` is the inverse second-moment matrix of
    ``(1, X)`` under the stationary law.
    """
    a0, b0, a1, b1 = (float(t) for t in theta)
    m = moments_from_theta(a0, b0, a1, b1, sigma2)
    K = np.array([[1.0, -m.mu1], [-m.mu1, m.mu2]]) / m.variance
    return sigma2 * np.kron(np.array([[1.0, rho], [rho, 1.0]]), K)


def fixed_point_gradient(theta) -> np.ndarray:
    """Gradient of ``gamma0 - gamma1`` with respect to ``theta``."""
    a0, b0, a1, b1 = (float(t) for t in theta)
    return np.array(
        [b0 / (1 - a0) ** 2, 1 / (1 - a0), -b1 / (1 - a1) ** 2, -1 / (1 - a1)]
    )


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    sigma2_hat: float
    rho_hat: float
    gamma_hat: tuple[float, float]
    counts: FitCounts
    mu_hats: StationaryMoments
    sigma_prime_hat: np.ndarray
    constrained: bool = False

    @property
    def n_effective(self) -> int:
        return self.counts.n_triangles

    @property
    def gap(self) -> float:
        return self.gamma_hat[0] - self.gamma_hat[1]

    def to_dict(self) -> dict:
        return {
            "theta_hat": [float(t) for t in self.theta_hat],
            "sigma2_hat": self.sigma2_hat,
            "rho_hat": self.rho_hat,
            "gamma_hat": list(self.gamma_hat),
            "mu_hats": [self.mu_hats.mu1, self.mu_hats.mu2],
            "sigma_prime_hat": self.sigma_prime_hat.tolist(),
            "counts": self.counts._asdict(),
            "constrain_alpha_zero": self.constrained,
        }


def fit(lineage: Lineage, constrain_alpha_zero: bool = False) -> FitResult:
    """Full plug-in fit: ``theta``, noise parameters, fixed points, covariance.

    ``rho_hat`` is NaN when every residue vanishes. The covariance is NaN
    when the plug-in stationary variance is not positive.
    """
    theta, (n0, n1) = fit_theta(lineage, constrain_alpha_zero)
    res = residuals(lineage, theta)
    s2 = fit_sigma2(res)
    rho = fit_sigma2_rho(res)[1] if s2 > 0 else math.nan
    a0, b0, a1, b1 = theta
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = (float(np.divide(b0, 1 - a0)), float(np.divide(b1, 1 - a1)))
        mu = moments_from_theta(a0, b0, a1, b1, s2)
        if mu.variance > 0 and np.isfinite(mu.mu2):
            sp = asymptotic_covariance(theta, s2, rho)
        else:
            sp = np.full((4, 4), np.nan)
    theta.setflags(write=False)
    sp.setflags(write=False)
    return FitResult(
        theta_hat=theta,
        sigma2_hat=s2,
        rho_hat=rho,
        gamma_hat=gamma,
        counts=FitCounts(n0, n1, len(res)),
        mu_hats=StationaryMoments(float(mu.mu1), float(mu.mu2), float(mu.variance)),
        sigma_prime_hat=sp,
        constrained=constrain_alpha_zero,
    )


def fixed_point_gap_ci(result: FitResult, level: float = 0.95) -> tuple[float, float]:
    """Delta-method interval for ``gamma0 - gamma1``.

    Returns ``(gap, half_width)`` with ``half_width = z * s / sqrt(n)``,
    ``s**2 = dg Sigma' dg^T`` and ``n`` the triangle count.
    """
    dg = fixed_point_gradient(result.theta_hat)
    s2 = float(dg @ result.sigma_prime_hat @ dg)
    z = math.sqrt(2.0) * float(special.erfinv(level))
    return result.gap, z * math.sqrt(s2 / result.n_effective)
