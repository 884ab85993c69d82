"""Quantiles and test-inversion confidence intervals shared by the estimators."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .exceptions import ResamplingDegenerateError

GAUSS = "gauss"
RANDOMIZATION = "randomization"
PERMUTATION = "permutation"
BOOTSTRAP = "bootstrap"

# Variance estimates at or below this (relative) size are rounding residue of
# an exact zero and are treated as degenerate.
DEGENERATE_TOL = 1e-12


def z(p):
    """Standard normal ``p``-quantile."""
    return float(norm.ppf(p))


def empirical_quantile(values, p):
    """Inverse-ECDF quantile: the ``ceil(B p)``-th order statistic."""
    values = np.asarray(values, dtype=float)
    return float(np.quantile(values, p, method="inverted_cdf"))


@dataclass(frozen=True)
class Quantiles:
    """Critical values for one-sided and equal-tailed two-sided intervals.

    ``upper`` is the (1 - alpha)-quantile, ``lower`` the alpha-quantile,
    ``two_upper``/``two_lower`` the (1 - alpha/2)/(alpha/2)-quantiles.
    """

    upper: float
    lower: float
    two_upper: float
    two_lower: float
    source: str
    b_requested: int = 0
    b_effective: int = 0

    @classmethod
    def gauss(cls, alpha):
        return cls(upper=z(1 - alpha), lower=z(alpha),
                   two_upper=z(1 - alpha / 2), two_lower=z(alpha / 2),
                   source=GAUSS)

    @classmethod
    def from_replicates(cls, stats, alpha, source, b_requested):
        """Empirical quantiles of the finite replicate statistics."""
        stats = np.asarray(stats, dtype=float)
        stats = stats[np.isfinite(stats)]
        if stats.size == 0:
            raise ResamplingDegenerateError(
                f"all {b_requested} {source} replicates had a degenerate "
                "variance estimate")
        return cls(upper=empirical_quantile(stats, 1 - alpha),
                   lower=empirical_quantile(stats, alpha),
                   two_upper=empirical_quantile(stats, 1 - alpha / 2),
                   two_lower=empirical_quantile(stats, alpha / 2),
                   source=source, b_requested=b_requested,
                   b_effective=int(stats.size))


def studentized(estimates, centre, sigma2, n, scale=1.0):
    """``sqrt(n) (estimate - centre) / sigma``, NaN where the variance is
    degenerate (``sigma2 <= DEGENERATE_TOL * scale``)."""
    estimates = np.asarray(estimates, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = math.sqrt(n) * (estimates - centre) / np.sqrt(sigma2)
    return np.where(sigma2 > DEGENERATE_TOL * scale, out, np.nan)


def invert(estimate, se, q):
    """Intervals from inverting the studentized statistic at quantiles `q`.

    Returns ``(left, right, two)`` where ``left = (L, inf)``,
    ``right = (-inf, U)`` and ``two = (lo, hi)`` on the estimate's scale.
    """
    left = (estimate - q.upper * se, math.inf)
    right = (-math.inf, estimate - q.lower * se)
    two = (estimate - q.two_upper * se, estimate - q.two_lower * se)
    return left, right, two


def clip_interval(interval, lo, hi):
    return (min(max(interval[0], lo), hi), max(min(interval[1], hi), lo))
