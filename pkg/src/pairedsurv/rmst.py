"""Restricted mean survival times of the two components of each pair.

Differences ``mu2 - mu1`` and ratios ``mu2 / mu1`` are studentized with
influence-function variance estimates; the ratio is analysed on the log
scale. Reference distributions come from the normal law, from within-pair
permutation, or from the pair bootstrap.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .data import PairedDataset
from .exceptions import DegenerateVarianceError, PositivityError, RatioUndefinedError
from .inference import (BOOTSTRAP, DEGENERATE_TOL, PERMUTATION, Quantiles,
                        clip_interval, invert, studentized)
from .survcore import censoring_km, kaplan_meier, nelson_aalen, risk_table

__all__ = [
    "RmstConfig",
    "RmstResult",
    "rmst",
    "influence_values",
    "variance_diff",
    "variance_rat",
    "asymptotic_inference",
    "permute_pairs",
    "permutation_inference",
    "bootstrap_inference",
]


@dataclass(frozen=True)
class RmstConfig:
    tau: float
    eta: float = 0.0
    zeta: float = 0.0
    alpha: float = 0.05

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not -self.tau <= self.eta <= self.tau:
            raise ValueError("eta must lie in [-tau, tau]")
        if not self.zeta > -1:
            raise ValueError("zeta must exceed -1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass
class RmstResult:
    """Estimates, tests and intervals for the RMST difference and ratio.

    Difference intervals are stored unclipped; ``diff_ci_*_clipped`` give the
    versions restricted to ``[-tau, tau]``. Ratio intervals are on the ratio
    scale (back-transformed from the log scale) and always positive.
    Resampling runs keep the replicate statistics (NaN where degenerate).
    """

    mu1_hat: float
    mu2_hat: float
    n: int
    tau: float
    alpha: float
    eta: float
    zeta: float
    sigma2_diff: float
    sigma2_rat: float
    stat_diff: float
    stat_rat: float
    quantile_diff: float
    quantile_rat: float
    reject_diff: bool
    reject_rat: bool
    diff_ci_lower_one_sided: tuple
    diff_ci_upper_one_sided: tuple
    diff_ci_two_sided: tuple
    rat_ci_lower_one_sided: tuple
    rat_ci_upper_one_sided: tuple
    rat_ci_two_sided: tuple
    quantile_source: str
    b_requested: int = 0
    b_effective_diff: int = 0
    b_effective_rat: int = 0
    diagnostics: list = field(default_factory=list)
    replicates_diff: np.ndarray = field(default=None, repr=False)
    replicates_rat: np.ndarray = field(default=None, repr=False)

    @property
    def diff_hat(self):
        return self.mu2_hat - self.mu1_hat

    @property
    def ratio_hat(self):
        return self.mu2_hat / self.mu1_hat

    def _clip(self, ci):
        return clip_interval(ci, -self.tau, self.tau)

    @property
    def diff_ci_lower_one_sided_clipped(self):
        return self._clip(self.diff_ci_lower_one_sided)

    @property
    def diff_ci_two_sided_clipped(self):
        return self._clip(self.diff_ci_two_sided)


def rmst(rt, tau):
    """Area under the Kaplan-Meier curve on ``[0, tau]``."""
    if tau <= 0:
        return 0.0
    return kaplan_meier(rt).integrate(tau)


def influence_values(times, indicators, tau):
    r"""Estimated influence values of the Kaplan-Meier RMST.

    For an observation ``(x, d)``,

    .. math::

        \widehat{IF}(x, d) = -\int_0^\tau \hat S(t)\Big[
            \frac{d\,1\{x \le t\}}{\hat G(x-)\hat S(x)}
            - \int_{[0, t\wedge x]} \frac{d\hat A(u)}{\hat G(u-)\hat S(u)}
        \Big]\,dt,

    evaluated exactly over the step structure with ``0/0 := 0``. The sign
    makes ``IF = min(x, tau) - mu_hat`` for uncensored data.

    Raises
    ------
    PositivityError
        If a denominator vanishes with a nonzero numerator.
    """
    times = np.asarray(times, dtype=float)
    indicators = np.asarray(indicators, dtype=int)
    rt = risk_table(times, indicators)
    surv = kaplan_meier(rt)
    cens = censoring_km(rt)
    u = rt.times
    dA = nelson_aalen(rt, 1).jumps()

    # Area of S over [u_k, tau], summed segment by segment from the right.
    seg = np.clip(np.minimum(np.r_[u[1:], np.inf], tau) - u, 0.0, None)
    remaining = np.cumsum((surv.values * seg)[::-1])[::-1]
    denom = cens.left_limit(u) * surv(u)
    _check_positive(remaining, denom)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, remaining / denom, 0.0)
    cum = np.cumsum(dA * ratio)

    k = np.searchsorted(u, times)
    first = indicators * (times <= tau) * ratio[k]
    return -(first - cum[k])


def _check_positive(num, den):
    bad = (den <= 0) & (num != 0)
    if np.any(bad):
        raise PositivityError(
            "G(x-) S(x) vanishes at an observed time with remaining area "
            "before tau; positivity of the censoring and survival "
            "distributions at tau is violated")


def _components(ds):
    return ((ds.t1, ds.delta1), (ds.y2, ds.delta2))


def _rmst_pair(ds, tau):
    n = ds.n
    mu1, mu2, var_diff, var_rat = _kernels.rmst_pairs(
        ds.t1, ds.delta1, ds.y2, ds.delta2, tau,
        swap=np.zeros((1, n), bool), mult=np.ones((1, n)))
    return mu1[0], mu2[0], var_diff[0], var_rat[0]


def variance_diff(ds, tau):
    """Empirical variance of ``IF_2(Y_2i, D_2i) - IF_1(Y_1i, D_1i)``."""
    (x1, d1), (x2, d2) = _components(ds)
    diff = influence_values(x2, d2, tau) - influence_values(x1, d1, tau)
    return float(np.var(diff))


def variance_rat(ds, tau):
    """Empirical variance of the log-ratio influence values."""
    (x1, d1), (x2, d2) = _components(ds)
    mu1 = rmst(risk_table(x1, d1), tau)
    mu2 = rmst(risk_table(x2, d2), tau)
    if mu1 <= 0 or mu2 <= 0:
        raise RatioUndefinedError("an RMST estimate is zero")
    rat = (influence_values(x2, d2, tau) / mu2
           - influence_values(x1, d1, tau) / mu1)
    return float(np.var(rat))


def _build(mu1, mu2, var_diff, var_rat, n, cfg, q_diff, q_rat, diagnostics):
    diff = mu2 - mu1
    log_ratio = math.log(mu2 / mu1)
    se_diff = math.sqrt(var_diff / n)
    se_rat = math.sqrt(var_rat / n)
    stat_diff = float(studentized(diff, cfg.eta, var_diff, n, cfg.tau**2))
    stat_rat = float(studentized(log_ratio, math.log1p(cfg.zeta), var_rat, n))
    d_left, d_right, d_two = invert(diff, se_diff, q_diff)
    r_left, r_right, r_two = (tuple(math.exp(v) for v in ci)
                              for ci in invert(log_ratio, se_rat, q_rat))
    return RmstResult(
        mu1_hat=mu1, mu2_hat=mu2, n=n, tau=cfg.tau, alpha=cfg.alpha,
        eta=cfg.eta, zeta=cfg.zeta, sigma2_diff=var_diff, sigma2_rat=var_rat,
        stat_diff=stat_diff, stat_rat=stat_rat,
        quantile_diff=q_diff.upper, quantile_rat=q_rat.upper,
        reject_diff=bool(stat_diff > q_diff.upper),
        reject_rat=bool(stat_rat > q_rat.upper),
        diff_ci_lower_one_sided=d_left, diff_ci_upper_one_sided=d_right,
        diff_ci_two_sided=d_two,
        rat_ci_lower_one_sided=r_left, rat_ci_upper_one_sided=r_right,
        rat_ci_two_sided=r_two,
        quantile_source=q_diff.source, b_requested=q_diff.b_requested,
        b_effective_diff=q_diff.b_effective, b_effective_rat=q_rat.b_effective,
        diagnostics=list(diagnostics))


def _point(ds, cfg):
    mu1, mu2, var_diff, var_rat = _rmst_pair(ds, cfg.tau)
    if mu1 <= 0 or mu2 <= 0:
        raise RatioUndefinedError("an RMST estimate is zero")
    if not (var_diff > DEGENERATE_TOL * cfg.tau**2
            and var_rat > DEGENERATE_TOL):
        raise DegenerateVarianceError(
            "RMST variance estimate is zero; positivity of the difference and "
            "ratio variances requires P(C2 >= tau) > 0 and "
            "P(T1 >= tau), P(T2 >= tau) > 0 with nondegenerate data")
    return float(mu1), float(mu2), float(var_diff), float(var_rat)


def asymptotic_inference(ds, cfg):
    """Normal-quantile tests and intervals for the RMST difference and ratio."""
    mu1, mu2, var_diff, var_rat = _point(ds, cfg)
    q = Quantiles.gauss(cfg.alpha)
    return _build(mu1, mu2, var_diff, var_rat, ds.n, cfg, q, q, [])


def permute_pairs(ds, rng):
    """Swap the two (time, indicator) components of each pair w.p. 1/2."""
    swap = rng.random(ds.n) < 0.5
    return PairedDataset.from_arrays(
        t1=np.where(swap, ds.y2, ds.t1), y2=np.where(swap, ds.t1, ds.y2),
        delta2=np.where(swap, ds.delta1, ds.delta2),
        delta1=np.where(swap, ds.delta2, ds.delta1), ids=ds.ids)


def _chunks(B, size):
    for start in range(0, B, size):
        yield min(size, B - start)


def _resample(ds, cfg, B, rng, chunk, source):
    if B < 1:
        raise ValueError("B must be at least 1")
    rng = np.random.default_rng(rng)
    mu1, mu2, var_diff, var_rat = _point(ds, cfg)
    n = ds.n
    grid = _kernels.Grid(np.concatenate((ds.t1, ds.y2)))
    diff_stats, rat_stats = [], []
    for b in _chunks(B, chunk):
        if source == PERMUTATION:
            swap = rng.random((b, n)) < 0.5
            mult = np.ones((b, n))
            centre_diff, centre_rat = 0.0, 0.0
        else:
            idx = rng.integers(0, n, size=(b, n))
            mult = np.stack([np.bincount(row, minlength=n) for row in idx])
            swap = np.zeros((b, n), bool)
            centre_diff, centre_rat = mu2 - mu1, math.log(mu2 / mu1)
        m1, m2, vd, vr = _kernels.rmst_pairs(
            ds.t1, ds.delta1, ds.y2, ds.delta2, cfg.tau, swap, mult, grid)
        diff_stats.append(studentized(m2 - m1, centre_diff, vd, n,
                                      cfg.tau**2))
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.log(m2 / m1)
        ok = (m1 > 0) & (m2 > 0) & np.isfinite(vr)
        rat_stats.append(np.where(
            ok, studentized(np.where(ok, log_ratio, 0.0), centre_rat,
                            np.where(ok, vr, 0.0), n), np.nan))
    diff_stats = np.concatenate(diff_stats)
    rat_stats = np.concatenate(rat_stats)
    q_diff = Quantiles.from_replicates(diff_stats, cfg.alpha, source, B)
    q_rat = Quantiles.from_replicates(rat_stats, cfg.alpha, source, B)
    notes = []
    for label, q in (("difference", q_diff), ("ratio", q_rat)):
        dropped = B - q.b_effective
        if dropped:
            notes.append(f"{dropped} of {B} {source} replicates discarded for "
                         f"the {label} (degenerate variance)")
    res = _build(mu1, mu2, var_diff, var_rat, n, cfg, q_diff, q_rat, notes)
    res.replicates_diff = diff_stats
    res.replicates_rat = rat_stats
    return res


def permutation_inference(ds, cfg, B=1000, rng=None, chunk=256):
    """Within-pair permutation quantiles for the studentized statistics."""
    return _resample(ds, cfg, B, rng, chunk, PERMUTATION)


def bootstrap_inference(ds, cfg, B=1000, rng=None, chunk=256):
    """Pair-bootstrap quantiles of the centred, studentized statistics."""
    return _resample(ds, cfg, B, rng, chunk, BOOTSTRAP)
