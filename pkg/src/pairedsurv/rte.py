r"""Relative treatment effect for paired, right-censored event times.

The estimand is

.. math::

    \theta = P(\min(T_2, \tau_2) > \delta \min(T_1, \tau_1))
             + \tfrac12 P(\min(T_2, \tau_2) = \delta \min(T_1, \tau_1)).

Each pair is recoded into a competing-risks observation ``(Z, eps)`` with
``eps = 1`` when the scaled first time is observed to be larger, ``eps = 2``
when the second time is observed to be larger, ``eps = 3`` for an observed
tie and ``eps = 0`` when censoring prevents the comparison. Then
``theta_hat = F_2(tau) + F_3(tau) / 2`` with Aalen-Johansen estimators.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import DegenerateVarianceError
from .inference import (BOOTSTRAP, DEGENERATE_TOL, RANDOMIZATION, Quantiles,
                        clip_interval, invert, studentized)
from .survcore import (aalen_johansen, greenwood_processes, kaplan_meier,
                       nelson_aalen, risk_table, safe_divide)

__all__ = [
    "RteConfig",
    "CompetingRisksSample",
    "RteResult",
    "RteDiagnostics",
    "recode",
    "estimate_theta",
    "variance_theta",
    "asymptotic_inference",
    "randomize_labels",
    "randomization_inference",
    "bootstrap_inference",
    "check_assumptions",
]

DEFAULT_B = 1000


@dataclass(frozen=True)
class RteConfig:
    """Threshold, horizons and test settings.

    ``tau2`` defaults to ``delta * tau1``. Either horizon may be infinite, but
    not both.
    """

    tau1: float
    tau2: float = None
    delta: float = 1.3
    theta0: float = 0.5
    alpha: float = 0.05

    def __post_init__(self):
        if self.tau2 is None:
            object.__setattr__(self, "tau2", self.delta * self.tau1)
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise ValueError("horizons must be positive")
        if not math.isfinite(self.tau):
            raise ValueError("tau1 and tau2 cannot both be infinite")
        if not 0 < self.theta0 < 1:
            raise ValueError("theta0 must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def tau(self):
        """Competing-risks horizon ``min(delta * tau1, tau2)``."""
        return min(self.delta * self.tau1, self.tau2)


@dataclass(frozen=True)
class CompetingRisksSample:
    """Recoded sample: times ``z`` (all ``<= tau``) and labels ``eps``."""

    z: np.ndarray
    eps: np.ndarray
    tau: float

    @property
    def n(self):
        return self.z.shape[0]

    def risk_table(self):
        return risk_table(self.z, self.eps)


@dataclass
class RteResult:
    theta_hat: float
    sigma2_hat: float
    n: int
    theta0: float
    alpha: float
    statistic: float
    quantile: float
    reject: bool
    ci_lower_one_sided: tuple
    ci_upper_one_sided: tuple
    ci_two_sided: tuple
    quantile_source: str
    b_requested: int = 0
    b_effective: int = 0
    diagnostics: list = field(default_factory=list)
    replicates: np.ndarray = field(default=None, repr=False)


def _recode_arrays(y1, d1, y2, d2, cfg):
    a1 = cfg.delta * np.minimum(y1, cfg.tau1)
    a2 = np.minimum(y2, cfg.tau2)
    e1 = (d1 == 1) | (y1 >= cfg.tau1)
    e2 = (d2 == 1) | (y2 >= cfg.tau2)
    z = np.minimum(a1, a2)
    eps = np.zeros(z.shape, dtype=int)
    eps[(a2 < a1) & e2] = 1
    eps[(a1 < a2) & e1] = 2
    tie = a1 == a2
    eps[tie & e1 & e2] = 3
    eps[tie & e1 & ~e2] = 2
    eps[tie & ~e1 & e2] = 1
    return z, eps


def recode(ds, cfg):
    """Recode a :class:`~pairedsurv.data.PairedDataset` into competing risks.

    At a tie between the scaled first time and the second time, a component
    that is censored exactly there is known to exceed the other, which then
    determines the label.
    """
    z, eps = _recode_arrays(ds.t1, ds.delta1, ds.y2, ds.delta2, cfg)
    return CompetingRisksSample(z=z, eps=eps, tau=cfg.tau)


def estimate_theta(crs):
    rt = crs.risk_table()
    return (aalen_johansen(rt, 2, crs.tau)
            + 0.5 * aalen_johansen(rt, 3, crs.tau))


def variance_theta(crs, clip=True):
    r"""Plug-in variance estimate of :math:`\sqrt{n}(\hat\theta - \theta)`.

    Built from the all-cause Kaplan-Meier estimator, the cause-specific
    Nelson-Aalen estimators and the Greenwood-type (co)variance processes;
    all integrals are finite sums over the observed times.
    """
    rt = crs.risk_table()
    keep = rt.times <= crs.tau
    s_left = kaplan_meier(rt).left_values()[keep]
    dA = {j: nelson_aalen(rt, j).jumps()[keep] for j in (1, 2, 3)}
    gw = greenwood_processes(rt)
    dv = {j: gw.var[j].jumps()[keep] for j in (1, 2, 3)}
    dc = {jl: gw.cov[jl].jumps()[keep] for jl in gw.cov}
    dtot = gw.total.jumps()[keep]

    inv = safe_divide(1.0, 1.0 - (dA[1] + dA[2] + dA[3]))
    a = s_left * (dA[2] + 0.5 * dA[3])
    tail = np.concatenate((np.cumsum(a[::-1])[::-1][1:], [0.0]))

    term1 = np.sum(s_left**2 * (dv[2] + dc[(2, 3)] + 0.25 * dv[3]))
    mixed = (dc[(1, 2)] + dv[2] + 1.5 * dc[(2, 3)] + 0.5 * dc[(1, 3)]
             + 0.5 * dv[3])
    term2 = -2.0 * np.sum(s_left * inv * mixed * tail)
    term3 = np.sum(inv**2 * dtot * tail**2)
    sigma2 = float(term1 + term2 + term3)
    return max(sigma2, 0.0) if clip else sigma2


def _result(theta_hat, sigma2_hat, n, cfg, q, diagnostics=None):
    se = math.sqrt(sigma2_hat / n)
    statistic = float(studentized(theta_hat, cfg.theta0, sigma2_hat, n))
    left, right, two = invert(theta_hat, se, q)
    return RteResult(
        theta_hat=theta_hat, sigma2_hat=sigma2_hat, n=n,
        theta0=cfg.theta0, alpha=cfg.alpha,
        statistic=statistic, quantile=q.upper,
        reject=bool(statistic > q.upper),
        ci_lower_one_sided=clip_interval(left, 0.0, 1.0),
        ci_upper_one_sided=clip_interval(right, 0.0, 1.0),
        ci_two_sided=clip_interval(two, 0.0, 1.0),
        quantile_source=q.source, b_requested=q.b_requested,
        b_effective=q.b_effective, diagnostics=list(diagnostics or []))


def _point(crs):
    theta_hat = estimate_theta(crs)
    sigma2_hat = variance_theta(crs)
    if sigma2_hat <= DEGENERATE_TOL:
        raise DegenerateVarianceError(
            "variance estimate of the relative treatment effect is zero; "
            "positivity of the variance requires observed events of type 1 "
            "or 2 before tau together with observations reaching tau, or "
            "observed ties before tau")
    return theta_hat, sigma2_hat


def asymptotic_inference(crs, cfg):
    """Normal-quantile test of ``theta <= theta0`` and confidence intervals."""
    theta_hat, sigma2_hat = _point(crs)
    return _result(theta_hat, sigma2_hat, crs.n, cfg, Quantiles.gauss(cfg.alpha))


def randomize_labels(crs, rng):
    """Relabel every type-1/type-2 event as 1 or 2 with probability 1/2."""
    eps = crs.eps.copy()
    flip = np.isin(eps, (1, 2))
    eps[flip] = rng.integers(1, 3, size=int(flip.sum()))
    return CompetingRisksSample(z=crs.z, eps=eps, tau=crs.tau)


def _chunks(B, size):
    for start in range(0, B, size):
        yield min(size, B - start)


def randomization_inference(crs, cfg, B=DEFAULT_B, rng=None, chunk=256):
    """Test and intervals with the randomization quantile.

    Each replicate relabels events as in :func:`randomize_labels` and
    evaluates ``sqrt(n) (theta~ - 1/2) / sigma~``. Replicates with a zero
    variance estimate are discarded.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    rng = np.random.default_rng(rng)
    theta_hat, sigma2_hat = _point(crs)
    n = crs.n
    grid = _kernels.Grid(crs.z)
    movable = np.isin(crs.eps, (1, 2))
    stats = []
    for b in _chunks(B, chunk):
        eps = np.broadcast_to(crs.eps, (b, n)).copy()
        draws = rng.integers(1, 3, size=(b, int(movable.sum())))
        eps[:, movable] = draws
        th, var = _kernels.theta_batch(grid, eps)
        stats.append(studentized(th, 0.5, var, n))
    stats = np.concatenate(stats)
    q = Quantiles.from_replicates(stats, cfg.alpha, RANDOMIZATION, B)
    res = _result(theta_hat, sigma2_hat, n, cfg, q, _discard_note(q))
    res.replicates = stats
    return res


def bootstrap_inference(ds, cfg, B=DEFAULT_B, rng=None, chunk=256):
    """Test and intervals with the nonparametric bootstrap quantile.

    Records are drawn with replacement; each replicate contributes
    ``sqrt(n) (theta* - theta_hat) / sigma*``.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    rng = np.random.default_rng(rng)
    crs = recode(ds, cfg)
    theta_hat, sigma2_hat = _point(crs)
    n = crs.n
    grid = _kernels.Grid(crs.z)
    stats = []
    for b in _chunks(B, chunk):
        idx = rng.integers(0, n, size=(b, n))
        weights = np.stack([np.bincount(row, minlength=n) for row in idx])
        eps = np.broadcast_to(crs.eps, (b, n))
        th, var = _kernels.theta_batch(grid, eps, weights)
        stats.append(studentized(th, theta_hat, var, n))
    stats = np.concatenate(stats)
    q = Quantiles.from_replicates(stats, cfg.alpha, BOOTSTRAP, B)
    res = _result(theta_hat, sigma2_hat, n, cfg, q, _discard_note(q))
    res.replicates = stats
    return res


def _discard_note(q):
    dropped = q.b_requested - q.b_effective
    if dropped:
        return [f"{dropped} of {q.b_requested} {q.source} replicates "
                "discarded (zero variance)"]
    return []


@dataclass
class RteDiagnostics:
    """Empirical checks of the positivity assumptions.

    ``counts`` holds the number of observations reaching ``tau`` (with a
    known comparison, with each ordering of the components, and at all) and
    the events of each type before ``tau``.
    """

    counts: dict
    warnings: list

    @property
    def ok(self):
        return not self.warnings


def check_assumptions(crs):
    """Empirical analogues of the positivity conditions for inference.

    Warnings are issued when the sample gives no support for observations
    reaching ``tau``, for a positive variance, or for a nondegenerate
    randomization distribution.
    """
    at_tau = crs.z >= crs.tau
    before = ~at_tau
    counts = {
        "reach_tau_event": int(np.sum(at_tau & (crs.eps > 0))),
        "reach_tau_first_le": int(np.sum(at_tau & np.isin(crs.eps, (2, 3)))),
        "reach_tau_second_le": int(np.sum(at_tau & np.isin(crs.eps, (1, 3)))),
        "reach_tau": int(np.sum(at_tau)),
        "type1_before_tau": int(np.sum(before & (crs.eps == 1))),
        "type2_before_tau": int(np.sum(before & (crs.eps == 2))),
        "type3_before_tau": int(np.sum(before & (crs.eps == 3))),
    }
    warnings = []
    if counts["reach_tau_event"] == 0:
        warnings.append(
            "horizon positivity: no observation reaches tau uncensored, so "
            "P(delta T1 >= tau, T2 >= tau) > 0 and P(C2 >= tau) > 0 lack "
            "empirical support")
    c = counts
    if not ((c["type1_before_tau"] and c["reach_tau_first_le"])
            or (c["type2_before_tau"] and c["reach_tau_second_le"])
            or c["type3_before_tau"]):
        warnings.append(
            "variance positivity: no type-1 event before tau with a pair "
            "reaching tau where the scaled first time is smaller, no type-2 "
            "event before tau with a pair reaching tau where the second time "
            "is smaller, and no observed tie before tau; the variance "
            "estimate may be zero")
    if not (c["reach_tau_event"]
            and c["type1_before_tau"] + c["type2_before_tau"]):
        warnings.append(
            "randomization positivity: no type-1 or type-2 event before tau "
            "together with observations reaching tau; the randomization "
            "distribution may be degenerate")
    return RteDiagnostics(counts=counts, warnings=warnings)
