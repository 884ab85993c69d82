"""Established estimators of P(T2 / T1 > delta) used for comparison.

These methods ignore or mishandle the dependence between the censored ratio
``Y2 / T1`` and its censoring variable ``C2 / T1``. They are reproduced as
published, flaws included, so that their coverage can be compared with the
censoring-robust estimators. The first time is treated as uncensored
throughout; ``delta1`` is ignored.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .exceptions import DataError, TransformUndefinedError
from .inference import z
from .survcore import kaplan_meier, risk_table, safe_divide

__all__ = [
    "BinomialCI",
    "BaselineResult",
    "clopper_pearson",
    "wald",
    "von_hoff",
    "mick_ignore",
    "km_ratio",
    "midrank_bounds",
    "midrank",
]

SIDES = ("left", "right", "two")


def _check_side(side):
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


@dataclass(frozen=True)
class BinomialCI:
    """Confidence interval for a binomial proportion ``k / n``."""

    k: int
    n: int
    level: float
    interval: tuple
    kind: str
    side: str

    @property
    def estimate(self):
        return self.k / self.n


@dataclass(frozen=True)
class BaselineResult:
    """Point estimate and confidence interval of one comparison method.

    ``n_used`` is the number of pairs entering the estimate and ``notes``
    records fallbacks (for example an untransformed Kaplan-Meier interval).
    """

    method: str
    estimate: float
    interval: tuple
    level: float
    side: str
    n_used: int
    notes: tuple = field(default_factory=tuple)


def clopper_pearson(k, n, level=0.95, side="two"):
    """Exact binomial interval from beta quantiles.

    ``side="left"`` gives ``[lo, 1]``, ``"right"`` gives ``[0, hi]``.
    """
    _check_side(side)
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    alpha = 1.0 - level
    a = alpha / 2 if side == "two" else alpha
    lo = 0.0 if k == 0 else float(beta.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a, k + 1, n - k))
    if side == "left":
        hi = 1.0
    elif side == "right":
        lo = 0.0
    return BinomialCI(k=int(k), n=int(n), level=level, interval=(lo, hi),
                      kind="clopper-pearson", side=side)


def wald(k, n, level=0.95, side="two"):
    """Normal-approximation interval ``p +/- z sqrt(p (1 - p) / n)``."""
    _check_side(side)
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    p = k / n
    alpha = 1.0 - level
    q = z(1 - alpha / 2) if side == "two" else z(1 - alpha)
    half = q * math.sqrt(p * (1 - p) / n)
    lo = max(p - half, 0.0) if side != "right" else 0.0
    hi = min(p + half, 1.0) if side != "left" else 1.0
    return BinomialCI(k=int(k), n=int(n), level=level, interval=(lo, hi),
                      kind="wald", side=side)


def _binomial_result(method, k, n, level, side, kind="clopper-pearson"):
    ci = (clopper_pearson if kind == "clopper-pearson" else wald)(
        k, n, level, side)
    return BaselineResult(method=method, estimate=k / n, interval=ci.interval,
                          level=level, side=side, n_used=n)


def von_hoff(ds, delta, level=0.95, side="two"):
    """Share of pairs with ``y2 / t1 >= delta``, censored or not."""
    k = int(np.sum(ds.y2 / ds.t1 >= delta))
    return _binomial_result("von_hoff", k, ds.n, level, side)


def mick_ignore(ds, delta, level=0.95, side="two"):
    """Von Hoff count after dropping pairs censored before ``delta * t1``."""
    keep = ~((ds.delta2 == 0) & (ds.y2 < delta * ds.t1))
    n = int(keep.sum())
    if n == 0:
        raise DataError("every pair is censored before delta * t1; "
                        "no pairs remain")
    k = int(np.sum(ds.y2[keep] / ds.t1[keep] >= delta))
    return _binomial_result("mick_ignore", k, n, level, side)


def km_ratio(ds, delta, level=0.95, side="two", transform="cloglog",
             strict=False):
    """Kaplan-Meier estimate of ``P(Y2 / T1 > delta)`` treating the ratio as
    a right-censored time with indicator ``delta2``.

    The standard error is Greenwood's. ``transform`` is ``"log"`` or
    ``"cloglog"``. When the estimate is 0 or 1 the transformed interval is
    undefined: with ``strict`` a :class:`TransformUndefinedError` is raised,
    otherwise the untransformed interval is returned and flagged in ``notes``.
    """
    _check_side(side)
    if transform not in ("log", "cloglog"):
        raise ValueError("transform must be 'log' or 'cloglog'")
    ratio = ds.y2 / ds.t1
    rt = risk_table(ratio, ds.delta2)
    s = kaplan_meier(rt)(delta)
    keep = rt.times <= delta
    d = rt.total_events[keep]
    Y = rt.at_risk[keep]
    se = s * math.sqrt(float(np.sum(safe_divide(d, Y * (Y - d)))))

    alpha = 1.0 - level
    q = z(1 - alpha / 2) if side == "two" else z(1 - alpha)
    notes = ()
    if 0.0 < s < 1.0:
        if transform == "log":
            w = q * se / s
            lo, hi = s * math.exp(-w), s * math.exp(w)
        else:
            w = q * se / (s * math.log(s))
            lo, hi = s ** math.exp(-w), s ** math.exp(w)
    else:
        if strict:
            raise TransformUndefinedError(
                f"Kaplan-Meier estimate at delta is {s:g}; the {transform} "
                "interval is undefined")
        lo, hi = s - q * se, s + q * se
        notes = (f"{transform} transform undefined at estimate {s:g}; "
                 "untransformed interval used",)
    lo, hi = max(lo, 0.0), min(hi, 1.0)
    if side == "left":
        hi = 1.0
    elif side == "right":
        lo = 0.0
    return BaselineResult(method=f"km_{transform}", estimate=float(s),
                          interval=(lo, hi), level=level, side=side,
                          n_used=ds.n, notes=notes)


def _average_rank(pool, targets, exclude_self):
    """``1 + #{pool < target} + #{pool == target} / 2`` per target, where
    `exclude_self` removes each target's own pool entry from the counts."""
    less = np.sum(pool[None, :] < targets[:, None], axis=1).astype(float)
    equal = np.sum(pool[None, :] == targets[:, None], axis=1).astype(float)
    idx = np.arange(targets.size)
    own = pool[idx]
    less -= exclude_self & (own < targets)
    equal -= exclude_self & (own == targets)
    return 1.0 + less + equal / 2.0


def midrank_bounds(ds, delta):
    """Lower and upper rank bounds in the joint sample of scaled times.

    The joint sample stacks ``delta * t1`` (uncensored) on top of ``y2``
    (censored where ``delta2 = 0``). For an entry the lower bound ranks its
    observed value among the others with every censored entry moved to
    infinity; the upper bound ranks its value, or infinity if censored,
    among the unmodified others. Ties receive average ranks.

    Returns
    -------
    L, R : ndarray, shape (2, n)
        Row 0 holds the first components, row 1 the second.
    """
    values = np.concatenate((delta * ds.t1, ds.y2)).astype(float)
    censored = np.concatenate((np.zeros(ds.n, bool), ds.delta2 == 0))
    self_mask = np.ones(values.size, bool)
    lifted = np.where(censored, np.inf, values)
    lower = _average_rank(lifted, values, self_mask)
    upper = _average_rank(values, lifted, self_mask)
    return lower.reshape(2, ds.n), upper.reshape(2, ds.n)


def midrank(ds, delta, level=0.95, side="two", ci="clopper-pearson"):
    """Share of pairs whose second midrank is at least the first.

    ``ci`` selects a ``"clopper-pearson"`` or ``"wald"`` interval; both treat
    the per-pair indicators as independent Bernoulli draws.
    """
    if ci not in ("clopper-pearson", "wald"):
        raise ValueError("ci must be 'clopper-pearson' or 'wald'")
    lower, upper = midrank_bounds(ds, delta)
    mid = (lower + upper) / 2.0
    k = int(np.sum(mid[1] >= mid[0]))
    return _binomial_result(f"midrank_{ci}", k, ds.n, level, side, ci)
