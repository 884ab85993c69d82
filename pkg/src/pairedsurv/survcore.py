r"""Nonparametric estimators for right-censored and competing-risks samples.

Every estimator is returned as a :class:`StepFunction`. The counting-process
bookkeeping lives in :class:`RiskTable`; at tied observed times events are
processed before censorings.

Conventions
-----------
* Integrals over :math:`[0, \tau]` include a jump exactly at :math:`\tau`.
* :math:`0/0 := 0` wherever a risk set is empty.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StepFunction",
    "RiskTable",
    "GreenwoodProcesses",
    "risk_table",
    "kaplan_meier",
    "censoring_km",
    "nelson_aalen",
    "aalen_johansen",
    "greenwood_processes",
    "safe_divide",
]


def safe_divide(num, den):
    """Elementwise ``num / den`` with the convention ``x / 0 := 0``."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


class StepFunction:
    """Right-continuous piecewise-constant function on :math:`[0, \\infty)`.

    Parameters
    ----------
    jump_times : array_like
        Strictly increasing times at which the function may change.
    values : array_like
        Function value on ``[jump_times[k], jump_times[k + 1])``.
    initial_value : float
        Value on ``[0, jump_times[0])``.
    """

    def __init__(self, jump_times, values, initial_value=0.0):
        t = np.asarray(jump_times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("jump_times and values must be 1-d and equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        t.flags.writeable = False
        v.flags.writeable = False
        self.jump_times = t
        self.values = v
        self.initial_value = float(initial_value)

    def _lookup(self, idx):
        padded = np.concatenate(([self.initial_value], self.values))
        return padded[idx]

    def __call__(self, t):
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = self._lookup(idx)
        return float(out) if np.ndim(out) == 0 else out

    def left_limit(self, t):
        """Value strictly before `t`."""
        idx = np.searchsorted(self.jump_times, t, side="left")
        out = self._lookup(idx)
        return float(out) if np.ndim(out) == 0 else out

    def jumps(self):
        """Increment at each jump time (``values[k] - value before``)."""
        prev = np.concatenate(([self.initial_value], self.values[:-1]))
        return self.values - prev

    def left_values(self):
        """Left limits at each jump time."""
        return np.concatenate(([self.initial_value], self.values[:-1]))

    def integrate(self, upper, lower=0.0):
        """Exact integral over ``[lower, upper]``."""
        if upper <= lower:
            return 0.0
        knots = self.jump_times[(self.jump_times > lower)
                                & (self.jump_times < upper)]
        edges = np.concatenate(([lower], knots, [upper]))
        return float(np.sum(self(edges[:-1]) * np.diff(edges)))

    def __repr__(self):
        return (f"StepFunction(n_jumps={self.jump_times.size}, "
                f"initial_value={self.initial_value})")


@dataclass(frozen=True)
class RiskTable:
    """Counting-process summary of a (competing-risks) sample.

    Attributes
    ----------
    times : ndarray
        Distinct observed times in increasing order.
    at_risk : ndarray
        ``Y(u) = #{i : Z_i >= u}``.
    events_by_cause : dict
        Cause label -> ``d_j(u)``. Always contains every nonzero label seen
        in the input (and cause 1 for single-event data).
    total_events : ndarray
        ``d(u) = sum_j d_j(u)``.
    censored : ndarray
        Censorings (label 0) at ``u``.
    n : int
    """

    times: np.ndarray
    at_risk: np.ndarray
    events_by_cause: dict
    total_events: np.ndarray
    censored: np.ndarray
    n: int

    @property
    def causes(self):
        return tuple(sorted(self.events_by_cause))

    def events(self, j):
        d = self.events_by_cause.get(j)
        return np.zeros_like(self.total_events) if d is None else d


def risk_table(times, causes):
    """Build a :class:`RiskTable` from observed times and cause labels.

    Label 0 marks a censored observation.
    """
    times = np.asarray(times, dtype=float)
    causes = np.asarray(causes, dtype=int)
    if times.size == 0:
        raise ValueError("risk_table needs at least one observation")
    if times.shape != causes.shape or times.ndim != 1:
        raise ValueError("times and causes must be 1-d of equal length")
    if np.any(causes < 0):
        raise ValueError("cause labels must be nonnegative")
    u, inverse, counts = np.unique(times, return_inverse=True,
                                   return_counts=True)
    n = times.size
    at_risk = n - np.concatenate(([0], np.cumsum(counts)[:-1]))
    labels = set(np.unique(causes).tolist()) - {0}
    if not labels:
        labels = {1}
    events = {}
    for j in sorted(labels):
        events[j] = np.bincount(inverse, weights=(causes == j),
                                minlength=u.size).astype(float)
    total = np.bincount(inverse, weights=(causes > 0),
                        minlength=u.size).astype(float)
    return RiskTable(times=u, at_risk=at_risk.astype(float),
                     events_by_cause=events, total_events=total,
                     censored=counts - total, n=n)


def kaplan_meier(rt):
    r"""All-cause Kaplan-Meier estimator :math:`\prod_{u\le t}(1 - d(u)/Y(u))`."""
    surv = np.cumprod(1.0 - safe_divide(rt.total_events, rt.at_risk))
    return StepFunction(rt.times, surv, initial_value=1.0)


def censoring_km(rt):
    """Kaplan-Meier estimator of the censoring survival function.

    Events at a tied time leave the risk set before the censorings, so the
    factor at ``u`` is ``1 - c(u) / (Y(u) - d(u))``. Use ``left_limit`` for
    the left-continuous version.
    """
    factor = 1.0 - safe_divide(rt.censored, rt.at_risk - rt.total_events)
    return StepFunction(rt.times, np.cumprod(factor), initial_value=1.0)


def nelson_aalen(rt, j=1):
    """Cause-specific Nelson-Aalen estimator ``sum_{u<=t} d_j(u) / Y(u)``."""
    return StepFunction(rt.times,
                        np.cumsum(safe_divide(rt.events(j), rt.at_risk)),
                        initial_value=0.0)


def aalen_johansen(rt, j, tau=np.inf):
    """Aalen-Johansen cumulative incidence of cause `j` evaluated at `tau`.

    ``F_j(tau) = sum_{u <= tau} S(u-) d_j(u) / Y(u)`` with ``S`` the
    all-cause Kaplan-Meier estimator from the same table.
    """
    s_left = kaplan_meier(rt).left_values()
    keep = rt.times <= tau
    incr = s_left * safe_divide(rt.events(j), rt.at_risk)
    return float(np.sum(incr[keep]))


@dataclass(frozen=True)
class GreenwoodProcesses:
    """Greenwood-type (co)variance processes of the cause-specific hazards.

    ``var[j]`` is the variance process of cause ``j``; ``cov[(j, l)]`` (with
    ``j < l``) the covariance process; ``total`` the variance process of the
    all-cause hazard.
    """

    var: dict
    cov: dict
    total: StepFunction

    def covariance(self, j, l):
        if j == l:
            return self.var[j]
        return self.cov[(min(j, l), max(j, l))]


def greenwood_processes(rt, causes=(1, 2, 3)):
    r"""Discrete Greenwood-type (co)variance processes.

    With :math:`\Delta\hat A_j = d_j/Y` and :math:`\hat y = Y/n`,

    .. math::

        \hat\sigma_j^2(t) = \sum_{u\le t} n (1 - d_j/Y) d_j / Y^2, \qquad
        \hat\sigma_{j\ell}(t) = -\sum_{u\le t} n d_j d_\ell / Y^3,

    and :math:`\hat\sigma_\bullet^2 = \sum_j \hat\sigma_j^2
    + 2\sum_{j<\ell}\hat\sigma_{j\ell}`.
    """
    n = rt.n
    Y = rt.at_risk
    d = {j: rt.events(j) for j in causes}
    var_incr = {j: n * (1.0 - safe_divide(d[j], Y)) * safe_divide(d[j], Y**2)
                for j in causes}
    cov_incr = {}
    for a, j in enumerate(causes):
        for l in causes[a + 1:]:
            cov_incr[(j, l)] = -n * safe_divide(d[j] * d[l], Y**3)
    total = sum(var_incr.values()) + 2.0 * sum(cov_incr.values(),
                                               np.zeros_like(Y))

    def step(incr):
        return StepFunction(rt.times, np.cumsum(incr), initial_value=0.0)

    return GreenwoodProcesses(var={j: step(v) for j, v in var_incr.items()},
                              cov={k: step(v) for k, v in cov_incr.items()},
                              total=step(total))
