"""Vectorised estimator kernels evaluated for a batch of resampled data sets.

The public estimators in :mod:`pairedsurv.rte` and :mod:`pairedsurv.rmst`
work on one sample via :mod:`pairedsurv.survcore`. Resampling needs the same
quantities for hundreds of relabelled, permuted or reweighted copies of one
sample; these kernels compute them at once on a fixed time grid. Rows are
replicates, columns grid times. A grid time where a replicate has no
observations contributes nothing (``0/0 := 0``).
"""

import numpy as np

from .survcore import safe_divide


class Grid:
    """Distinct sorted times of a fixed pool of observations."""

    def __init__(self, times):
        times = np.asarray(times, dtype=float)
        self.times, inverse = np.unique(times, return_inverse=True)
        self.index = inverse
        self.order = np.argsort(inverse, kind="stable")
        sorted_idx = inverse[self.order]
        self.starts = np.flatnonzero(np.r_[True, np.diff(sorted_idx) != 0])

    @property
    def size(self):
        return self.times.size

    def bin(self, weights):
        """Sum the columns of a ``(B, N)`` weight matrix per grid time."""
        return np.add.reduceat(weights[:, self.order], self.starts, axis=1)


def _reverse_cumsum(a):
    return np.cumsum(a[:, ::-1], axis=1)[:, ::-1]


def _tail_exclusive(a):
    """``out[:, k] = sum_{l > k} a[:, l]``."""
    out = _reverse_cumsum(a)
    return np.concatenate((out[:, 1:], np.zeros((a.shape[0], 1))), axis=1)


def theta_variance(Y, d1, d2, d3, n):
    """Relative treatment effect and its variance estimate, per row.

    Parameters
    ----------
    Y, d1, d2, d3 : ndarray, shape (B, K)
        At-risk counts and cause-specific event counts on the grid.
    n : int
        Sample size.

    Returns
    -------
    theta, sigma2_raw : ndarray, shape (B,)
        ``sigma2_raw`` is not clipped at zero.
    """
    h1, h2, h3 = (safe_divide(d, Y) for d in (d1, d2, d3))
    h = h1 + h2 + h3
    surv = np.cumprod(1.0 - h, axis=1)
    s_left = np.concatenate((np.ones((Y.shape[0], 1)), surv[:, :-1]), axis=1)

    a = s_left * (h2 + 0.5 * h3)
    theta = a.sum(axis=1)

    Y2 = Y**2
    Y3 = Y**3
    v1 = n * (1.0 - h1) * safe_divide(d1, Y2)
    v2 = n * (1.0 - h2) * safe_divide(d2, Y2)
    v3 = n * (1.0 - h3) * safe_divide(d3, Y2)
    c12 = -n * safe_divide(d1 * d2, Y3)
    c13 = -n * safe_divide(d1 * d3, Y3)
    c23 = -n * safe_divide(d2 * d3, Y3)
    v_all = v1 + v2 + v3 + 2.0 * (c12 + c13 + c23)

    inv = safe_divide(1.0, 1.0 - h)
    tail = _tail_exclusive(a)

    term1 = np.sum(s_left**2 * (v2 + c23 + 0.25 * v3), axis=1)
    mixed = c12 + v2 + 1.5 * c23 + 0.5 * c13 + 0.5 * v3
    term2 = -2.0 * np.sum(s_left * inv * mixed * tail, axis=1)
    term3 = np.sum(inv**2 * v_all * tail**2, axis=1)
    return theta, term1 + term2 + term3


def theta_batch(grid, eps, weights=None, n=None):
    """Batch version of (theta, variance) for competing-risks labels.

    `eps` has shape ``(B, N)`` with labels in {0, 1, 2, 3} for the pooled
    observations of `grid`; `weights` (same shape) are multiplicities.
    """
    eps = np.atleast_2d(eps)
    w = np.ones(eps.shape) if weights is None else np.atleast_2d(weights)
    w = w.astype(float)
    if n is None:
        n = eps.shape[1]
    counts = grid.bin(w)
    Y = _reverse_cumsum(counts)
    d = [grid.bin(w * (eps == j)) for j in (1, 2, 3)]
    return theta_variance(Y, d[0], d[1], d[2], n)


def km_rmst_if(grid, events, weights, tau, n):
    """RMST and influence values of the Kaplan-Meier RMST, per row.

    Parameters
    ----------
    grid : Grid
        Grid over the pooled observation times.
    events : ndarray, shape (N,)
        Event indicators of the pooled observations.
    weights : ndarray, shape (B, N)
        Multiplicity of each pooled observation in the replicate's sample.
    tau : float
    n : int
        Sample size of each replicate.

    Returns
    -------
    mu : ndarray, shape (B,)
    infl : ndarray, shape (B, N)
        Influence value each pooled observation would have in the replicate.
        Only entries with positive weight are meaningful.
    """
    weights = np.asarray(weights, dtype=float)
    counts = grid.bin(weights)
    d = grid.bin(weights * events)
    Y = _reverse_cumsum(counts)
    surv = np.cumprod(1.0 - safe_divide(d, Y), axis=1)

    u = grid.times
    right = np.minimum(np.r_[u[1:], np.inf], tau)
    seg = np.clip(right - u, 0.0, None)
    head = min(u[0], tau)
    area = surv * seg
    mu = head + area.sum(axis=1)
    remaining = _reverse_cumsum(area)

    # G(u-) S(u) = (Y - d) / n under the events-before-censorings convention.
    jump_term = n * safe_divide(d * remaining, Y * (Y - d))
    cum = np.cumsum(jump_term, axis=1)

    k = grid.index
    first = (events * (u[k] <= tau))[None, :] * n * safe_divide(
        remaining[:, k], (Y - d)[:, k])
    infl = -(first - cum[:, k])
    return mu, infl


def rmst_pairs(t1, delta1, y2, delta2, tau, swap, mult, grid=None):
    """RMST estimates and IF-based variances for permuted/resampled pairs.

    `swap` (bool) and `mult` (int counts) have shape ``(B, n)``: pair ``i``
    enters replicate ``b`` ``mult[b, i]`` times with its components exchanged
    when ``swap[b, i]``.

    Returns
    -------
    mu1, mu2, var_diff, var_rat : ndarray, shape (B,)
        ``var_rat`` is NaN where an RMST is zero.
    """
    n = len(t1)
    if grid is None:
        grid = Grid(np.concatenate((t1, y2)))
    events = np.concatenate((delta1, delta2)).astype(float)
    swap = np.atleast_2d(swap).astype(bool)
    mult = np.atleast_2d(mult).astype(float)
    keep = mult * ~swap
    moved = mult * swap
    w1 = np.concatenate((keep, moved), axis=1)
    w2 = np.concatenate((moved, keep), axis=1)
    mu1, if1 = km_rmst_if(grid, events, w1, tau, n)
    mu2, if2 = km_rmst_if(grid, events, w2, tau, n)
    if1_pair = np.where(swap, if1[:, n:], if1[:, :n])
    if2_pair = np.where(swap, if2[:, :n], if2[:, n:])

    p = mult / n
    var_diff = _weighted_var(if2_pair - if1_pair, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        rat = if2_pair / mu2[:, None] - if1_pair / mu1[:, None]
        var_rat = _weighted_var(rat, p)
    var_rat = np.where((mu1 > 0) & (mu2 > 0), var_rat, np.nan)
    return mu1, mu2, var_diff, var_rat


def _weighted_var(x, p):
    x = np.where(p > 0, x, 0.0)
    mean = np.sum(p * x, axis=1, keepdims=True)
    return np.sum(p * (x - mean) ** 2, axis=1)
