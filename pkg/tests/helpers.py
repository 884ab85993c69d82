import numpy as np

from pairedsurv.data import PairedDataset


def make_ds(t1, y2, delta2, delta1=None):
    return PairedDataset.from_arrays(np.asarray(t1, float), np.asarray(y2, float),
                                     np.asarray(delta2, int), delta1=delta1)


def km_bruteforce(times, events, t):
    """Product-limit estimate at `t` from an explicit loop over distinct times."""
    s = 1.0
    for u in sorted(set(times)):
        if u > t:
            break
        at_risk = sum(1 for x in times if x >= u)
        d = sum(1 for x, e in zip(times, events) if x == u and e)
        s *= 1.0 - d / at_risk
    return s
