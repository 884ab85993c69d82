"""Monte Carlo coverage studies of the confidence intervals.

Every replication draws its data and its resampling streams from
``numpy.random.default_rng`` seeded with a key built from the run seed, the
scenario and the replication index, so coverage counts do not depend on how
replications are spread over worker processes.
"""

import csv
import json
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from itertools import product
from pathlib import Path

import numpy as np

from . import baselines, rmst, rte, simgen
from .exceptions import PairedSurvError, ScenarioError
from .inference import z

__all__ = [
    "CoverageResult",
    "binomial_band",
    "run_scenario",
    "run_grid",
    "full_grid",
    "emit_report",
    "rerun_manifest",
    "default_workers",
]

TRUTH_N = 100_000
DESK_N_SIM = 1000
DESK_B = 500
DESK_BAND_CONF = 0.99


def binomial_band(n_sim, level=0.95, band_conf=0.95):
    """Acceptance band for an empirical coverage, in percent.

    ``level +/- z * sqrt(level (1 - level) / n_sim)`` with ``z`` the
    two-sided `band_conf` normal quantile, rounded to one decimal.
    """
    q = z(1 - (1 - band_conf) / 2)
    half = q * math.sqrt(level * (1 - level) / n_sim)
    lo = max(level - half, 0.0)
    hi = min(level + half, 1.0)
    return round(100 * lo, 1), round(100 * hi, 1)


@dataclass(frozen=True)
class CoverageResult:
    scenario_id: str
    method: str
    side: str
    n_sim: int
    covered: int
    coverage: float
    band_lo: float
    band_hi: float
    within_band: bool
    failures: int
    mean_runtime_per_rep: float

    @property
    def band(self):
        return self.band_lo, self.band_hi


COLUMNS = tuple(f.name for f in fields(CoverageResult))


def default_workers():
    """CPU count, capped by the ``PAIRED_SURV_THREADS`` variable."""
    workers = os.cpu_count() or 1
    cap = os.environ.get("PAIRED_SURV_THREADS")
    if cap:
        workers = min(workers, max(int(cap), 1))
    return workers


def _key(name):
    return zlib.crc32(name.encode())


def _check_compatible(scn):
    wants_rmst = any(m in simgen.RMST_METHODS for m in scn.methods)
    if wants_rmst and (scn.delta != 1 or scn.tau1 != scn.tau2):
        raise ScenarioError(
            "RMST methods need equal horizons for both components "
            f"(delta = 1); scenario {scn.id} has delta = {scn.delta:g}")


def true_values(scn, seed, N=TRUTH_N):
    """True parameters targeted by each method family."""
    truth = {
        "theta": simgen.true_theta(scn, N, np.random.default_rng([seed, 1, 0])),
        "exceedance": simgen.true_exceedance(
            scn, N, np.random.default_rng([seed, 1, 1])),
    }
    if scn.tau1 == scn.tau2:
        p = scn.params
        mu1 = simgen.true_rmst(p.theta1, p.gamma1, scn.tau1)
        mu2 = simgen.true_rmst(p.theta2, p.gamma2, scn.tau1)
        truth.update(rmst_diff=mu2 - mu1, rmst_ratio=mu2 / mu1)
    return truth


def _covers(interval, truth, side):
    lo, hi = interval
    if side == "left":
        return truth >= lo
    if side == "right":
        return truth <= hi
    return lo <= truth <= hi


def _rte_intervals(res):
    return {"left": res.ci_lower_one_sided, "right": res.ci_upper_one_sided,
            "two": res.ci_two_sided}


def _rmst_intervals(res):
    return (
        {"left": res.diff_ci_lower_one_sided,
         "right": res.diff_ci_upper_one_sided, "two": res.diff_ci_two_sided},
        {"left": res.rat_ci_lower_one_sided,
         "right": res.rat_ci_upper_one_sided, "two": res.rat_ci_two_sided},
    )


def _baseline_intervals(fn, ds, delta, sides, **kw):
    return {s: fn(ds, delta, side=s, **kw).interval for s in sides}


def _evaluate(ds, scn, B, rng_for):
    """Intervals of every requested method on one data set.

    Returns ``{method: (intervals_by_side or None, seconds)}``; ``None``
    marks a method that failed on this data set.
    """
    wanted = set(scn.methods)
    out = {}

    def timed(names, fn):
        if not wanted & set(names):
            return
        start = time.perf_counter()
        try:
            values = fn()
        except (PairedSurvError, ArithmeticError, ValueError):
            values = [None] * len(names)
        elapsed = time.perf_counter() - start
        for name, value in zip(names, values):
            if name in wanted:
                out[name] = (value, elapsed)

    rte_cfg = rte.RteConfig(tau1=scn.tau1, tau2=scn.tau2, delta=scn.delta)

    def rte_run(kind):
        crs = rte.recode(ds, rte_cfg)
        if kind == "gauss":
            res = rte.asymptotic_inference(crs, rte_cfg)
        elif kind == "perm":
            res = rte.randomization_inference(crs, rte_cfg, B, rng_for("rte_perm"))
        else:
            res = rte.bootstrap_inference(ds, rte_cfg, B, rng_for("rte_boot"))
        return [_rte_intervals(res)]

    for kind in ("gauss", "perm", "boot"):
        timed([f"rte_{kind}"], lambda kind=kind: rte_run(kind))

    if scn.tau1 == scn.tau2:
        rmst_cfg = rmst.RmstConfig(tau=scn.tau1)

        def rmst_run(kind):
            if kind == "gauss":
                res = rmst.asymptotic_inference(ds, rmst_cfg)
            elif kind == "perm":
                res = rmst.permutation_inference(ds, rmst_cfg, B,
                                                 rng_for("rmst_perm"))
            else:
                res = rmst.bootstrap_inference(ds, rmst_cfg, B,
                                               rng_for("rmst_boot"))
            return _rmst_intervals(res)

        for kind in ("gauss", "perm", "boot"):
            timed([f"rmst_diff_{kind}", f"rmst_ratio_{kind}"],
                  lambda kind=kind: rmst_run(kind))

    sides = scn.sides
    d = scn.delta
    timed(["km_cloglog"], lambda: [_baseline_intervals(
        baselines.km_ratio, ds, d, sides, transform="cloglog")])
    timed(["km_log"], lambda: [_baseline_intervals(
        baselines.km_ratio, ds, d, sides, transform="log")])
    timed(["midrank_binomial"], lambda: [_baseline_intervals(
        baselines.midrank, ds, d, sides, ci="clopper-pearson")])
    timed(["midrank_wald"], lambda: [_baseline_intervals(
        baselines.midrank, ds, d, sides, ci="wald")])
    timed(["von_hoff"], lambda: [_baseline_intervals(
        baselines.von_hoff, ds, d, sides)])
    timed(["mick_ignore"], lambda: [_baseline_intervals(
        baselines.mick_ignore, ds, d, sides)])
    return out


def _truth_for(method, truth):
    if method.startswith("rte"):
        return truth["theta"]
    if method.startswith("rmst_diff"):
        return truth["rmst_diff"]
    if method.startswith("rmst_ratio"):
        return truth["rmst_ratio"]
    return truth["exceedance"]


def _replicate(scn, truth, seed, B, r):
    """Coverage indicators of replication `r`: ``{(method, side): (covered,
    failed, seconds)}``."""
    sid = _key(scn.id)
    data_rng = np.random.default_rng([seed, 0, sid, r])
    ds = simgen.simulate_dataset(scn, data_rng)

    def rng_for(name):
        return np.random.default_rng([seed, 2, sid, r, _key(name)])

    intervals = _evaluate(ds, scn, B, rng_for)
    out = {}
    for method in scn.methods:
        by_side, seconds = intervals[method]
        for side in scn.sides:
            if by_side is None:
                out[(method, side)] = (False, True, seconds)
            else:
                hit = _covers(by_side[side], _truth_for(method, truth), side)
                out[(method, side)] = (bool(hit), False, seconds)
    return out


def _run_block(scn, truth, seed, B, reps):
    return [(r, _replicate(scn, truth, seed, B, r)) for r in reps]


def _blocks(n_sim, workers):
    size = max(1, math.ceil(n_sim / (4 * workers)))
    return [range(s, min(s + size, n_sim)) for s in range(0, n_sim, size)]


def run_scenario(scn, n_sim=DESK_N_SIM, B=DESK_B, seed=0, workers=None,
                 level=0.95, band_conf=DESK_BAND_CONF, truth_n=TRUTH_N):
    """Coverage of every (method, side) of `scn` over `n_sim` replications.

    Replications whose method fails (for example a zero variance estimate)
    count as not covered and are tallied in ``failures``.
    """
    _check_compatible(scn)
    if n_sim < 1:
        raise ValueError("n_sim must be at least 1")
    truth = true_values(scn, seed, truth_n)
    workers = default_workers() if workers is None else max(int(workers), 1)

    if workers == 1:
        rows = _run_block(scn, truth, seed, B, range(n_sim))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, scn, truth, seed, B, block)
                       for block in _blocks(n_sim, workers)]
            rows = [row for f in futures for row in f.result()]
    rows.sort(key=lambda item: item[0])

    band = binomial_band(n_sim, level, band_conf)
    results = []
    for method, side in product(scn.methods, scn.sides):
        cells = [rep[(method, side)] for _, rep in rows]
        covered = sum(c[0] for c in cells)
        coverage = covered / n_sim
        results.append(CoverageResult(
            scenario_id=scn.id, method=method, side=side, n_sim=n_sim,
            covered=covered, coverage=coverage,
            band_lo=band[0], band_hi=band[1],
            within_band=band[0] <= round(100 * coverage, 1) <= band[1],
            failures=sum(c[1] for c in cells),
            mean_runtime_per_rep=sum(c[2] for c in cells) / n_sim))
    return results


def full_grid(methods=None, sides=simgen.SIDES):
    """All preset x n x nu x censoring x delta scenarios of the full study.

    RMST methods are dropped from scenarios with ``delta != 1``.
    """
    methods = tuple(methods or simgen.DEFAULT_METHODS)
    grid = []
    for name, n, nu, cens, delta in product(
            simgen.PRESETS, (20, 30, 50, 100, 200), (1.0, 0.8, 0.6, 0.4),
            ("none", "exp0.5", "exp1"), (1.0, 1.3)):
        ms = methods if delta == 1 else tuple(
            m for m in methods if m not in simgen.RMST_METHODS)
        grid.append(simgen.preset(name, nu=nu, n=n, censoring=cens,
                                  delta=delta, methods=ms, sides=sides))
    return grid


def run_grid(scenarios, n_sim=DESK_N_SIM, B=DESK_B, seed=0, workers=None,
             **kw):
    results = []
    for scn in scenarios:
        results.extend(run_scenario(scn, n_sim, B, seed, workers, **kw))
    return results


def _manifest_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def emit_report(results, path, scenarios=(), seed=None, B=None, n_sim=None,
                extra=None):
    """Write the coverage table as CSV plus a JSON manifest for reruns.

    The manifest sits next to the CSV as ``<stem>.manifest.json``.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for res in results:
            writer.writerow(asdict(res))
    manifest = {"seed": seed, "B": B, "n_sim": n_sim,
                "scenarios": [s.to_dict() for s in scenarios]}
    manifest.update(extra or {})
    with open(_manifest_path(path), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def read_report(path):
    """Rows of a coverage CSV as :class:`CoverageResult` objects."""
    casts = {f.name: f.type for f in fields(CoverageResult)}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for name, value in row.items():
                kind = casts[name]
                if kind in (bool, "bool"):
                    kw[name] = value == "True"
                elif kind in (int, "int"):
                    kw[name] = int(value)
                elif kind in (float, "float"):
                    kw[name] = float(value)
                else:
                    kw[name] = value
            out.append(CoverageResult(**kw))
    return out


def rerun_manifest(path, workers=None):
    """Repeat the run recorded in a manifest file."""
    with open(path, encoding="utf-8") as fh:
        m = json.load(fh)
    scenarios = [simgen.Scenario.from_dict(d) for d in m["scenarios"]]
    kw = {k: m[k] for k in ("band_conf", "level") if k in m}
    return run_grid(scenarios, m["n_sim"], m["B"], m["seed"], workers, **kw)
