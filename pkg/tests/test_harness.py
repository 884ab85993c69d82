import numpy as np
import pytest

from pairedsurv import harness, simgen
from pairedsurv.exceptions import ScenarioError


def small(methods=("rte_gauss", "km_log", "midrank_wald"), **kw):
    kw.setdefault("censoring", "exp0.5")
    return simgen.preset("equal", nu=0.6, n=40, methods=methods, **kw)


def test_binomial_band():
    assert harness.binomial_band(5000, 0.95) == (94.4, 95.6)
    assert harness.binomial_band(1000, 0.95) == (93.6, 96.4)
    assert harness.binomial_band(1000, 0.95, band_conf=0.99) == (93.2, 96.8)
    assert harness.binomial_band(1000, 1.0) == (100.0, 100.0)


def test_degenerate_method_always_covers(monkeypatch):
    def fake(ds, scn, B, rng_for):
        sides = {s: (0.0, 1.0) for s in scn.sides}
        return {m: (sides, 0.0) for m in scn.methods}

    monkeypatch.setattr(harness, "_evaluate", fake)
    res = harness.run_scenario(small(), n_sim=20, B=5, seed=1, workers=1,
                               truth_n=1000)
    assert all(r.coverage == 1.0 and r.covered == 20 for r in res)
    assert len(res) == 3 * 3


def test_failures_count_as_not_covered(monkeypatch):
    def fake(ds, scn, B, rng_for):
        return {m: (None, 0.0) for m in scn.methods}

    monkeypatch.setattr(harness, "_evaluate", fake)
    res = harness.run_scenario(small(("rte_gauss",)), n_sim=10, B=5, seed=1,
                               workers=1, truth_n=1000)
    assert all(r.covered == 0 and r.failures == 10 for r in res)


def test_truth_computed_once(monkeypatch):
    calls = []
    original = simgen.true_theta

    def counting(*args, **kw):
        calls.append(1)
        return original(*args, **kw)

    monkeypatch.setattr(simgen, "true_theta", counting)
    harness.run_scenario(small(), n_sim=15, B=5, seed=2, workers=1, truth_n=2000)
    assert len(calls) == 1


def test_rmst_requires_equal_horizons():
    scn = small(("rmst_diff_gauss",), delta=1.3)
    with pytest.raises(ScenarioError):
        harness.run_scenario(scn, n_sim=5, B=5, workers=1)


def test_full_grid_drops_rmst_for_scaled_delta():
    grid = harness.full_grid()
    assert len(grid) == 3 * 5 * 4 * 3 * 2
    for scn in grid:
        has_rmst = any(m in simgen.RMST_METHODS for m in scn.methods)
        assert has_rmst == (scn.delta == 1)


def test_tallies_bounded_and_deterministic():
    scn = small(("rte_perm", "rmst_diff_perm", "km_cloglog", "von_hoff",
                 "mick_ignore", "midrank_binomial"))
    a = harness.run_scenario(scn, n_sim=12, B=20, seed=5, workers=1, truth_n=2000)
    b = harness.run_scenario(scn, n_sim=12, B=20, seed=5, workers=1, truth_n=2000)
    assert [r.covered for r in a] == [r.covered for r in b]
    assert all(0 <= r.covered <= r.n_sim for r in a)


def test_worker_count_does_not_change_counts():
    scn = small(("rte_perm", "rmst_ratio_boot", "km_log"))
    one = harness.run_scenario(scn, n_sim=16, B=20, seed=8, workers=1, truth_n=2000)
    two = harness.run_scenario(scn, n_sim=16, B=20, seed=8, workers=2, truth_n=2000)
    assert [r.covered for r in one] == [r.covered for r in two]


def test_emit_report_empty_and_round_trip(tmp_path):
    path = tmp_path / "empty.csv"
    harness.emit_report([], path)
    assert path.read_text().strip() == ",".join(harness.COLUMNS)
    row = harness.CoverageResult("s", "rte_perm", "left", 10, 9, 0.9, 93.2,
                                 96.8, False, 1, 0.25)
    path = tmp_path / "one.csv"
    harness.emit_report([row], path)
    assert harness.read_report(path) == [row]


def test_emit_report_unwritable(tmp_path):
    with pytest.raises(OSError):
        harness.emit_report([], tmp_path / "missing" / "x.csv")


def test_manifest_rerun_reproduces_counts(tmp_path):
    scn = small(("rte_gauss", "midrank_binomial"))
    res = harness.run_scenario(scn, n_sim=10, B=5, seed=3, workers=1)
    path = tmp_path / "cov.csv"
    harness.emit_report(res, path, [scn], seed=3, B=5, n_sim=10)
    again = harness.rerun_manifest(tmp_path / "cov.manifest.json", workers=1)
    assert [r.covered for r in again] == [r.covered for r in res]


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("PAIRED_SURV_THREADS", "1")
    assert harness.default_workers() == 1
    monkeypatch.delenv("PAIRED_SURV_THREADS")
    assert harness.default_workers() >= 1


def test_true_values_match_closed_forms():
    scn = simgen.preset("prophaz", nu=0.6, n=100)
    truth = harness.true_values(scn, seed=0, N=20_000)
    mu1 = simgen.true_rmst(1.5, 1.3, 1.2)
    mu2 = simgen.true_rmst(1.0, 1.3, 1.2)
    assert truth["rmst_diff"] == pytest.approx(mu2 - mu1)
    assert truth["rmst_ratio"] == pytest.approx(mu2 / mu1)
    assert 0 < truth["theta"] < 1 and 0 < truth["exceedance"] < 1


def test_rte_permutation_coverage_uncensored():
    scn = simgen.preset("equal", nu=0.6, n=100, methods=("rte_perm",),
                        sides=("left",))
    (res,) = harness.run_scenario(scn, n_sim=1000, B=500, seed=2024, workers=1)
    assert res.band == (93.2, 96.8)
    assert res.within_band, res
    assert np.isfinite(res.mean_runtime_per_rep)
