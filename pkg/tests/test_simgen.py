import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kendalltau, kstest, weibull_min

from pairedsurv import simgen
from pairedsurv.exceptions import NotProportionalError, ScenarioError

GRID = (0.3, 0.6, 1.0)


def params(nu=1.0, **kw):
    return simgen.BivWeibullParams(nu=nu, **kw)


def test_joint_survival_examples():
    assert simgen.joint_survival(params(), 1, 1) == pytest.approx(math.exp(-2))
    assert simgen.joint_survival(params(0.5), 1, 1) == pytest.approx(
        math.exp(-math.sqrt(2)))
    p = params(0.6, theta2=1.5, gamma2=1.3)
    assert simgen.joint_survival(p, 0, 0.8) == pytest.approx(
        math.exp(-(0.8 / 1.5) ** 1.3))


def test_joint_survival_monotone_and_product_iff_independent():
    t = np.linspace(0, 3, 31)
    for nu in (1.0, 0.8, 0.4):
        p = params(nu, theta1=1.5, gamma1=1.3, gamma2=0.8)
        S = simgen.joint_survival(p, t[:, None], t[None, :])
        assert np.all(np.diff(S, axis=0) <= 0) and np.all(np.diff(S, axis=1) <= 0)
        prod = (simgen.joint_survival(p, t[:, None], 0.0)
                * simgen.joint_survival(p, 0.0, t[None, :]))
        if nu == 1.0:
            assert np.allclose(S, prod, atol=1e-12, rtol=0)
        else:
            assert np.max(np.abs(S - prod)) > 1e-3


@pytest.mark.parametrize("nu", [1.0, 0.6, 0.4])
def test_sampler_joint_survival(nu):
    p = params(nu)
    t1, t2 = simgen.sample_pairs(p, 100_000, np.random.default_rng(100 + int(10 * nu)))
    for a in GRID:
        for b in GRID:
            emp = np.mean((t1 > a) & (t2 > b))
            assert emp == pytest.approx(simgen.joint_survival(p, a, b), abs=0.01)


def test_sampler_marginals():
    p = params(0.5, theta1=1.5, theta2=1.1, gamma1=1.2, gamma2=1.5)
    t1, t2 = simgen.sample_pairs(p, 100_000, np.random.default_rng(3))
    assert kstest(t1, weibull_min(1.2, scale=1.5).cdf).statistic < 0.01
    assert kstest(t2, weibull_min(1.5, scale=1.1).cdf).statistic < 0.01
    p = params(1.0, theta1=1.5, gamma1=1.3)
    t1, _ = simgen.sample_pairs(p, 100_000, np.random.default_rng(4))
    assert np.mean(t1 > 1) == pytest.approx(math.exp(-(1 / 1.5) ** 1.3), abs=0.005)


def test_sampler_kendall_tau():
    t1, t2 = simgen.sample_pairs(params(0.4), 20_000, np.random.default_rng(5))
    assert kendalltau(t1, t2).statistic == pytest.approx(0.6, abs=0.03)


def test_sample_pair_scalar():
    t1, t2 = simgen.sample_pair(params(0.6), np.random.default_rng(0))
    assert isinstance(t1, float) and t1 > 0 and t2 > 0


def test_positive_stable_laplace_transform():
    v = simgen.positive_stable(0.5, 200_000, np.random.default_rng(6))
    for s in (0.5, 1.0, 2.0):
        assert np.mean(np.exp(-s * v)) == pytest.approx(math.exp(-s**0.5), abs=0.005)


def test_censoring_fractions():
    rng = np.random.default_rng(7)
    t1 = rng.exponential(size=100_000)
    t2 = rng.exponential(size=100_000)
    none = simgen.apply_censoring((t1, t2), "none", rng)
    assert np.all(none.delta2 == 1)
    for rate, frac in ((1.0, 0.5), (0.5, 1 / 3)):
        ds = simgen.apply_censoring((t1, t2), simgen.Censoring(rate), rng)
        assert np.mean(ds.delta2 == 0) == pytest.approx(frac, abs=0.01)
        assert np.array_equal(ds.t1, t1) and np.all(ds.delta1 == 1)
        assert np.all(ds.y2 <= t2) and np.all(ds.y2[ds.delta2 == 1] == t2[ds.delta2 == 1])


def test_true_theta_symmetry():
    scn = simgen.preset("equal", nu=0.6, n=100, censoring="exp0.5")
    assert simgen.true_theta(scn, rng=1) == pytest.approx(0.5, abs=0.005)
    scn = simgen.preset("equal", nu=1.0, n=100, tau1=1e6)
    assert simgen.true_theta(scn, rng=2) == pytest.approx(0.5, abs=0.005)


def test_true_theta_independent_weibull_quadrature():
    scn = simgen.preset("prophaz", nu=1.0, n=100, tau1=1e6)
    p = scn.params

    def integrand(t):
        # density of T1 times survival of T2
        f1 = weibull_min(p.gamma1, scale=p.theta1).pdf(t)
        return f1 * math.exp(-(t / p.theta2) ** p.gamma2)

    exact, _ = quad(integrand, 0, np.inf)
    a = simgen.true_theta(scn, rng=10)
    b = simgen.true_theta(scn, rng=11)
    assert a == pytest.approx(b, abs=0.01)
    assert a == pytest.approx(exact, abs=0.01)
    assert simgen.true_exceedance(scn, rng=10) == pytest.approx(exact, abs=0.01)


def test_true_rmst():
    assert simgen.true_rmst(1, 1, 1.2) == pytest.approx(0.69881, abs=1e-5)
    assert simgen.true_rmst(1, 1, 0) == 0.0
    assert simgen.true_rmst(2, 1, 1.2) == pytest.approx(2 * (1 - math.exp(-0.6)), abs=1e-8)
    assert 2 * (1 - math.exp(-0.6)) == pytest.approx(0.90238, abs=1e-5)


def test_hazard_ratio():
    assert simgen.hazard_ratio(simgen.preset("prophaz").params) == pytest.approx(1.694, abs=1e-3)
    assert simgen.hazard_ratio(params()) == 1.0
    with pytest.raises(NotProportionalError):
        simgen.hazard_ratio(simgen.preset("nonprophaz").params)


def test_params_validation():
    with pytest.raises(ScenarioError):
        params(0.0)
    with pytest.raises(ScenarioError):
        params(1.2)
    with pytest.raises(ScenarioError):
        params(theta1=-1)


def test_censoring_parse():
    assert simgen.Censoring.parse("none").rate is None
    assert simgen.Censoring.parse("exp0.5").rate == 0.5
    assert simgen.Censoring.parse("exp(1/2)").rate == 0.5
    assert simgen.Censoring.parse({"rate": 1}).rate == 1
    assert simgen.Censoring(1.0).name == "exp1"
    with pytest.raises(ScenarioError):
        simgen.Censoring.parse("weibull")


def test_scenario_round_trip(tmp_path):
    scn = simgen.preset("nonprophaz", nu=0.4, n=50, censoring="exp1", delta=1.3,
                        methods=("rte_perm", "km_log"), sides=("left",))
    assert scn.tau2 == pytest.approx(1.3 * 1.2)
    assert scn.id == "nonprophaz_nu0.4_n50_exp1_delta1.3"
    path = tmp_path / "scn.json"
    simgen.dump_scenario(scn, path)
    assert simgen.load_scenario(path) == scn
    path.write_text('{"preset": "equal", "nu": 0.6, "n": 80}')
    assert simgen.load_scenario(path) == simgen.preset("equal", nu=0.6, n=80)


def test_scenario_errors(tmp_path):
    with pytest.raises(ScenarioError):
        simgen.preset("unknown")
    with pytest.raises(ScenarioError):
        simgen.preset("equal", methods=("magic",))
    with pytest.raises(ScenarioError):
        simgen.preset("equal", n=1)
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioError):
        simgen.load_scenario(path)


def test_simulate_dataset_reproducible():
    scn = simgen.preset("equal", nu=0.6, n=30, censoring="exp0.5")
    a = simgen.simulate_dataset(scn, np.random.default_rng(9))
    b = simgen.simulate_dataset(scn, np.random.default_rng(9))
    assert np.array_equal(a.y2, b.y2) and a.n == 30
