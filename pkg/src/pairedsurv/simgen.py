r"""Simulation scenarios: dependent Weibull pairs, censoring and true values.

Pairs follow the bivariate Weibull law with joint survival function

.. math::

    S(t_1, t_2) = \exp\Big(-\big((t_1/\theta_1)^{\gamma_1/\nu}
                  + (t_2/\theta_2)^{\gamma_2/\nu}\big)^{\nu}\Big),

a Gumbel survival copula with parameter ``1 / nu`` over Weibull marginals.
``nu = 1`` is independence and Kendall's tau equals ``1 - nu``.
"""

import json
import math
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from .data import PairedDataset
from .exceptions import NotProportionalError, ScenarioError

__all__ = [
    "BivWeibullParams",
    "Censoring",
    "Scenario",
    "PRESETS",
    "METHODS",
    "preset",
    "joint_survival",
    "positive_stable",
    "sample_pair",
    "sample_pairs",
    "apply_censoring",
    "true_theta",
    "true_exceedance",
    "true_rmst",
    "hazard_ratio",
    "load_scenario",
    "dump_scenario",
]


@dataclass(frozen=True)
class BivWeibullParams:
    theta1: float = 1.0
    theta2: float = 1.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        for name in ("theta1", "theta2", "gamma1", "gamma2"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive")
        if not 0 < self.nu <= 1:
            raise ScenarioError("nu must lie in (0, 1]")


@dataclass(frozen=True)
class Censoring:
    """Exponential censoring of the second time with ``rate``; ``None`` for
    no censoring."""

    rate: float = None

    def __post_init__(self):
        if self.rate is not None and not self.rate > 0:
            raise ScenarioError("censoring rate must be positive")

    @property
    def name(self):
        return "none" if self.rate is None else f"exp{self.rate:g}"

    @classmethod
    def parse(cls, value):
        """Accept ``"none"``, ``"exp<rate>"`` or a ``{"rate": ...}`` mapping."""
        if isinstance(value, Censoring):
            return value
        if value is None or value == "none":
            return cls()
        if isinstance(value, dict):
            return cls(rate=value.get("rate"))
        m = re.fullmatch(r"exp\(?([0-9.eE+-]+(?:/[0-9.]+)?)\)?", str(value))
        if not m:
            raise ScenarioError(f"unknown censoring {value!r}")
        num, _, den = m.group(1).partition("/")
        rate = float(num) / (float(den) if den else 1.0)
        return cls(rate=rate)


# Method identifiers understood by the coverage harness.
METHODS = (
    "rte_gauss", "rte_perm", "rte_boot",
    "rmst_diff_gauss", "rmst_diff_perm", "rmst_diff_boot",
    "rmst_ratio_gauss", "rmst_ratio_perm", "rmst_ratio_boot",
    "km_cloglog", "km_log",
    "midrank_binomial", "midrank_wald",
    "von_hoff", "mick_ignore",
)
RMST_METHODS = tuple(m for m in METHODS if m.startswith("rmst"))
DEFAULT_METHODS = ("rte_perm", "rmst_diff_perm", "rmst_ratio_perm",
                   "km_cloglog", "midrank_binomial", "midrank_wald")
SIDES = ("left", "right", "two")


@dataclass(frozen=True)
class Scenario:
    params: BivWeibullParams
    n: int
    censoring: Censoring = field(default_factory=Censoring)
    delta: float = 1.0
    tau1: float = 1.2
    tau2: float = None
    methods: tuple = DEFAULT_METHODS
    sides: tuple = SIDES
    name: str = "custom"

    def __post_init__(self):
        if self.n < 2:
            raise ScenarioError("n must be at least 2")
        if not self.delta > 0 or not self.tau1 > 0:
            raise ScenarioError("delta and tau1 must be positive")
        if self.tau2 is None:
            object.__setattr__(self, "tau2", self.delta * self.tau1)
        object.__setattr__(self, "censoring", Censoring.parse(self.censoring))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "sides", tuple(self.sides))
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ScenarioError(f"unknown methods {sorted(unknown)}")
        bad = set(self.sides) - set(SIDES)
        if bad:
            raise ScenarioError(f"unknown sides {sorted(bad)}")

    @property
    def id(self):
        p = self.params
        return (f"{self.name}_nu{p.nu:g}_n{self.n}_{self.censoring.name}"
                f"_delta{self.delta:g}")

    def to_dict(self):
        out = asdict(self)
        out["censoring"] = self.censoring.name
        out["methods"] = list(self.methods)
        out["sides"] = list(self.sides)
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "preset" in d:
            name = d.pop("preset")
            return preset(name, **d)
        try:
            params = BivWeibullParams(**d.pop("params"))
            return cls(params=params, **d)
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"invalid scenario definition: {exc}") from exc


PRESETS = {
    "equal": dict(theta1=1.0, theta2=1.0, gamma1=1.0, gamma2=1.0),
    "prophaz": dict(theta1=1.5, theta2=1.0, gamma1=1.3, gamma2=1.3),
    "nonprophaz": dict(theta1=1.5, theta2=1.1, gamma1=1.2, gamma2=1.5),
}


def preset(name, nu=1.0, n=100, censoring="none", delta=1.0, **kwargs):
    """Scenario with one of the named marginal sets ``equal``, ``prophaz``
    or ``nonprophaz``."""
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; "
                            f"choose from {sorted(PRESETS)}")
    params = BivWeibullParams(nu=nu, **PRESETS[name])
    kwargs.setdefault("name", name)
    return Scenario(params=params, n=n, censoring=censoring, delta=delta,
                    **kwargs)


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(d, dict):
        raise ScenarioError(f"{path}: expected a JSON object")
    return Scenario.from_dict(d)


def dump_scenario(scn, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scn.to_dict(), fh, indent=2)


def joint_survival(p, t1, t2):
    """``P(T1 > t1, T2 > t2)``."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if np.any(t1 < 0) or np.any(t2 < 0):
        raise ValueError("times must be nonnegative")
    s = ((t1 / p.theta1) ** (p.gamma1 / p.nu)
         + (t2 / p.theta2) ** (p.gamma2 / p.nu)) ** p.nu
    out = np.exp(-s)
    return float(out) if out.ndim == 0 else out


def positive_stable(nu, size, rng):
    """Draws with Laplace transform ``exp(-s**nu)``, ``0 < nu < 1``.

    Chambers-Mallows-Stuck in Kanter's form.
    """
    u = rng.uniform(0.0, math.pi, size)
    e = rng.exponential(1.0, size)
    return (np.sin(nu * u) / np.sin(u) ** (1.0 / nu)
            * (np.sin((1.0 - nu) * u) / e) ** ((1.0 - nu) / nu))


def sample_pairs(p, size, rng):
    """``size`` independent pairs ``(T1, T2)`` as two arrays."""
    e = rng.exponential(1.0, (2, size))
    if p.nu == 1.0:
        h = e
    else:
        # Cumulative hazards -log U_j = (E_j / V)^nu share the frailty V.
        v = positive_stable(p.nu, size, rng)
        h = (e / v) ** p.nu
    t1 = p.theta1 * h[0] ** (1.0 / p.gamma1)
    t2 = p.theta2 * h[1] ** (1.0 / p.gamma2)
    return t1, t2


def sample_pair(p, rng):
    t1, t2 = sample_pairs(p, 1, rng)
    return float(t1[0]), float(t2[0])


def apply_censoring(pairs, censoring, rng):
    """Censor the second time by an independent exponential variable.

    `pairs` is ``(t1, t2)``; the first time stays uncensored.
    """
    t1, t2 = (np.asarray(a, dtype=float) for a in pairs)
    censoring = Censoring.parse(censoring)
    if censoring.rate is None:
        y2, d2 = t2, np.ones(t2.size, int)
    else:
        c = rng.exponential(1.0 / censoring.rate, t2.size)
        y2 = np.minimum(t2, c)
        d2 = (t2 <= c).astype(int)
    return PairedDataset.from_arrays(t1=t1, y2=y2, delta2=d2)


def simulate_dataset(scn, rng):
    return apply_censoring(sample_pairs(scn.params, scn.n, rng),
                           scn.censoring, rng)


def true_theta(scn, N=100_000, rng=None):
    """Monte Carlo value of the relative treatment effect from `N`
    uncensored pairs truncated at the scenario horizons."""
    rng = np.random.default_rng(rng)
    t1, t2 = sample_pairs(scn.params, N, rng)
    a1 = scn.delta * np.minimum(t1, scn.tau1)
    a2 = np.minimum(t2, scn.tau2)
    return float(np.mean(a2 > a1) + 0.5 * np.mean(a2 == a1))


def true_exceedance(scn, N=100_000, rng=None):
    """Monte Carlo value of ``P(T2 > delta T1)`` without truncation."""
    rng = np.random.default_rng(rng)
    t1, t2 = sample_pairs(scn.params, N, rng)
    return float(np.mean(t2 > scn.delta * t1))


def true_rmst(theta, gamma, tau):
    """``int_0^tau exp(-(t / theta)^gamma) dt`` by adaptive quadrature."""
    if tau <= 0:
        return 0.0
    value, _ = quad(lambda t: math.exp(-((t / theta) ** gamma)), 0.0, tau,
                    epsabs=1e-8)
    return value


def hazard_ratio(p):
    """Constant hazard ratio ``(theta1 / theta2)^gamma`` of equal-shape
    marginals."""
    if p.gamma1 != p.gamma2:
        raise NotProportionalError(
            "marginal shapes differ, so the hazard ratio varies over time")
    return (p.theta1 / p.theta2) ** p.gamma1


def with_updates(scn, **changes):
    return replace(scn, **changes)
