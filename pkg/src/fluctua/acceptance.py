"""Acceptance suite: exact identities plus desk-scale convergence checks.

Each criterion returns a :class:`CriterionResult` made of individual
:class:`Check` rows.  A criterion passes when all of its checks pass and it
finishes inside its time budget.  ``diagnostics`` carry extra numbers that
explain a result but never decide it.

Simulations are cached per process by configuration, so criteria that share
a sample (the T0 limit and the zeros joint law) simulate it once, and the
reproducibility criterion can re-run every configuration used so far.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from . import fluctuation as fl
from . import limitlaw, mc, sparre, stats
from .series import TruncatedSeries

__all__ = ["Check", "CriterionResult", "Suite", "CRITERIA", "run_suite", "format_line"]

DEFAULT_SEED = 20240611


@dataclass
class Check:
    name: str
    value: float
    limit: float
    passed: bool
    relation: str = "<"

    def __str__(self):
        mark = "ok" if self.passed else "FAIL"
        return f"{self.name}={self.value:.4g} {self.relation} {self.limit:.4g} {mark}"


@dataclass
class CriterionResult:
    number: int
    key: str
    checks: list
    seconds: float = 0.0
    budget: float = math.inf
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def in_time(self) -> bool:
        return self.seconds < self.budget

    @property
    def passed(self) -> bool:
        return self.error is None and self.in_time and all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "key": self.key,
            "pass": self.passed,
            "seconds": self.seconds,
            "budget": self.budget,
            "checks": [{"name": c.name, "value": c.value, "limit": c.limit, "relation": c.relation,
                        "pass": c.passed} for c in self.checks],
            "diagnostics": self.diagnostics,
            "error": self.error,
        }


def format_line(res: CriterionResult) -> str:
    head = f"[{'PASS' if res.passed else 'FAIL'}] {res.number:02d} {res.key}"
    timing = f"({res.seconds:.1f}s / {res.budget:g}s)"
    if res.error:
        return f"{head} {timing} error: {res.error}"
    return f"{head} {timing} " + "; ".join(str(c) for c in res.checks)


def _lt(name, value, limit) -> Check:
    return Check(name, float(value), float(limit), bool(value < limit))


def _le(name, value, limit) -> Check:
    return Check(name, float(value), float(limit), bool(value <= limit), "<=")


class Suite:
    """Shared settings and the simulation cache."""

    def __init__(self, n_paths: int = 100_000, seed: int = DEFAULT_SEED, workers: int | None = None,
                 epsilon: float = 1e-9, backend: str | None = None):
        self.n_paths = n_paths
        self.seed = seed
        self.workers = workers or os.cpu_count() or 1
        self.epsilon = epsilon
        self.backend = backend
        self.cache: dict = {}

    def config(self, family, functional, **kw) -> mc.SimulationConfig:
        return mc.SimulationConfig(family, functional, kw.pop("n_paths", self.n_paths), self.seed,
                                   self.workers, self.epsilon, **kw)

    def simulate(self, cfg: mc.SimulationConfig) -> mc.SimulationResult:
        key = replace(cfg, workers=1)
        if key not in self.cache:
            self.cache[key] = mc.simulate(cfg, self.backend)
        return self.cache[key]


# -- exact identities --------------------------------------------------------------


def _random_lattice(rng) -> fl.LatticeStepLaw:
    k = int(rng.integers(2, 6))
    offsets = rng.choice(np.arange(-3, 4), size=k, replace=False)
    if offsets.min() >= 0:
        offsets[0] = -1
    if offsets.max() <= 0:
        offsets[-1] = 1
    w = rng.random(k) + 0.05
    return fl.LatticeStepLaw(tuple(int(o) for o in offsets), tuple(w / w.sum()))


def crit_duality(s: Suite):
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for _ in range(20):
        law = _random_lattice(rng)
        lad = fl.ladder_series(fl.sign_probs(law, 60), 60)
        worst = max(worst, lad.duality_residual())
    return [_lt("max_residual", worst, 1e-10)], {}


def crit_sparre(s: Suite):
    rng = np.random.default_rng(s.seed)
    bad_inverse = bad_position = 0
    for _ in range(10_000):
        seq = list(rng.standard_normal(int(rng.integers(1, 13))))
        out = sparre.transform(seq)
        if sparre.inverse_transform(out) != seq:
            bad_inverse += 1
        if sparre.first_minimum_position(out) != len(sparre.negative_partial_sum_indices(seq)):
            bad_position += 1
    return [_le("inverse_failures", bad_inverse, 0), _le("position_failures", bad_position, 0)], {}


def crit_three_forms(s: Suite):
    checks, diag = [], {}
    for p in (0.55, 0.6, 0.7):
        forms = fl.occupation_gf_forms(fl.sign_probs(fl.LatticeStepLaw.simple(p), 2000), 60)
        c = [f.coef for f in forms.values()]
        gap = max(np.max(np.abs(c[0] - c[1])), np.max(np.abs(c[0] - c[2])), np.max(np.abs(c[1] - c[2])))
        checks.append(_lt(f"gap_p{p}", gap, 1e-9))
        closed = fl.simple_walk_closed_forms(p, 60).occupation
        diag[f"closed_form_gap_p{p}"] = float(np.max(np.abs(closed.coef - c[2])))
    return checks, diag


def _occupation_pmf(p: float, K: int = 10) -> np.ndarray:
    return fl.occupation_gf(fl.sign_probs(fl.LatticeStepLaw.simple(p), 2000), K).coef


def crit_occupation_pmf(s: Suite):
    res = s.simulate(s.config(mc.StepFamily.simple(0.6), "Z0"))
    n = len(res.values)
    pmf = _occupation_pmf(0.6)
    emp = np.array([(res.values == k).mean() for k in range(11)])
    se = np.sqrt(pmf * (1 - pmf) / n)
    z = np.abs(emp - pmf) / se
    se0 = math.sqrt(emp[0] * (1 - emp[0]) / n)
    checks = [_le("max_z_k<=10", z.max(), 3.0), _le("z_P0_vs_1/3", abs(emp[0] - 1 / 3) / se0, 3.0)]
    return checks, {"empirical": emp.tolist(), "exact": pmf.tolist(), "capped": res.n_capped}


# -- convergence checks ------------------------------------------------------------


def crit_small_drift(s: Suite):
    checks, diag = [], {}
    A = limitlaw.LawA()
    for p, lim in ((0.6, 0.08), (0.55, 0.05), (0.52, 0.03), (0.51, 0.02)):
        res = s.simulate(s.config(mc.StepFamily.simple(p), "Z0"))
        rep = stats.ks_against(res.sample(2 * (p - 0.5) ** 2), A.cdf)
        checks.append(_lt(f"ks_p{p}", rep.ks, lim))
        diag[f"atom0_p{p}"] = float((res.values == 0).mean())
        diag[f"exact_atom0_p{p}"] = 1 - (1 - p) / p
    return checks, diag


def crit_tilted(s: Suite):
    checks, diag = [], {}
    A = limitlaw.LawA()
    for d, lim in ((0.1, 0.03), (0.05, 0.02)):
        p = mc.tilt_for_drift("normal", d)
        fam = mc.StepFamily.tilted("normal", p)
        res = s.simulate(s.config(fam, "Z0"))
        factor = fam.delta**2 / (2 * fam.sigma2)
        checks.append(_lt(f"ks_delta{d}", stats.ks_against(res.sample(factor), A.cdf).ks, lim))
        diag[f"atom0_delta{d}"] = float((res.values == 0).mean())
    return checks, diag


# expected overshoot of a Gaussian random walk over a level, in units of sigma
_OVERSHOOT = -special.zeta(0.5) / math.sqrt(2 * math.pi)


def crit_prohorov(s: Suite):
    d = 0.05
    res = s.simulate(s.config(mc.StepFamily.shift("normal", d), "min"))
    sample = res.sample(-d)
    xs = np.round(np.arange(1, 21) * 0.1, 10)
    gap = stats.survival_gap(sample, lambda x: np.exp(-2 * x), xs)
    corrected = stats.survival_gap(sample, lambda x: np.exp(-2 * (x + _OVERSHOOT * d)), xs)
    return [_lt("sup_gap", gap, 0.02)], {"gap_overshoot_corrected": corrected}


def crit_last_exit(s: Suite):
    N = 10_000
    p = 0.5 + 1 / (2 * math.sqrt(N))
    res = s.simulate(s.config(mc.StepFamily.simple(p), "lastzero", horizon=N))
    sample = res.sample(1 / N)
    law = limitlaw.LastExitLaw(1.0)
    ks = stats.ks_against(sample, law.cdf).ks
    mean, se = stats.moment_report(sample)
    target = 1 - math.exp(-0.5)
    # the sampler itself against the closed-form cdf, at 10^6 draws
    draws = stats.EmpiricalSample(law.sample(np.random.default_rng(s.seed), 1_000_000))
    grid = np.linspace(0.0, 1.0, 401)
    sampler_gap = float(np.max(np.abs(draws.ecdf(grid) - law.cdf(grid))))
    checks = [_lt("ks", ks, 0.02), _le("mean_z", abs(mean - target) / se, 3.0)]
    return checks, {"mean": mean, "se": se, "sampler_ecdf_gap": sampler_gap}


def _enumerate_last_zero(p: float, N: int) -> np.ndarray:
    out = np.zeros(N + 1)
    for steps in itertools.product((-1, 1), repeat=N):
        x, last, prob = 0, 0, 1.0
        for k, st in enumerate(steps, 1):
            x += st
            prob *= p if st > 0 else 1 - p
            if x == 0:
                last = k
        out[last] += prob
    return out


def crit_last_zero_pmf(s: Suite):
    worst = 0.0
    parity = 0.0
    for p in (0.5, 0.6, 0.7):
        for N in range(1, 13):
            worst = max(worst, np.max(np.abs(fl.last_zero_pmf(p, N) - _enumerate_last_zero(p, N))))
        for n in range(0, 6):
            even = fl.last_zero_pmf(p, 2 * n)
            odd = fl.last_zero_pmf(p, 2 * n + 1)
            parity = max(parity, np.max(np.abs(odd[: 2 * n + 1] - even)), abs(odd[-1]))
    return [_lt("enumeration_gap", worst, 1e-12), _le("odd_even_gap", parity, 0.0)], {}


def crit_integral_identity(s: Suite):
    checks = []
    for sv in (0.5, 1.0, 2.0):
        lhs, rhs = fl.sojourn_integral_identity(sv)
        checks.append(_lt(f"gap_s{sv}", abs(lhs - rhs), 1e-8))
    return checks, {}


def crit_normal_walk(s: Suite):
    checks = []
    for ratio in (0.5, 0.1):
        prov = fl.normal_sign_probs(ratio, 1.0, 4000)
        r_series = fl.ladder_series(prov, 1000).r
        gap = max(abs(fl.normal_walk_r(z, ratio) - r_series(z)) for z in (0.3, 0.6, 0.9))
        checks.append(_lt(f"gap_ratio{ratio}", gap, 1e-6))
    q, sv = 1e-4, 1.0
    r = fl.normal_walk_r(math.exp(-q * sv), -math.sqrt(2 * q))
    limit_gap = abs(r ** (1 / math.sqrt(q)) - math.exp(-(math.sqrt(1 + sv) - 1)))
    checks.append(_lt("limit_c_gap", limit_gap, 0.01))
    return checks, {}


def _zeros_sample(s: Suite):
    return s.simulate(s.config(mc.StepFamily.simple(0.52), "zeros_count"))


def crit_t0_limit(s: Suite):
    p = 0.52
    d = 2 * p - 1
    res = _zeros_sample(s)
    ks = stats.ks_against(stats.EmpiricalSample(res.aux * d * d / 2), limitlaw.GammaHalf().cdf).ks
    h0 = fl.simple_walk_closed_forms(p, 8).h[0]
    checks = [_lt("ks_T0", ks, 0.03), Check("h0_minus_drift", abs(h0 - d), 0.0, h0 == d, "==")]
    return checks, {"atom_T0_0": float((res.aux == 0).mean()), "capped": res.n_capped}


def _zeros_joint_dp(p: float, n_max: int) -> np.ndarray:
    """``P(N_0 = r, T_0 = 2n)`` from a forward path DP times ``P(no return) = p - q``."""
    q = 1 - p
    L = 2 * n_max
    size = 2 * L + 1
    # dist[r, x] after k steps, with the walk restricted to paths whose r-th zero is at k
    cur = np.zeros((n_max + 1, size))
    cur[0, L] = 1.0
    table = np.zeros((n_max + 1, n_max + 1))
    table[0, 0] = 2 * p - 1
    for k in range(1, L + 1):
        nxt = np.zeros_like(cur)
        nxt[:, 1:] += p * cur[:, :-1]
        nxt[:, :-1] += q * cur[:, 1:]
        at_zero = nxt[:, L].copy()
        nxt[:, L] = 0.0
        nxt[1:, L] = at_zero[:-1]
        cur = nxt
        if k % 2 == 0:
            table[1:, k // 2] = (2 * p - 1) * cur[1:, L]
    return table


def crit_zeros_joint(s: Suite):
    p = 0.6
    table = fl.zeros_joint_table(p, 20)
    mass = table.sum()
    oracle_gap = float(np.max(np.abs(table - _zeros_joint_dp(p, 20))))
    res = _zeros_sample(s)
    d = 2 * 0.52 - 1
    ks_y = stats.ks_against(stats.EmpiricalSample(res.values * d), limitlaw.ExponentialLaw(1.0).cdf).ks
    ks_t = stats.ks_against(stats.EmpiricalSample(res.aux * d * d / 2), limitlaw.GammaHalf().cdf).ks

    # mass of the printed density, in coordinates y = 2 v u, t = v^2
    def inner(v):
        f = lambda u: limitlaw.joint_zero_density_printed(2 * v * u, v * v) * 4 * v * v
        return integrate.quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-12)[0]

    printed = integrate.quad(inner, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    checks = [
        _lt("mass_gap_n<=20", abs(mass - 1), 1e-6),
        _lt("oracle_gap", oracle_gap, 1e-12),
        _lt("ks_N0_exp1", ks_y, 0.03),
        _lt("ks_T0_gamma_half", ks_t, 0.03),
        _lt("printed_mass_gap", abs(printed - 1 / math.sqrt(2)), 1e-6),
    ]
    return checks, {"mass_n<=20": mass, "mass_n<=400": float(fl.zeros_joint_table(p, 400).sum()),
                    "atom_N0_0": float((res.values == 0).mean()), "printed_mass": printed}


def crit_chung_hunt(s: Suite):
    n = 10_000
    res = s.simulate(s.config(mc.StepFamily.simple(0.5), "zeros_count", horizon=2 * n))
    half = limitlaw.HalfNormalLaw()
    ks = stats.ks_against(res.sample(math.sqrt(2 / n)), half.cdf).ks
    alt = stats.ks_against(res.sample(1 / math.sqrt(2 * n)), half.cdf).ks
    return [_lt("ks", ks, 0.02)], {"ks_scaled_by_1/sqrt(2n)": alt}


def crit_vz_limit(s: Suite):
    d, z = 0.05, 1.0
    res = s.simulate(s.config(mc.StepFamily.shift("normal", d), "Zz", level=z / d))
    sample = res.sample(d * d)
    mean, se = stats.moment_report(sample)
    lt = np.exp(-sample.values)
    lt_mean, lt_se = lt.mean(), lt.std(ddof=1) / math.sqrt(len(lt))
    target = limitlaw.OccupationLaw(z, 1.0, 1.0)
    checks = [_le("mean_z", abs(mean - 1.5) / se, 3.0),
              _le("laplace_z", abs(lt_mean - target.laplace(1.0)) / lt_se, 3.0)]
    return checks, {"mean": mean, "se": se, "laplace": float(lt_mean), "laplace_target": target.laplace(1.0)}


def crit_reproducibility(s: Suite):
    if not s.cache:
        fam = mc.StepFamily.simple(0.6)
        for fn, kw in (("Z0", {}), ("min", {}), ("lastzero", {"horizon": 50}), ("zeros_count", {})):
            s.simulate(s.config(fam, fn, n_paths=min(s.n_paths, 20_000), **kw))
    mismatched = 0
    for key, res in list(s.cache.items()):
        other = mc.simulate(replace(key, workers=s.workers + 3), s.backend)
        if not (np.array_equal(other.values, res.values) and np.array_equal(other.aux, res.aux)):
            mismatched += 1
    return [_le("mismatched_configs", mismatched, 0)], {"configs": len(s.cache)}


CRITERIA = {
    "duality": (1, crit_duality, 10),
    "sparre": (2, crit_sparre, 5),
    "three_forms": (3, crit_three_forms, 5),
    "occupation_pmf": (4, crit_occupation_pmf, 30),
    "small_drift": (5, crit_small_drift, 300),
    "tilted": (6, crit_tilted, 180),
    "prohorov": (7, crit_prohorov, 120),
    "last_exit": (8, crit_last_exit, 180),
    "last_zero_pmf": (9, crit_last_zero_pmf, 10),
    "integral_identity": (10, crit_integral_identity, 1),
    "normal_walk": (11, crit_normal_walk, 30),
    "t0_limit": (12, crit_t0_limit, 120),
    "zeros_joint": (13, crit_zeros_joint, 180),
    "chung_hunt": (14, crit_chung_hunt, 120),
    "vz_limit": (15, crit_vz_limit, 120),
    "reproducibility": (16, crit_reproducibility, math.inf),
}


def run_criterion(key: str, suite: Suite) -> CriterionResult:
    number, fn, budget = CRITERIA[key]
    t0 = time.perf_counter()
    try:
        checks, diag = fn(suite)
        err = None
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        checks, diag, err = [], {}, f"{type(exc).__name__}: {exc}"
    return CriterionResult(number, key, checks, time.perf_counter() - t0, budget, diag, err)


def run_suite(only=None, suite: Suite | None = None, echo=None) -> list[CriterionResult]:
    suite = suite or Suite()
    keys = list(CRITERIA) if not only else list(only)
    for k in keys:
        if k not in CRITERIA:
            raise KeyError(k)
    out = []
    for k in keys:
        res = run_criterion(k, suite)
        out.append(res)
        if echo is not None:
            echo(format_line(res))
    return out
