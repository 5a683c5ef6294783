"""Seeded Monte Carlo for functionals of small-drift random walks.

Every path draws from its own SplitMix64 stream whose starting state is the
path index pushed through a 64-bit avalanche together with the master seed.
Results therefore depend only on ``(seed, path index)`` and are bit-identical
for any number of workers.

Infinite-horizon functionals (occupation counts, the all-time minimum, the
number of returns) are truncated by a Lundberg stopping rule: once the walk
is ``B = ln(1/eps)/theta*`` above the relevant level, the chance that it ever
comes back is at most ``eps``.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _backend, limitlaw
from .fluctuation import LatticeStepLaw
from .limitlaw import DomainError
from .stats import EmpiricalSample, KSReport, ks_against

__all__ = [
    "UnsupportedFamilyError",
    "StepFamily",
    "StoppingRule",
    "SimulationConfig",
    "SimulationResult",
    "FUNCTIONALS",
    "lundberg_exponent",
    "tilt_for_drift",
    "simulate",
    "default_scaling",
    "convergence_study",
]

FUNCTIONALS = ("Z0", "Zz", "min", "lastzero", "zeros_count", "last_return")
_FCODE = {"Z0": 0, "Zz": 0, "min": 1, "lastzero": 2, "zeros_count": 3, "last_return": 3}
_BASES = ("normal", "uniform", "rademacher", "lattice")


class UnsupportedFamilyError(ValueError):
    """The family has no exact sampler or no Lundberg exponent."""


@dataclass(frozen=True)
class StepFamily:
    """A parametrized step law with drift ``delta > 0`` and variance ``sigma2``.

    ``kind="shift"`` adds ``parameter`` to a centred base law,
    ``kind="tilted"`` exponentially tilts the base by ``parameter`` and
    ``kind="lattice"`` uses ``lattice`` as is.  ``width`` is the half-width
    ``a`` of the uniform base.
    """

    kind: str
    base: str
    parameter: float = 0.0
    width: float = 1.0
    lattice: LatticeStepLaw | None = None

    def __post_init__(self):
        if self.kind not in ("shift", "tilted", "lattice"):
            raise UnsupportedFamilyError(f"unknown family kind {self.kind!r}")
        if self.base not in _BASES:
            raise UnsupportedFamilyError(f"unknown base {self.base!r}")
        if self.kind == "lattice" and self.lattice is None:
            raise UnsupportedFamilyError("lattice family needs a LatticeStepLaw")
        if self.kind == "tilted" and self.base == "uniform":
            raise UnsupportedFamilyError("no exact sampler for a tilted uniform base")
        if self.base == "lattice" and self.lattice is None:
            raise UnsupportedFamilyError("lattice base needs a LatticeStepLaw")

    # constructors

    @classmethod
    def shift(cls, base: str, delta: float, width: float = 1.0) -> "StepFamily":
        return cls("shift", base, float(delta), float(width))

    @classmethod
    def tilted(cls, base: str, p: float, lattice: LatticeStepLaw | None = None) -> "StepFamily":
        if base == "rademacher":
            base, lattice = "lattice", LatticeStepLaw((-1, 1), (0.5, 0.5))
        return cls("tilted", base, float(p), 1.0, lattice)

    @classmethod
    def from_lattice(cls, law: LatticeStepLaw) -> "StepFamily":
        return cls("lattice", "lattice", 0.0, 1.0, law)

    @classmethod
    def simple(cls, p: float) -> "StepFamily":
        return cls.from_lattice(LatticeStepLaw.simple(p))

    # step law

    @cached_property
    def _discrete(self):
        """``(values, probs)`` for discrete step laws, else None."""
        if self.kind == "lattice":
            return np.array(self.lattice.offsets, float), np.array(self.lattice.probs)
        if self.base == "rademacher":
            return np.array([-1.0, 1.0]) + self.parameter, np.array([0.5, 0.5])
        if self.base == "lattice":
            vals = np.array(self.lattice.offsets, float)
            pr = np.array(self.lattice.probs)
            if self.kind == "shift":
                return vals + self.parameter, pr
            w = pr * np.exp(self.parameter * vals)
            return vals, w / w.sum()
        return None

    @property
    def is_lattice(self) -> bool:
        """Integer-valued steps, so that ``S_n == 0`` is meaningful."""
        d = self._discrete
        return d is not None and bool(np.all(d[0] == np.round(d[0])))

    @cached_property
    def delta(self) -> float:
        d = self._discrete
        if d is not None:
            return float(np.dot(*d))
        return self.parameter  # normal/uniform: shift or tilt both move the mean by p

    @cached_property
    def sigma2(self) -> float:
        d = self._discrete
        if d is not None:
            v, pr = d
            return float(np.dot(v * v, pr) - np.dot(v, pr) ** 2)
        if self.base == "normal":
            return 1.0
        return self.width**2 / 3.0

    def kernel_spec(self):
        """``(kind code, values, cum, mean, scale)`` for the path kernels."""
        d = self._discrete
        if d is not None:
            v, pr = d
            cum = np.cumsum(pr)
            cum[-1] = 1.0
            return 0, np.ascontiguousarray(v), np.ascontiguousarray(cum), 0.0, 0.0
        dummy = np.zeros(1)
        if self.base == "normal":
            return 1, dummy, dummy, self.parameter, 1.0
        return 2, dummy, dummy, self.parameter, self.width

    def neg_cumulant(self, theta: float) -> tuple[float, float]:
        """``log E exp(-theta Y)`` and its derivative in ``theta``."""
        d = self._discrete
        if d is not None:
            v, pr = d
            e = -theta * v
            shift = e.max()
            w = pr * np.exp(e - shift)
            s = w.sum()
            return float(shift + math.log(s)), float(-np.dot(w, v) / s)
        mu = self.parameter
        if self.base == "normal":
            return -theta * mu + 0.5 * theta * theta, -mu + theta
        a = self.width
        x = theta * a
        if x < 1e-4:
            k = x * x / 6.0 - x**4 / 180.0
            dk = (x / 3.0 - x**3 / 45.0) * a
        else:
            # log(sinh(x)/x) = x + log1p(-exp(-2x)) - log(2x)
            k = x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0 * x)
            dk = (1.0 / math.tanh(x) - 1.0 / x) * a
        return -theta * mu + k, -mu + dk

    def min_step(self) -> float:
        d = self._discrete
        if d is not None:
            return float(d[0][d[1] > 0].min())
        if self.base == "normal":
            return -math.inf
        return self.parameter - self.width

    def describe(self) -> dict:
        out = {"kind": self.kind, "base": self.base, "parameter": self.parameter}
        if self.base == "uniform":
            out["width"] = self.width
        if self.lattice is not None:
            out["offsets"] = list(self.lattice.offsets)
            out["probs"] = list(self.lattice.probs)
        out["delta"] = self.delta
        out["sigma2"] = self.sigma2
        return out


def tilt_for_drift(base: str, target: float, lattice: LatticeStepLaw | None = None,
                   tol: float = 1e-13) -> float:
    """Tilt ``p`` with ``m'(p)/m(p) = target`` by bisection (the map is increasing)."""
    if base == "normal":
        return float(target)
    fam = lambda p: StepFamily.tilted(base, p, lattice)
    lo, hi = 0.0, 1.0
    while fam(hi).delta < target:
        hi *= 2.0
        if hi > 1e3:
            raise DomainError("target drift not reachable by tilting")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if fam(mid).delta < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lundberg_exponent(family: StepFamily) -> float:
    """Positive root ``theta*`` of ``E exp(-theta Y) = 1``.

    Families without negative steps never go below their start, which is
    reported as ``inf``.
    """
    if family.delta <= 0:
        raise UnsupportedFamilyError("Lundberg exponent needs a positive drift")
    if family.min_step() >= 0:
        return math.inf
    k = lambda t: family.neg_cumulant(t)[0]
    hi = 1.0 / math.sqrt(family.sigma2)
    while k(hi) <= 0:
        hi *= 2.0
        if hi > 1e8:
            raise UnsupportedFamilyError("no root of the Lundberg equation found")
    lo = 0.0
    t = hi
    for _ in range(200):
        val, der = family.neg_cumulant(t)
        if val > 0:
            hi = t
        else:
            lo = t
        step = t - val / der if der > 0 else None
        if step is None or not lo < step < hi:
            step = 0.5 * (lo + hi)
        if abs(step - t) <= 1e-15 * t:
            return step
        t = step
        if hi - lo <= 1e-15 * hi:
            break
    return t


@dataclass(frozen=True)
class StoppingRule:
    """Stop a path once it is ``threshold`` above the level it must not revisit."""

    theta_star: float
    epsilon: float = 1e-9
    cap: int = 100_000_000

    @classmethod
    def for_family(cls, family: StepFamily, epsilon: float = 1e-9, cap: int = 100_000_000):
        try:
            theta = lundberg_exponent(family)
        except UnsupportedFamilyError:
            theta = 0.0  # only the path cap applies
        return cls(theta, epsilon, cap)

    @property
    def threshold(self) -> float:
        if self.theta_star == 0.0:
            return math.inf
        return math.log(1.0 / self.epsilon) / self.theta_star


@dataclass(frozen=True)
class SimulationConfig:
    family: StepFamily
    functional: str = "Z0"
    n_paths: int = 10_000
    seed: int = 0
    workers: int = 1
    epsilon: float = 1e-9
    cap: int = 100_000_000
    level: float = 0.0
    horizon: int = 0
    max_capped_fraction: float = 1e-3

    def __post_init__(self):
        if self.functional not in FUNCTIONALS:
            raise DomainError(f"unknown functional {self.functional!r}")
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not 0 < self.epsilon < 1:
            raise DomainError("epsilon must lie in (0, 1)")
        if self.functional in ("lastzero",) and self.horizon < 1:
            raise DomainError("lastzero needs a horizon N >= 1")
        if self.functional in ("lastzero", "zeros_count", "last_return") and not self.family.is_lattice:
            raise UnsupportedFamilyError("zero-based functionals need integer-valued steps")
        if self.functional in ("Z0", "Zz", "min") and self.family.delta <= 0:
            raise DomainError("occupation and minimum functionals need a positive drift")
        if self.functional in ("zeros_count", "last_return") and self.horizon == 0 and self.family.delta <= 0:
            raise DomainError("infinite-horizon zero counts need a positive drift")

    @property
    def rule(self) -> StoppingRule:
        return StoppingRule.for_family(self.family, self.epsilon, self.cap) if self.family.delta > 0 \
            else StoppingRule(0.0, self.epsilon, self.cap)

    def as_dict(self) -> dict:
        return {
            "family": self.family.describe(),
            "functional": self.functional,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "cap": self.cap,
            "level": self.level,
            "horizon": self.horizon,
        }

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class SimulationResult:
    """Raw per-path output, indexed by path number.

    ``values`` holds the functional; for the joint zero functionals ``aux``
    holds the partner variable (``T_0`` for ``zeros_count`` and ``N_0`` for
    ``last_return``).
    """

    config: SimulationConfig
    values: np.ndarray
    aux: np.ndarray
    capped: np.ndarray
    threshold: float
    backend: str

    @property
    def n_capped(self) -> int:
        return int(self.capped.sum())

    @property
    def flagged(self) -> bool:
        return self.n_capped > self.config.max_capped_fraction * self.config.n_paths

    @property
    def residual_bound(self) -> float:
        """Per-path probability that the stopping rule truncated a later visit."""
        return self.config.epsilon if math.isfinite(self.threshold) and self.threshold > 0 else 0.0

    def sample(self, scale: float = 1.0) -> EmpiricalSample:
        prov = {"seed": self.config.seed, "config_digest": self.config.digest(), "scale": scale}
        return EmpiricalSample(self.values * scale, prov)

    def digest(self) -> str:
        h = hashlib.sha256(self.values.tobytes())
        h.update(self.aux.tobytes())
        return h.hexdigest()


def simulate(config: SimulationConfig, backend: str | None = None) -> SimulationResult:
    kern = _backend.get(backend)
    fam = config.family
    code = _FCODE[config.functional]
    rule = config.rule
    threshold = rule.threshold
    if config.functional in ("lastzero",):
        threshold = math.inf
    if code == 3 and config.horizon > 0:
        threshold = math.inf
    level = config.level if config.functional == "Zz" else 0.0
    kind, values, cum, mean, scale = fam.kernel_spec()
    n = config.n_paths
    workers = max(1, min(config.workers, n))
    edges = np.linspace(0, n, workers + 1).round().astype(np.int64)
    seed = config.seed & 0xFFFFFFFFFFFFFFFF

    def run(i):
        return kern.run_paths(kind, values, cum, float(mean), float(scale), code, float(level),
                              float(threshold), int(config.horizon), int(config.cap), seed,
                              int(edges[i]), int(edges[i + 1]))

    if workers == 1:
        parts = [run(0)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(workers)))
    out0 = np.concatenate([p[0] for p in parts])
    out1 = np.concatenate([p[1] for p in parts])
    capped = np.concatenate([p[2] for p in parts]).astype(bool)
    if config.functional == "last_return":
        out0, out1 = out1, out0
    name = "python" if kern is _backend.fallback else "compiled"
    return SimulationResult(config, out0, out1, capped, threshold, name)


# -- convergence studies ---------------------------------------------------------


def default_scaling(family: StepFamily, functional: str, level: float = 0.0,
                    horizon: int = 0) -> tuple[float, object]:
    """Normalizing factor and target limit law for a functional.

    ``min`` is reported as the (nonpositive) minimum, so its factor is
    ``-delta`` and the target is exponential with rate ``2/sigma^2``.
    Horizon functionals are scaled by the horizon: ``lastzero`` by ``1/N``
    against the last-exit law with drift ``delta sqrt(N)/sigma``, and
    ``zeros_count`` over ``N`` steps by ``1/sqrt(N sigma^2)`` against
    ``|N(0,1)|``.
    """
    d, s2 = family.delta, family.sigma2
    if functional == "Z0":
        return d * d / (2.0 * s2), limitlaw.LawA()
    if functional == "Zz":
        return d * d, limitlaw.OccupationLaw(level * d, 1.0, s2)
    if functional == "min":
        return -d, limitlaw.ExponentialLaw(2.0 / s2)
    if functional == "lastzero":
        return 1.0 / horizon, limitlaw.LastExitLaw(d * math.sqrt(horizon / s2))
    if functional == "zeros_count" and horizon > 0:
        return 1.0 / math.sqrt(horizon * s2), limitlaw.HalfNormalLaw()
    if functional == "last_return":
        return 0.5 * d * d, limitlaw.GammaHalf()
    if functional == "zeros_count":
        return d, limitlaw.ExponentialLaw(1.0)
    raise DomainError(f"no default scaling for {functional!r}")


def convergence_study(families, functional: str, target=None, n_paths: int = 100_000,
                      seed: int = 0, scale=None, workers: int = 1, epsilon: float = 1e-9,
                      threshold: float | None = None, horizon: int = 0,
                      backend: str | None = None) -> list[KSReport]:
    """KS distance of the rescaled functional to its limit law, one per family.

    ``scale`` may be a callable ``family -> factor``; by default the
    normalization of :func:`default_scaling` is used.
    """
    families = list(families)
    if len(families) < 2:
        raise DomainError("a convergence study needs at least two drifts")
    reports = []
    for fam in families:
        factor, law = default_scaling(fam, functional, horizon=horizon)
        if scale is not None:
            factor = scale(fam)
        law = target if target is not None else law
        cfg = SimulationConfig(fam, functional, n_paths, seed, workers, epsilon, horizon=horizon)
        res = simulate(cfg, backend)
        reports.append(ks_against(res.sample(factor), law.cdf, threshold=threshold,
                                  label=f"delta={fam.delta:.6g}"))
    return reports
