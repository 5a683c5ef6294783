"""Closed-form limit laws for occupation and last-exit times.

The central object is the law of ``A``, the rescaled time a Brownian motion
with unit drift and unit variance spends below zero.  Its Laplace transform
is ``2/(1+sqrt(1+s))`` and, writing ``G`` for the Gamma(1/2, rate 1) law,

    pdf_A(t) = 2 g(t) - 2 (1 - G(t)),     g(t) = exp(-t)/sqrt(pi t).

Every sampler takes a :class:`numpy.random.Generator` and mutates only it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "norm_pdf",
    "norm_cdf",
    "norm_sf",
    "pdf_A",
    "cdf_A",
    "sf_A",
    "laplace_A",
    "sample_A",
    "LawA",
    "GammaHalf",
    "ArcsineLaw",
    "ExponentialLaw",
    "HalfNormalLaw",
    "LastExitLaw",
    "FirstPassageLaw",
    "OccupationLaw",
    "JointZeroLimitLaw",
    "sample_last_exit",
    "last_exit_moment",
    "occupation_laplace",
    "sample_occupation",
    "joint_zero_density",
    "joint_zero_density_printed",
]

_SQRT_PI = math.sqrt(math.pi)
_SQRT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Argument outside the domain of a law or operation."""


# -- standard normal ----------------------------------------------------------


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def norm_cdf(x):
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def norm_sf(x):
    """``Phi(-x)`` straight from erfc, no cancellation for large ``x``."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def _check_positive(t, name="t", strict=True):
    a = np.asarray(t, dtype=float)
    bad = (a <= 0) if strict else (a < 0)
    if np.any(bad) or np.any(np.isnan(a)):
        rel = ">" if strict else ">="
        raise DomainError(f"{name} must be {rel} 0")
    return a


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


# -- law A --------------------------------------------------------------------


def pdf_A(t):
    """Density of ``A`` for ``t > 0``.

    Computed as ``2 exp(-t) (1/sqrt(pi t) - erfcx(sqrt t))`` which is the same
    expression as ``4 phi(sqrt(2t))/sqrt(2t) - 4 Phi(-sqrt(2t))`` without the
    cancellation between two exponentially small terms.
    """
    a = _check_positive(t)
    r = np.sqrt(a)
    out = 2.0 * np.exp(-a) * (1.0 / (_SQRT_PI * r) - special.erfcx(r))
    return _scalar_or_array(out, t)


def cdf_A(t):
    """``P(A <= t) = erf(sqrt t) - 2t erfc(sqrt t) + 2 sqrt(t/pi) exp(-t)``."""
    a = _check_positive(t, strict=False)
    r = np.sqrt(a)
    small = special.erf(r) - 2.0 * a * special.erfc(r) + 2.0 * r / _SQRT_PI * np.exp(-a)
    out = np.where(a < 1.0, small, 1.0 - _sf_A(a))
    return _scalar_or_array(out, t)


def _sf_A(a):
    r = np.sqrt(a)
    return np.exp(-a) * ((1.0 + 2.0 * a) * special.erfcx(r) - 2.0 * r / _SQRT_PI)


def sf_A(t):
    a = _check_positive(t, strict=False)
    return _scalar_or_array(np.where(a < 1.0, 1.0 - cdf_A(a), _sf_A(a)), t)


def laplace_A(s):
    a = _check_positive(s, name="s", strict=False)
    return _scalar_or_array(2.0 / (1.0 + np.sqrt(1.0 + a)), s)


def sample_A(rng: np.random.Generator, size=None):
    """Draw from ``A`` by rejection from the Gamma(1/2, 1) envelope ``2 g``.

    The acceptance probability ``pdf_A/(2g) = 1 - sqrt(pi t) erfcx(sqrt t)``
    lies in (0, 1]; on average half the proposals are kept.
    """
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = max(16, int(2.2 * (n - filled)))
        prop = rng.gamma(0.5, 1.0, size=m)
        u = rng.random(m)
        r = np.sqrt(prop)
        keep = prop[u < 1.0 - _SQRT_PI * r * special.erfcx(r)]
        take = min(len(keep), n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    if size is None:
        return float(out[0])
    return out.reshape(size)


@dataclass(frozen=True)
class LawA:
    """Parameter-free law of ``A`` (mean 1/4)."""

    mean = 0.25

    def pdf(self, t):
        return pdf_A(t)

    def cdf(self, t):
        return cdf_A(t)

    def sf(self, t):
        return sf_A(t)

    def laplace(self, s):
        return laplace_A(s)

    def sample(self, rng, size=None):
        return sample_A(rng, size)


# -- simple parameter-free laws -------------------------------------------------


@dataclass(frozen=True)
class GammaHalf:
    """Gamma law with shape 1/2 and rate ``rate`` (default 1)."""

    rate: float = 1.0

    @property
    def mean(self):
        return 0.5 / self.rate

    def pdf(self, t):
        a = _check_positive(t)
        x = self.rate * a
        return _scalar_or_array(self.rate * np.exp(-x) / (_SQRT_PI * np.sqrt(x)), t)

    def cdf(self, t):
        a = _check_positive(t, strict=False)
        return _scalar_or_array(special.erf(np.sqrt(self.rate * a)), t)

    def sf(self, t):
        a = _check_positive(t, strict=False)
        return _scalar_or_array(special.erfc(np.sqrt(self.rate * a)), t)

    def laplace(self, s):
        a = _check_positive(s, name="s", strict=False)
        return _scalar_or_array(1.0 / np.sqrt(1.0 + a / self.rate), s)

    def sample(self, rng, size=None):
        return rng.gamma(0.5, 1.0 / self.rate, size=size)


@dataclass(frozen=True)
class ArcsineLaw:
    """Standard arcsine law on (0, 1); density ``1/(pi sqrt(t(1-t)))``."""

    mean = 0.5

    def pdf(self, t):
        a = np.asarray(t, dtype=float)
        if np.any((a <= 0) | (a >= 1)):
            raise DomainError("t must lie in (0, 1)")
        return _scalar_or_array(1.0 / (math.pi * np.sqrt(a * (1.0 - a))), t)

    def cdf(self, t):
        a = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return _scalar_or_array(2.0 / math.pi * np.arcsin(np.sqrt(a)), t)

    def moment(self, k: int) -> float:
        return math.comb(2 * k, k) / 4.0**k

    def sample(self, rng, size=None):
        return np.sin(0.5 * math.pi * rng.random(size)) ** 2


@dataclass(frozen=True)
class ExponentialLaw:
    rate: float = 1.0

    def pdf(self, t):
        a = _check_positive(t, strict=False)
        return _scalar_or_array(self.rate * np.exp(-self.rate * a), t)

    def cdf(self, t):
        a = np.maximum(np.asarray(t, dtype=float), 0.0)
        return _scalar_or_array(-np.expm1(-self.rate * a), t)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class HalfNormalLaw:
    """Law of ``|N(0, 1)|``."""

    def pdf(self, t):
        a = _check_positive(t, strict=False)
        return _scalar_or_array(2.0 * norm_pdf(a), t)

    def cdf(self, t):
        a = np.maximum(np.asarray(t, dtype=float), 0.0)
        return _scalar_or_array(special.erf(a / _SQRT2), t)

    def sample(self, rng, size=None):
        return np.abs(rng.standard_normal(size))


# -- last exit ------------------------------------------------------------------


@dataclass(frozen=True)
class LastExitLaw:
    """Last zero in ``[0, T]`` of ``sigma B_t + delta t``.

    Distributed as ``C * min(T, D)`` with ``C`` arcsine and ``D`` exponential
    with rate ``delta^2 / (2 sigma^2)``, independent.
    """

    delta: float
    sigma: float = 1.0
    horizon: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        if math.isinf(self.horizon) and self.delta == 0:
            raise DomainError("infinite horizon needs a nonzero drift")

    @property
    def rate(self) -> float:
        return self.delta**2 / (2.0 * self.sigma**2)

    def sample(self, rng, size=None):
        c = np.sin(0.5 * math.pi * rng.random(size)) ** 2
        if self.rate == 0.0:
            d = np.full(np.shape(c), math.inf) if size is not None else math.inf
        else:
            d = rng.exponential(1.0 / self.rate, size=size)
        return c * np.minimum(self.horizon, d)

    def pdf(self, w):
        a = _check_positive(w)
        lam, T = self.rate, self.horizon
        if math.isinf(T):
            return GammaHalf(lam).pdf(w)
        if np.any(a >= T):
            raise DomainError("w must lie in (0, T)")
        atom = math.exp(-lam * T) / (math.pi * np.sqrt(a * (T - a)))
        cont = (
            math.sqrt(lam) * np.exp(-lam * a) * special.erf(np.sqrt(lam * (T - a)))
            / (_SQRT_PI * np.sqrt(a))
        )
        return _scalar_or_array(atom + cont, w)

    def cdf(self, w):
        """``1 - 4 T(sqrt(2 lam w), sqrt(T/w - 1))`` with Owen's T function.

        Integrating ``P(C min(T, D) <= w)`` by parts over ``D`` leaves
        ``int_0^sqrt(T-w) e^{-lam(w+v^2)} / (w+v^2) dv``, which is Owen's T
        after ``v = sqrt(w) t``.
        """
        lam, T = self.rate, self.horizon
        if math.isinf(T):
            return GammaHalf(lam).cdf(w)
        x = np.asarray(w, dtype=float)
        inside = (x > 0) & (x < T)
        xi = np.where(inside, x, 0.5 * T)
        val = 1.0 - 4.0 * special.owens_t(np.sqrt(2.0 * lam * xi), np.sqrt(T / xi - 1.0))
        val = np.where(inside, val, np.where(x <= 0, 0.0, 1.0))
        return _scalar_or_array(val, w)

    def moment(self, k: int) -> float:
        if math.isinf(self.horizon):
            return ArcsineLaw().moment(k) * math.gamma(k + 1) / self.rate**k
        T = self.horizon
        return ArcsineLaw().moment(k) * T**k * _trunc_exp_moment(k, self.rate * T)


def _trunc_exp_moment(k: int, lam: float) -> float:
    """``int_0^1 k y^(k-1) exp(-lam y) dy`` = ``E min(1, D)^k`` for ``D ~ Exp(lam)``."""
    if lam == 0.0:
        return 1.0
    if lam < 1.0:
        # alternating series sum_j (-lam)^j / j! * k / (k + j)
        total, term, j = 0.0, 1.0, 0
        while True:
            add = term * k / (k + j)
            total += add
            if abs(add) < 1e-17 * abs(total) and j > 2:
                return total
            j += 1
            term *= -lam / j
    return math.factorial(k) * special.gammainc(k, lam) / lam**k


def sample_last_exit(law: LastExitLaw, rng: np.random.Generator, size=None):
    return law.sample(rng, size)


def last_exit_moment(k: int, delta: float) -> float:
    """``E W^k`` for the last zero of ``B_t + delta t`` in ``[0, 1]``."""
    if k < 1 or int(k) != k:
        raise DomainError("k must be a positive integer")
    k = int(k)
    return math.comb(2 * k, k) / 4.0**k * _trunc_exp_moment(k, 0.5 * delta * delta)


# -- first passage and occupation ------------------------------------------------


@dataclass(frozen=True)
class FirstPassageLaw:
    """First passage time to level ``z`` of ``sigma B_t + delta t``.

    Inverse Gaussian with mean ``z/delta`` and shape ``z^2/sigma^2``.
    """

    z: float
    delta: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.z > 0:
            raise DomainError("level z must be positive")
        if not self.delta > 0:
            raise DomainError("drift must be positive")
        if not self.sigma2 > 0:
            raise DomainError("variance must be positive")

    @property
    def mean(self):
        return self.z / self.delta

    @property
    def shape(self):
        return self.z**2 / self.sigma2

    def laplace(self, s):
        a = _check_positive(s, name="s", strict=False)
        d = self.delta
        val = np.exp(-(self.z / self.sigma2) * (np.sqrt(d * d + 2.0 * self.sigma2 * a) - d))
        return _scalar_or_array(val, s)

    def pdf(self, t):
        a = _check_positive(t)
        mu, lam = self.mean, self.shape
        val = np.sqrt(lam / (2.0 * math.pi * a**3)) * np.exp(-lam * (a - mu) ** 2 / (2.0 * mu * mu * a))
        return _scalar_or_array(val, t)

    def cdf(self, t):
        a = np.maximum(np.asarray(t, dtype=float), 1e-300)
        mu, lam = self.mean, self.shape
        r = np.sqrt(lam / a)
        b = r * (a / mu + 1.0)
        # exp(2 lam/mu) Phi(-b) = 0.5 erfcx(b/sqrt2) exp(2 lam/mu - b^2/2)
        second = 0.5 * special.erfcx(b / _SQRT2) * np.exp(2.0 * lam / mu - 0.5 * b * b)
        val = norm_cdf(r * (a / mu - 1.0)) + second
        val = np.where(np.asarray(t) <= 0, 0.0, val)
        return _scalar_or_array(val, t)

    def sample(self, rng, size=None):
        """Michael-Schucany-Haas transformation with one acceptance step."""
        mu, lam = self.mean, self.shape
        nu = rng.standard_normal(size)
        y = nu * nu
        x = mu + mu * mu * y / (2.0 * lam) - mu / (2.0 * lam) * np.sqrt(4.0 * mu * lam * y + (mu * y) ** 2)
        u = rng.random(size)
        return np.where(u <= mu / (mu + x), x, mu * mu / x)


@dataclass(frozen=True)
class OccupationLaw:
    """Total time ``sigma B_t + delta t`` spends below level ``z >= 0``.

    ``V_z = T_z + V_0'`` with ``V_0' = (2 sigma^2/delta^2) A`` independent of
    the first-passage time ``T_z``.
    """

    z: float = 0.0
    delta: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("drift must be positive")
        if self.z < 0:
            raise DomainError("level must be nonnegative")
        if not self.sigma2 > 0:
            raise DomainError("variance must be positive")

    @property
    def scale(self) -> float:
        """Factor mapping ``A`` to ``V_0``."""
        return 2.0 * self.sigma2 / self.delta**2

    @property
    def mean(self) -> float:
        return self.z / self.delta + self.sigma2 / (2.0 * self.delta**2)

    @cached_property
    def passage(self) -> FirstPassageLaw | None:
        return FirstPassageLaw(self.z, self.delta, self.sigma2) if self.z > 0 else None

    def laplace(self, s):
        a = _check_positive(s, name="s", strict=False)
        d = self.delta
        v0 = 2.0 * d / (d + np.sqrt(d * d + 2.0 * self.sigma2 * a))
        if self.passage is not None:
            v0 = v0 * self.passage.laplace(a)
        return _scalar_or_array(v0, s)

    def sample(self, rng, size=None):
        out = self.scale * sample_A(rng, size)
        if self.passage is not None:
            out = out + self.passage.sample(rng, size)
        return out

    def pdf(self, x):
        if self.passage is None:
            a = _check_positive(x)
            return _scalar_or_array(pdf_A(a / self.scale) / self.scale, x)
        return self._convolve(x, lambda u: self.passage.pdf(np.maximum(u, 1e-300)) * (u > 0))

    def cdf(self, x):
        if self.passage is None:
            a = np.maximum(np.asarray(x, dtype=float), 0.0)
            return _scalar_or_array(cdf_A(a / self.scale), x)
        return self._convolve(x, self.passage.cdf)

    def _convolve(self, x, h):
        """``E h(x - scale A)`` by Gauss-Legendre in ``s`` with ``A = (x/scale) s^2``.

        The substitution absorbs the ``a^(-1/2)`` singularity of ``pdf_A``.
        Panels are graded towards ``s = 1``, where ``h`` sees arguments near
        zero and the first-passage law can be very sharp.
        """
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr).ravel()
        out = np.zeros(flat.shape)
        pos = flat > 0
        s, w = _GRADED_S
        vals = flat[pos]
        res = np.empty(vals.shape)
        for i in range(0, len(vals), 2048):
            xp = vals[i : i + 2048, None] / self.scale
            a = np.maximum(xp * s * s, 1e-300)
            f = 2.0 * xp * s * pdf_A(a) * h(self.scale * xp * (1.0 - s * s))
            res[i : i + 2048] = f @ w
        out[pos] = res
        return _scalar_or_array(out.reshape(arr.shape) if arr.ndim else out[0], x)


def _graded_nodes(order: int = 24):
    edges = np.unique(np.concatenate([np.linspace(0.0, 1.0, 9), 1.0 - np.logspace(-1, -12, 12)]))
    t, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * t).ravel(), (half * w).ravel()


_GRADED_S = _graded_nodes()


def occupation_laplace(law: OccupationLaw, s):
    return law.laplace(s)


def sample_occupation(law: OccupationLaw, rng: np.random.Generator, size=None):
    return law.sample(rng, size)


# -- joint limit of (zeros, last return) -----------------------------------------


def joint_zero_density(y, t):
    """Limit density of ``(delta N_0, delta^2 T_0 / 2)`` for the simple walk.

    ``(y / 2t) (pi t)^(-1/2) exp(-y^2/(4t) - t)``: Gamma(1/2, 1) in ``t``,
    and given ``t`` a Rayleigh law in ``y`` with scale ``sqrt(2t)``.
    """
    y_ = _check_positive(y, name="y")
    t_ = _check_positive(t, name="t")
    val = y_ / (2.0 * t_) / np.sqrt(math.pi * t_) * np.exp(-y_ * y_ / (4.0 * t_) - t_)
    if np.ndim(y) == 0 and np.ndim(t) == 0:
        return float(val)
    return val


def joint_zero_density_printed(y, t):
    """The same density with a ``(2 pi t)^(-1/2)`` factor; total mass ``1/sqrt 2``."""
    return joint_zero_density(y, t) / _SQRT2


@dataclass(frozen=True)
class JointZeroLimitLaw:
    def pdf(self, y, t):
        return joint_zero_density(y, t)

    def sample(self, rng, size=None):
        t = rng.gamma(0.5, 1.0, size=size)
        y = np.sqrt(-4.0 * t * np.log1p(-rng.random(size)))
        return y, t

    y_marginal = ExponentialLaw(1.0)
    t_marginal = GammaHalf(1.0)
