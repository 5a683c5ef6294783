"""Exact fluctuation theory for random walks.

Sign probabilities ``P(S_n < 0)`` feed the Sparre Andersen exponential
formula, which yields the ladder-epoch generating functions ``r`` (first
strict descent) and ``a`` (first weak ascent) and the generating function of
the occupation time ``Z_0 = #{n >= 1 : S_n < 0}``.  Walk-specific closed
forms for the simple +/-1 walk and the Gaussian walk are provided as
independent routes to the same objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .limitlaw import DomainError, norm_cdf, norm_sf
from .series import TruncatedSeries

__all__ = [
    "ResourceError",
    "LatticeStepLaw",
    "SignProbProvider",
    "LadderSummary",
    "SimpleWalkForms",
    "sign_probs",
    "normal_sign_probs",
    "ladder_series",
    "occupation_gf",
    "occupation_gf_forms",
    "simple_walk_closed_forms",
    "last_zero_pmf",
    "zeros_joint_pmf",
    "zeros_joint_table",
    "zeros_joint_pmf_printed",
    "simple_walk_occupation_printed",
    "normal_walk_r",
    "normal_walk_G",
    "sojourn_integral_identity",
]

DEFAULT_CELL_CAP = 10_000_000
LAST_ZERO_CAP = 20_000


class ResourceError(RuntimeError):
    """A computation would exceed its configured size cap."""


@dataclass(frozen=True)
class LatticeStepLaw:
    """Integer-supported step distribution.

    ``scale`` is the physical size of one lattice unit; it is used only when
    reporting and never enters the exact computations.
    """

    offsets: tuple
    probs: tuple
    scale: float = 1.0

    def __post_init__(self):
        off = np.asarray(self.offsets)
        pr = np.asarray(self.probs, dtype=float)
        if off.shape != pr.shape or off.ndim != 1 or len(off) == 0:
            raise DomainError("offsets and probs must be equal-length 1-d sequences")
        if not np.all(off == np.round(off)):
            raise DomainError("offsets must be integers")
        if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
            raise DomainError("probs must be nonnegative and sum to 1")
        order = np.argsort(off, kind="stable")
        off, pr = off[order].astype(int), pr[order]
        uniq, inv = np.unique(off, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inv, pr)
        keep = merged > 0
        object.__setattr__(self, "offsets", tuple(int(x) for x in uniq[keep]))
        object.__setattr__(self, "probs", tuple(float(x) for x in merged[keep]))

    @classmethod
    def simple(cls, p: float) -> "LatticeStepLaw":
        """Steps +1 with probability ``p`` and -1 with ``1 - p``."""
        if not 0.0 < p < 1.0:
            raise DomainError("p must lie in (0, 1)")
        return cls((-1, 1), (1.0 - p, p))

    @property
    def lo(self) -> int:
        return self.offsets[0]

    @property
    def hi(self) -> int:
        return self.offsets[-1]

    @property
    def mean(self) -> float:
        return float(np.dot(self.offsets, self.probs))

    @property
    def variance(self) -> float:
        o = np.asarray(self.offsets, dtype=float)
        return float(np.dot(o * o, self.probs) - self.mean**2)

    def dense_pmf(self) -> np.ndarray:
        pmf = np.zeros(self.hi - self.lo + 1)
        pmf[np.asarray(self.offsets) - self.lo] = self.probs
        return pmf

    def mgf(self, theta: float) -> float:
        return float(np.dot(self.probs, np.exp(theta * np.asarray(self.offsets, dtype=float))))

    def chernoff_rho(self) -> float:
        """``min_theta E exp(-theta Y)``; ``P(S_n < 0) <= rho^n`` for positive drift."""
        if self.mean <= 0 or self.lo >= 0:
            return 1.0 if self.mean <= 0 else 0.0
        from scipy.optimize import minimize_scalar

        hi = 1.0
        while self.mgf(-hi) < 1.0 and hi < 1e6:
            hi *= 2.0
        res = minimize_scalar(lambda t: self.mgf(-t), bounds=(0.0, hi), method="bounded",
                              options={"xatol": 1e-12})
        return float(min(1.0, res.fun))


@dataclass(frozen=True)
class SignProbProvider:
    """``neg[n] = P(S_n < 0)`` and ``nonneg[n] = P(S_n >= 0)`` for ``1 <= n <= N``.

    Index 0 of both arrays is unused.  ``drift``/``variance`` describe one
    step (for Chebyshev tails) and ``rho`` is a Chernoff base, so that
    ``P(S_n < 0) <= min(variance/(n drift^2), rho^n)`` for a positive drift.
    """

    neg: np.ndarray
    nonneg: np.ndarray
    drift: float
    variance: float
    rho: float = 1.0
    label: str = ""

    @property
    def N(self) -> int:
        return len(self.neg) - 1

    def exponent_sum(self) -> float:
        """``sum_{n <= N} P(S_n < 0)/n``."""
        n = np.arange(1, self.N + 1)
        return float(np.sum(self.neg[1:] / n))

    def exponent_tail_bound(self) -> float:
        """Certified bound on ``sum_{n > N} P(S_n < 0)/n``."""
        if self.drift <= 0:
            return math.inf
        N = self.N
        cheb = self.variance / self.drift**2 / N
        if self.rho < 1.0:
            cher = self.rho ** (N + 1) / ((N + 1) * (1.0 - self.rho))
            return min(cheb, cher)
        return cheb


def sign_probs(law: LatticeStepLaw, N: int, cap: int = DEFAULT_CELL_CAP) -> SignProbProvider:
    """Exact sign probabilities of a lattice walk by repeated convolution."""
    if N < 1:
        raise DomainError("N must be >= 1")
    width = N * (law.hi - law.lo) + 1
    if N * width > cap:
        raise ResourceError(f"{N} steps x {width} cells exceeds cap {cap}")
    pmf = law.dense_pmf()
    neg = np.zeros(N + 1)
    nonneg = np.zeros(N + 1)
    dist = np.ones(1)
    for n in range(1, N + 1):
        dist = np.convolve(dist, pmf)
        zero = -n * law.lo  # index of S_n = 0 in the window [n lo, n hi]
        if zero <= 0:
            neg[n], nonneg[n] = 0.0, dist.sum()
        elif zero >= len(dist):
            neg[n], nonneg[n] = dist.sum(), 0.0
        else:
            neg[n] = dist[:zero].sum()
            nonneg[n] = dist[zero:].sum()
    return SignProbProvider(neg, nonneg, law.mean, law.variance, law.chernoff_rho(),
                            label=f"lattice{law.offsets}")


def normal_sign_probs(delta: float, sigma2: float, N: int) -> SignProbProvider:
    """``P(S_n < 0) = Phi(-delta sqrt(n)/sigma)`` for Gaussian steps."""
    if not sigma2 > 0:
        raise DomainError("variance must be positive")
    n = np.arange(N + 1, dtype=float)
    x = delta * np.sqrt(n) / math.sqrt(sigma2)
    neg, nonneg = norm_sf(x), norm_cdf(x)
    neg[0] = nonneg[0] = 0.0
    rho = math.exp(-delta * delta / (2.0 * sigma2)) if delta > 0 else 1.0
    return SignProbProvider(neg, nonneg, delta, sigma2, rho, label="normal")


@dataclass(frozen=True)
class LadderSummary:
    """Ladder-epoch generating functions and their values at ``z = 1``.

    ``r1_bound`` bounds ``|r(1) - r1|`` from the truncated exponent.
    """

    r: TruncatedSeries
    a: TruncatedSeries
    r1: float
    mu: float
    r1_bound: float

    def duality_residual(self) -> float:
        k = self.r.order
        lhs = (1.0 - self.r) * (1.0 - self.a)
        target = TruncatedSeries([1.0, -1.0], k)
        return float(np.max(np.abs((lhs - target).coef)))


def _log_series(values: np.ndarray, K: int) -> TruncatedSeries:
    """``sum_{n=1}^K values[n] z^n / n``."""
    c = np.zeros(K + 1)
    c[1:] = values[1 : K + 1] / np.arange(1, K + 1)
    return TruncatedSeries(c)


def _require(provider: SignProbProvider, K: int):
    if provider.N < K:
        raise DomainError(f"provider covers n <= {provider.N}, order {K} requested")


def ladder_series(provider: SignProbProvider, K: int) -> LadderSummary:
    _require(provider, K)
    r = 1.0 - (-_log_series(provider.neg, K)).exp()
    a = 1.0 - (-_log_series(provider.nonneg, K)).exp()
    if provider.drift > 0:
        L = provider.exponent_sum()
        tail = provider.exponent_tail_bound()
        one_minus = math.exp(-L)
        r1 = 1.0 - one_minus
        mu = 1.0 / one_minus
        bound = one_minus * -math.expm1(-tail)
    else:
        r1, mu, bound = 1.0, math.inf, 0.0
    return LadderSummary(r, a, r1, mu, bound)


def occupation_gf(provider: SignProbProvider, K: int) -> TruncatedSeries:
    """Series of ``E z^{Z_0}``; coefficient ``n`` is ``P(Z_0 = n)``.

    Uses ``exp(-sum_k (1 - z^k) P(S_k < 0)/k)``.  The constant part of the
    exponent is summed over all ``n <= provider.N``; every coefficient is then
    too large by a factor of at most ``exp(provider.exponent_tail_bound())``.
    """
    if provider.drift <= 0:
        raise DomainError("occupation time is finite only for positive drift")
    _require(provider, K)
    expo = _log_series(provider.neg, K) - provider.exponent_sum()
    return expo.exp()


def occupation_gf_forms(provider: SignProbProvider, K: int) -> dict:
    """The three equivalent expressions for ``E z^{Z_0}`` as series."""
    lad = ladder_series(provider, K)
    one_minus_z = TruncatedSeries([1.0, -1.0], K)
    return {
        "ratio_r": (1.0 - lad.r1) / (1.0 - lad.r),
        "ratio_a": (1.0 - lad.a) / one_minus_z / lad.mu,
        "exponential": occupation_gf(provider, K),
    }


# -- simple +/-1 walk ---------------------------------------------------------------


@dataclass(frozen=True)
class SimpleWalkForms:
    r: TruncatedSeries
    h: TruncatedSeries
    occupation: TruncatedSeries
    mn_factor_a: TruncatedSeries
    mn_factor_b: TruncatedSeries
    r1: float


def _disc(p: float, K: int) -> TruncatedSeries:
    """``1 - 4pq z^2``."""
    return TruncatedSeries([1.0, 0.0, -4.0 * p * (1.0 - p)], K)


def simple_walk_closed_forms(p: float, K: int) -> SimpleWalkForms:
    if not 0.5 < p < 1.0:
        raise DomainError("p must lie in (1/2, 1)")
    q = 1.0 - p
    root = _disc(p, K + 1).sqrt()
    r = (1.0 - root).shift_down() / (2.0 * p)
    root_k = root.truncate(K)
    r1 = q / p
    return SimpleWalkForms(
        r=r,
        h=(p - q) * _disc(p, K).pow(-0.5),
        occupation=(1.0 - r1) / (1.0 - r),
        mn_factor_a=_disc(p, K).pow(-0.5),
        mn_factor_b=root_k / TruncatedSeries([1.0, -1.0], K),
        r1=r1,
    )


def simple_walk_occupation_printed(p: float, z: float) -> float:
    """The rationalized closed form as printed; evaluates to ``-(p-q)/q`` at ``z = 1``."""
    q = 1.0 - p
    s = math.sqrt(1.0 - 4.0 * p * q * z * z)
    return (p - q) * (1.0 + s) / (p * (1.0 - 2.0 * z * z + s))


def last_zero_pmf(p: float, N: int, cap: int = LAST_ZERO_CAP) -> np.ndarray:
    """pmf of ``M_N = max{k <= N : S_k = 0}`` for the +/-1 walk.

    ``P(M_N = k) = [t^k][z^N] (1 - 4pq t^2 z^2)^(-1/2) sqrt(1 - 4pq z^2)/(1 - z)``.
    The bivariate series factorizes, so the double extraction is the product
    of the ``z^k`` coefficient of the first factor at ``t = 1`` and the
    ``z^(N-k)`` coefficient of the second.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    if N < 0:
        raise DomainError("N must be >= 0")
    if N > cap:
        raise ResourceError(f"horizon {N} exceeds cap {cap}")
    K = max(N, 2)
    returns = _disc(p, K).pow(-0.5).coef
    avoid = (_disc(p, K).sqrt() / TruncatedSeries([1.0, -1.0], K)).coef
    pmf = returns[: N + 1] * avoid[N::-1]
    pmf[1::2] = 0.0
    return pmf


def _first_return(p: float, K: int) -> TruncatedSeries:
    """Generating function ``1 - sqrt(1 - 4pq z^2)`` of the first return time."""
    return 1.0 - _disc(p, K).sqrt()


def zeros_joint_table(p: float, n_max: int) -> np.ndarray:
    """``table[r, n] = P(N_0 = r, T_0 = 2n)`` for ``0 <= r, n <= n_max``.

    A path with ``r`` returns whose last return is at ``2n`` is a sequence of
    ``r`` first-return excursions of total length ``2n`` followed by a path
    that never returns, which has probability ``p - q``.
    """
    if not 0.5 < p < 1.0:
        raise DomainError("p must lie in (1/2, 1)")
    q = 1.0 - p
    K = 2 * n_max
    f = _first_return(p, K)
    table = np.zeros((n_max + 1, n_max + 1))
    table[0, 0] = p - q
    power = TruncatedSeries.constant(1.0, K)
    for r in range(1, n_max + 1):
        power = power * f
        table[r, :] = (p - q) * power.coef[0::2]
    return table


def zeros_joint_pmf(p: float, r: int, n: int) -> float:
    if r < 1 or n < 1 or r > n:
        raise DomainError("need 1 <= r <= n")
    return float(zeros_joint_table(p, n)[r, n])


def zeros_joint_pmf_printed(p: float, r: int, n: int) -> float:
    """``r/(n-r) C(2n-r, n) 2 (pq)^n`` as printed; ``nan`` where it divides by zero."""
    if r == n:
        return math.nan
    q = 1.0 - p
    return r / (n - r) * math.comb(2 * n - r, n) * 2.0 * (p * q) ** n


# -- Gaussian walk ----------------------------------------------------------------


def normal_walk_G(z: float, ratio: float, quad_tol: float = 1e-12) -> float:
    """``(2c/pi) int_0^1 int_0^inf z e^{-c(x^2+y^2)} / (1 - z e^{-c(x^2+y^2)}) dx dy``.

    Termwise this is ``sum_n z^n/n (Phi(sqrt(2cn)) - 1/2)``; the factor ``z``
    in the numerator comes from the geometric sum starting at ``n = 1``.

    ``c = ratio^2 / 2`` with ``ratio = |delta|/sigma``.  The inner integral is
    taken in ``v = sqrt(c) x`` and split where the integrand stops being
    peaked, which matters when ``z`` is close to 1 and ``c`` is small.
    """
    c = 0.5 * ratio * ratio

    def inner(y):
        w = c * y * y
        width = math.sqrt(max(1.0 - z + w, 1e-300))
        g = lambda v: z * math.exp(-v * v - w) / (1.0 - z * math.exp(-v * v - w))
        cut = min(1.0, 10.0 * width)
        a, _ = integrate.quad(g, 0.0, cut, points=[width] if width < cut else None,
                              epsabs=quad_tol, epsrel=quad_tol, limit=200)
        b, _ = integrate.quad(g, cut, math.inf, epsabs=quad_tol, epsrel=quad_tol, limit=200)
        return a + b

    outer, _ = integrate.quad(inner, 0.0, 1.0, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    return 2.0 * math.sqrt(c) / math.pi * outer


def normal_walk_r(z: float, delta: float, sigma2: float = 1.0, quad_tol: float = 1e-12) -> float:
    """``r(z) = 1 - sqrt(1 - z) exp(sign(delta) G(z))`` for ``N(delta, sigma2)`` steps."""
    if delta == 0:
        raise DomainError("drift must be nonzero")
    if not -1.0 < z < 1.0:
        raise DomainError("need |z| < 1")
    G = normal_walk_G(z, abs(delta) / math.sqrt(sigma2), quad_tol)
    return 1.0 - math.sqrt(1.0 - z) * math.exp(math.copysign(G, delta))


def sojourn_integral_identity(s: float, quad_tol: float = 1e-12) -> tuple[float, float]:
    """``int_0^inf (1 - e^{-su}) Phi(-sqrt(2u)) / u du`` and ``log((1 + sqrt(1+s))/2)``."""
    if not s > 0:
        raise DomainError("s must be positive")
    f = lambda u: -math.expm1(-s * u) / u * float(norm_sf(math.sqrt(2.0 * u)))
    a, _ = integrate.quad(f, 0.0, 1.0, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    b, _ = integrate.quad(f, 1.0, math.inf, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    return a + b, math.log((1.0 + math.sqrt(1.0 + s)) / 2.0)
