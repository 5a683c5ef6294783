"""Truncated formal power series.

A :class:`TruncatedSeries` holds the coefficients ``c[0..K]`` of a power
series in ``z`` and does all arithmetic modulo ``z**(K+1)``.  Nothing beyond
index ``K`` is ever read or written, so every result is exact up to
floating-point rounding in the retained coefficients.

    >>> g = TruncatedSeries.geometric(5)       # 1/(1-z)
    >>> (TruncatedSeries([1, -1], 5) * g).coef
    array([1., 0., 0., 0., 0., 0.])
"""

from __future__ import annotations

import math
from numbers import Real

import numpy as np

__all__ = [
    "SeriesError",
    "TruncatedSeries",
    "combine",
    "transcend",
    "extract",
]

DEFAULT_ORDER = 64


class SeriesError(ValueError):
    """Invalid series operation (order mismatch, bad constant term, index)."""


class TruncatedSeries:
    """Power series ``c0 + c1 z + ... + cK z^K`` known modulo ``z^(K+1)``."""

    __slots__ = ("_c",)

    def __init__(self, coef, order: int | None = None):
        c = np.asarray(coef, dtype=float).ravel()
        if order is None:
            order = len(c) - 1
        if order < 0:
            raise SeriesError("order must be nonnegative")
        out = np.zeros(order + 1)
        m = min(len(c), order + 1)
        out[:m] = c[:m]
        out.setflags(write=False)
        self._c = out

    @classmethod
    def constant(cls, value: float, order: int = DEFAULT_ORDER) -> "TruncatedSeries":
        return cls([value], order)

    @classmethod
    def z(cls, order: int = DEFAULT_ORDER) -> "TruncatedSeries":
        return cls([0.0, 1.0], order)

    @classmethod
    def geometric(cls, order: int = DEFAULT_ORDER, ratio: float = 1.0) -> "TruncatedSeries":
        """``1/(1 - ratio*z)``."""
        return cls(ratio ** np.arange(order + 1), order)

    @property
    def order(self) -> int:
        return len(self._c) - 1

    @property
    def coef(self) -> np.ndarray:
        return self._c

    def __len__(self):
        return len(self._c)

    def __getitem__(self, n):
        return self._c[n]

    def __repr__(self):
        head = ", ".join(f"{x:.6g}" for x in self._c[:6])
        tail = ", ..." if len(self._c) > 6 else ""
        return f"TruncatedSeries([{head}{tail}], order={self.order})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            if other.order != self.order:
                raise SeriesError(
                    f"order mismatch: {self.order} vs {other.order}"
                )
            return other
        if isinstance(other, Real):
            return TruncatedSeries([float(other)], self.order)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TruncatedSeries(self._c + o._c)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self._c)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TruncatedSeries(self._c - o._c)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TruncatedSeries(o._c - self._c)

    def __mul__(self, other):
        if isinstance(other, Real):
            return TruncatedSeries(self._c * float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        k = self.order
        return TruncatedSeries(np.convolve(self._c, o._c)[: k + 1])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Real):
            return TruncatedSeries(self._c / float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TruncatedSeries(_divide(self._c, o._c))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TruncatedSeries(_divide(o._c, self._c))

    def __pow__(self, alpha):
        if isinstance(alpha, int) and alpha >= 0:
            out = TruncatedSeries.constant(1.0, self.order)
            base = self
            while alpha:
                if alpha & 1:
                    out = out * base
                base = base * base
                alpha >>= 1
            return out
        return self.pow(float(alpha))

    # -- transcendental functions ------------------------------------------

    def exp(self) -> "TruncatedSeries":
        a = self._c
        k = self.order
        b = np.empty(k + 1)
        b[0] = math.exp(a[0])
        ka = np.arange(k + 1) * a
        for n in range(1, k + 1):
            # n b_n = sum_{j=1}^n j a_j b_{n-j}
            b[n] = np.dot(ka[1 : n + 1], b[n - 1 :: -1]) / n
        return TruncatedSeries(b)

    def log(self) -> "TruncatedSeries":
        a = self._c
        if not a[0] > 0:
            raise SeriesError("log needs a positive constant term")
        k = self.order
        b = np.empty(k + 1)
        b[0] = math.log(a[0])
        jb = np.zeros(k + 1)
        for n in range(1, k + 1):
            # a0 n b_n = n a_n - sum_{j=1}^{n-1} j b_j a_{n-j}
            s = np.dot(jb[1:n], a[n - 1 : 0 : -1]) if n > 1 else 0.0
            b[n] = (n * a[n] - s) / (n * a[0])
            jb[n] = n * b[n]
        return TruncatedSeries(b)

    def pow(self, alpha: float) -> "TruncatedSeries":
        a = self._c
        if not a[0] > 0:
            raise SeriesError("pow needs a positive constant term")
        k = self.order
        b = np.empty(k + 1)
        b[0] = a[0] ** alpha
        idx = np.arange(k + 1)
        for n in range(1, k + 1):
            # n a0 b_n = sum_{j=1}^n ((alpha+1) j - n) a_j b_{n-j}
            w = ((alpha + 1.0) * idx[1 : n + 1] - n) * a[1 : n + 1]
            b[n] = np.dot(w, b[n - 1 :: -1]) / (n * a[0])
        return TruncatedSeries(b)

    def sqrt(self) -> "TruncatedSeries":
        if not self._c[0] > 0:
            raise SeriesError("sqrt needs a positive constant term")
        return self.pow(0.5)

    # -- helpers -------------------------------------------------------------

    def shift_down(self) -> "TruncatedSeries":
        """Divide by ``z``; requires ``c0 == 0`` and loses one order."""
        if self._c[0] != 0.0:
            raise SeriesError("series has a nonzero constant term")
        return TruncatedSeries(self._c[1:])

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self._c, order)

    def subs_scale(self, factor: float) -> "TruncatedSeries":
        """Substitute ``z -> factor*z``."""
        return TruncatedSeries(self._c * factor ** np.arange(self.order + 1))

    def derivative_at_one(self) -> float:
        return float(np.dot(np.arange(self.order + 1), self._c))

    def __call__(self, z):
        """Evaluate the truncated polynomial (Horner)."""
        return np.polynomial.polynomial.polyval(z, self._c)

    def check_probability(self, tol_neg: float = 1e-12, tol_mass: float = 1e-9) -> bool:
        """True when the coefficients look like a (sub-)probability mass function."""
        return bool(
            np.all(self._c >= -tol_neg) and np.all(np.cumsum(self._c) <= 1.0 + tol_mass)
        )


def _divide(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if b[0] == 0.0:
        raise SeriesError("division by a series with zero constant term")
    k = len(a) - 1
    q = np.empty(k + 1)
    for n in range(k + 1):
        s = np.dot(q[:n], b[n:0:-1]) if n else 0.0
        q[n] = (a[n] - s) / b[0]
    return q


_COMBINE = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def combine(a: TruncatedSeries, b: TruncatedSeries, kind: str) -> TruncatedSeries:
    """Ring operation ``kind`` in {add, sub, mul, div} modulo ``z^(K+1)``."""
    try:
        op = _COMBINE[kind]
    except KeyError:
        raise SeriesError(f"unknown operation {kind!r}") from None
    if a.order != b.order:
        raise SeriesError(f"order mismatch: {a.order} vs {b.order}")
    return op(a, b)


def transcend(a: TruncatedSeries, kind: str, alpha: float | None = None) -> TruncatedSeries:
    """Apply ``sqrt``, ``exp``, ``log`` or ``pow`` (with exponent ``alpha``)."""
    if kind == "sqrt":
        return a.sqrt()
    if kind == "exp":
        return a.exp()
    if kind == "log":
        return a.log()
    if kind == "pow":
        if alpha is None:
            raise SeriesError("pow needs an exponent")
        return a.pow(alpha)
    raise SeriesError(f"unknown function {kind!r}")


def extract(a: TruncatedSeries, n: int) -> float:
    """Coefficient of ``z^n``."""
    if not 0 <= n <= a.order:
        raise SeriesError(f"index {n} outside 0..{a.order}")
    return float(a.coef[n])
