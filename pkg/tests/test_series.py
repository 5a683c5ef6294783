import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluctua.series import SeriesError, TruncatedSeries, combine, extract, transcend

K = 30


def test_geometric_inverse():
    g = TruncatedSeries.geometric(K)
    one = combine(TruncatedSeries([1, -1], K), g, "mul")
    assert np.array_equal(one.coef, np.eye(1, K + 1)[0])


def test_divide_by_one_minus_z_gives_ones():
    q = combine(TruncatedSeries.constant(1.0, K), TruncatedSeries([1, -1], K), "div")
    assert np.allclose(q.coef, 1.0, atol=0)
    assert extract(q, 7) == 1.0


def test_sqrt_binomial_coefficient():
    s = transcend(TruncatedSeries([1, 0, -1], K), "sqrt")
    assert s[2] == pytest.approx(-0.5, abs=1e-15)
    # (1 - z^2)^(1/2) = sum_k C(1/2, k) (-1)^k z^{2k}
    for k in range(8):
        assert s[2 * k] == pytest.approx(-math.comb(2 * k, k) / (4**k * (2 * k - 1)), abs=1e-14)
        assert s[2 * k + 1] == 0.0


def test_exp_log_roundtrip():
    f = TruncatedSeries([1, 1, 1], K)
    assert np.allclose(transcend(transcend(f, "log"), "exp").coef, f.coef, atol=1e-12)


def test_pow_half_equals_sqrt():
    f = TruncatedSeries([1, -1], K)
    assert np.allclose(transcend(f, "pow", 0.5).coef, f.sqrt().coef, atol=1e-12)


@pytest.mark.parametrize("p", [0.55, 0.6, 0.9])
def test_extract_discriminant(p):
    q = 1 - p
    s = TruncatedSeries([1, 0, -4 * p * q], 10).sqrt()
    assert extract(s, 2) == pytest.approx(-2 * p * q, abs=1e-15)


def test_exp_matches_taylor():
    e = TruncatedSeries.z(20).exp()
    assert np.allclose(e.coef, [1 / math.factorial(n) for n in range(21)], rtol=1e-14)


def test_log_one_plus_z():
    lg = TruncatedSeries([1, 1], 20).log()
    expect = [0.0] + [(-1) ** (n + 1) / n for n in range(1, 21)]
    assert np.allclose(lg.coef, expect, atol=1e-15)


def test_integer_power_matches_binomial():
    f = TruncatedSeries([1, 2], 12) ** 5
    expect = [math.comb(5, k) * 2**k for k in range(6)] + [0] * 7
    assert np.array_equal(f.coef, expect)


def test_float_power_of_geometric():
    f = TruncatedSeries([1, -1], 15) ** -1.5
    prod = TruncatedSeries([1, -1], 15).pow(-0.5) * TruncatedSeries.geometric(15)
    assert np.allclose(f.coef, prod.coef, rtol=1e-13)


def test_errors():
    a = TruncatedSeries([1, 1], 5)
    with pytest.raises(SeriesError):
        combine(a, TruncatedSeries([1], 6), "add")
    with pytest.raises(SeriesError):
        combine(a, TruncatedSeries([0, 1], 5), "div")
    with pytest.raises(SeriesError):
        combine(a, a, "pow")
    for kind in ("sqrt", "log", "pow"):
        with pytest.raises(SeriesError):
            transcend(TruncatedSeries([0, 1], 5), kind, 0.3)
    with pytest.raises(SeriesError):
        transcend(a, "pow")
    with pytest.raises(SeriesError):
        transcend(a, "sin")
    with pytest.raises(SeriesError):
        extract(a, 6)
    with pytest.raises(SeriesError):
        extract(a, -1)
    with pytest.raises(SeriesError):
        a.shift_down()


def test_immutable_coefficients():
    a = TruncatedSeries([1, 2, 3])
    with pytest.raises(ValueError):
        a.coef[0] = 5.0


def test_helpers():
    a = TruncatedSeries([0, 1, 2, 3])
    assert np.array_equal(a.shift_down().coef, [1, 2, 3])
    assert a.truncate(1).order == 1
    assert np.array_equal(a.subs_scale(2.0).coef, [0, 2, 8, 24])
    assert a.derivative_at_one() == 1 + 4 + 9
    assert a(1.0) == 6.0
    assert TruncatedSeries([0.5, 0.25, 0.25]).check_probability()
    assert not TruncatedSeries([0.5, -0.1]).check_probability()


coef = st.lists(st.floats(-2, 2, allow_nan=False), min_size=K + 1, max_size=K + 1)


@settings(max_examples=60, deadline=None)
@given(coef, coef)
def test_mul_div_roundtrip(a, b):
    b[0] = 1.0 + abs(b[0])  # well-conditioned divisor
    b = [x * 0.2 if i else x for i, x in enumerate(b)]
    A, B = TruncatedSeries(a), TruncatedSeries(b)
    assert np.allclose(((A * B) / B).coef, A.coef, atol=1e-9 * (1 + np.abs(A.coef).max()))


@settings(max_examples=60, deadline=None)
@given(coef)
def test_log_exp_inverse(a):
    a = [0.3 * x for x in a]
    A = TruncatedSeries(a)
    assert np.allclose(A.exp().log().coef, A.coef, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(coef, st.floats(-2.5, 2.5))
def test_pow_is_exp_of_scaled_log(a, alpha):
    a = [1.0] + [0.2 * x for x in a[1:]]
    A = TruncatedSeries(a)
    assert np.allclose(A.pow(alpha).coef, (alpha * A.log()).exp().coef, atol=1e-9, rtol=1e-9)
