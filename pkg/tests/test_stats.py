import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from fluctua import limitlaw as ll
from fluctua.stats import (DataError, EmpiricalSample, dkw_band, ecdf, ks_against, ks_statistic,
                           moment_report, survival_gap, write_ecdf_csv)


def test_sample_sorted_and_frozen():
    s = EmpiricalSample([3.0, 1.0, 2.0], {"seed": 1})
    assert list(s.values) == [1.0, 2.0, 3.0] and s.n == 3
    with pytest.raises(ValueError):
        s.values[0] = 0.0
    with pytest.raises(DataError):
        EmpiricalSample([])
    with pytest.raises(DataError):
        EmpiricalSample([1.0, np.nan])


def test_ecdf_limits():
    v = np.array([1.0, 2.0, 2.0, 5.0])
    assert ecdf(v, np.inf) == 1.0 and ecdf(v, -np.inf) == 0.0
    assert ecdf(v, 2.0) == 0.75


def test_dkw_band():
    assert dkw_band(1000, 0.05) == pytest.approx(math.sqrt(math.log(40) / 2000))


def test_ks_matches_scipy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(500)
    ours = ks_against(EmpiricalSample(x), sps.norm.cdf).ks
    assert ours == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-14)


@pytest.mark.parametrize("c", [-0.3, 0.0, 1.2])
def test_ks_constant_sample(c):
    d = ks_against(EmpiricalSample(np.full(10, c)), sps.norm.cdf).ks
    F = sps.norm.cdf(c)
    assert d == pytest.approx(max(F, 1 - F), abs=1e-15)


@pytest.mark.parametrize("n", [50, 400, 2000])
def test_dkw_band_exact_coverage(n):
    # finite-n Kolmogorov law: the band covers with probability just above 95%
    assert sps.kstwo.sf(dkw_band(n, 0.05), n) <= 0.05


def test_ks_coverage_of_dkw_band():
    rng = np.random.default_rng(3)
    reps = 2000
    hits = 0
    for _ in range(reps):
        s = EmpiricalSample(rng.random(50))
        hits += ks_against(s, lambda x: np.clip(x, 0, 1)).passed
    assert hits >= 0.95 * reps


def test_ks_threshold_and_report():
    rep = ks_against(EmpiricalSample([0.5]), lambda x: np.clip(x, 0, 1), threshold=0.6, label="u")
    assert rep.passed and rep.ks == 0.5
    assert rep.as_dict()["label"] == "u"


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(-5, 5))
def test_ks_affine_invariance(a, b):
    x = np.random.default_rng(7).standard_normal(200)
    base = ks_statistic(np.sort(x), sps.norm.cdf)
    moved = ks_statistic(np.sort(a * x + b), lambda y: sps.norm.cdf((y - b) / a))
    assert moved == pytest.approx(base, abs=1e-9)


def test_A_sample_ks():
    s = EmpiricalSample(ll.sample_A(np.random.default_rng(1), 1_000_000))
    assert ks_against(s, ll.cdf_A).ks < 0.005


def test_moment_report():
    m, se = moment_report(EmpiricalSample(np.full(5, 2.0)), 3)
    assert m == 8.0 and se == 0.0
    s = EmpiricalSample(ll.sample_A(np.random.default_rng(2), 400_000))
    m, se = moment_report(s)
    assert abs(m - 0.25) < 3 * se
    s = EmpiricalSample(ll.LastExitLaw(1.0).sample(np.random.default_rng(3), 400_000))
    m, se = moment_report(s)
    assert abs(m - (1 - math.exp(-0.5))) < 3 * se
    with pytest.raises(ValueError):
        moment_report(s, 0)


def test_survival_gap():
    s = EmpiricalSample([0.5, 1.5])
    assert survival_gap(s, lambda x: np.zeros_like(x), [0.0, 1.0, 2.0]) == 1.0


def test_ecdf_csv_format():
    s = EmpiricalSample([0.1, 0.2, 0.2, 0.3])
    text = write_ecdf_csv(s, lambda x: np.asarray(x) * 2)
    lines = text.split("\n")
    assert lines[0] == "x,ecdf,cdf_target"
    assert lines[1] == "0.10000000000000001,0.25,0.20000000000000001"
    assert len(lines) == 5 and lines[-1] == ""
    buf = io.StringIO()
    write_ecdf_csv(s, lambda x: x, buf)
    assert "\r" not in buf.getvalue()
