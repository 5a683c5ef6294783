import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluctua import fluctuation as fl
from fluctua.limitlaw import DomainError, laplace_A
from fluctua.series import TruncatedSeries


# -- oracles -------------------------------------------------------------------


def enum_sign_probs(law, N):
    """P(S_n < 0) by enumerating every step sequence."""
    out = np.zeros(N + 1)
    for n in range(1, N + 1):
        for steps in itertools.product(range(len(law.offsets)), repeat=n):
            s = sum(law.offsets[i] for i in steps)
            if s < 0:
                out[n] += math.prod(law.probs[i] for i in steps)
    return out


def ladder_pmf_dp(law, K, strict_down=True):
    """pmf of the first strict descending (or weak ascending) ladder epoch.

    Mass is kept on the region the walk must stay in and killed on exit.
    """
    M = 3 * K
    pos = np.arange(-M, M + 1)
    dist = (pos == 0).astype(float)
    out = np.zeros(K + 1)
    for n in range(1, K + 1):
        new = np.zeros_like(dist)
        for off, pr in zip(law.offsets, law.probs):
            new += pr * np.roll(dist, off)  # |offset| <= 3, so nothing wraps within K steps
        exit_ = (pos < 0) if strict_down else (pos >= 0)
        out[n] = new[exit_].sum()
        new[exit_] = 0.0
        dist = new
    return out


def occupation_pmf_dp(p, kmax=10, steps=2500, ceiling=80):
    """P(Z_0 = k) for the +/-1 walk: Markov chain on (position, count), absorbing high up."""
    q = 1 - p
    floor = -steps
    width = ceiling - floor + 1
    dist = np.zeros((kmax + 2, width))
    dist[0, -floor] = 1.0
    absorbed = np.zeros(kmax + 2)
    for _ in range(steps):
        new = np.zeros_like(dist)
        new[:, 1:] += p * dist[:, :-1]
        new[:, :-1] += q * dist[:, 1:]
        below = new[:, : -floor].copy()  # positions < 0 add one visit
        new[:, : -floor] = 0.0
        new[1:, : -floor] += below[:-1]
        new[-1, : -floor] += below[-1]
        absorbed += new[:, -1]
        new[:, -1] = 0.0
        dist = new
    return absorbed[: kmax + 1], dist.sum()


# -- sign probabilities --------------------------------------------------------


def test_sign_probs_simple_walk():
    sym = fl.sign_probs(fl.LatticeStepLaw.simple(0.5), 3)
    assert sym.neg[1] == 0.5
    sp = fl.sign_probs(fl.LatticeStepLaw.simple(0.6), 3)
    assert sp.neg[2] == pytest.approx(0.16, abs=1e-15)
    assert sp.neg[3] == pytest.approx(0.352, abs=1e-15)
    assert np.allclose(sp.neg[1:] + sp.nonneg[1:], 1.0)


def _law(offs, w):
    w = np.asarray(w[: len(offs)])
    return fl.LatticeStepLaw(tuple(offs), tuple(w / w.sum()))


law_strategy = st.lists(st.integers(-3, 3), min_size=2, max_size=4, unique=True).flatmap(
    lambda offs: st.lists(st.floats(0.05, 1.0), min_size=len(offs), max_size=len(offs)).map(
        lambda w: _law(offs, w)))


@settings(max_examples=25, deadline=None)
@given(law_strategy)
def test_sign_probs_match_enumeration(law):
    N = 5
    got = fl.sign_probs(law, N).neg
    assert np.allclose(got[1:], enum_sign_probs(law, N)[1:], atol=1e-14)


def test_sign_probs_resource_cap():
    with pytest.raises(fl.ResourceError):
        fl.sign_probs(fl.LatticeStepLaw((-5, 5), (0.5, 0.5)), 1000, cap=10_000)
    with pytest.raises(DomainError):
        fl.sign_probs(fl.LatticeStepLaw.simple(0.6), 0)


def test_tail_bound_is_valid():
    prov = fl.sign_probs(fl.LatticeStepLaw.simple(0.55), 400)
    long = fl.sign_probs(fl.LatticeStepLaw.simple(0.55), 3000, cap=10**8)
    true_tail = long.exponent_sum() - prov.exponent_sum()
    assert 0 <= true_tail <= prov.exponent_tail_bound()


def test_lattice_law_validation():
    with pytest.raises(DomainError):
        fl.LatticeStepLaw((0.5, 1), (0.5, 0.5))
    with pytest.raises(DomainError):
        fl.LatticeStepLaw((1, 2), (0.5, 0.6))
    law = fl.LatticeStepLaw((2, -1, 2), (0.25, 0.5, 0.25))
    assert law.offsets == (-1, 2) and law.probs == (0.5, 0.5)


# -- ladder series and duality ------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(law_strategy)
def test_duality_and_ladder_oracle(law):
    K = 25
    lad = fl.ladder_series(fl.sign_probs(law, K), K)
    assert lad.duality_residual() < 1e-10
    assert np.allclose(lad.r.coef, ladder_pmf_dp(law, K, True), atol=1e-12)
    assert np.allclose(lad.a.coef, ladder_pmf_dp(law, K, False), atol=1e-12)


def test_ladder_simple_walk_values():
    prov = fl.sign_probs(fl.LatticeStepLaw.simple(0.6), 2000)
    lad = fl.ladder_series(prov, 40)
    assert lad.r[1] == pytest.approx(0.4, abs=1e-15)
    assert abs(lad.r1 - 2 / 3) <= lad.r1_bound + 1e-15
    closed = fl.simple_walk_closed_forms(0.6, 40)
    assert np.allclose(lad.r.coef, closed.r.coef, atol=1e-13)


# -- occupation ----------------------------------------------------------------


def test_occupation_simple_walk():
    prov = fl.sign_probs(fl.LatticeStepLaw.simple(0.6), 2000)
    occ = fl.occupation_gf(prov, 2000)
    assert occ[0] == pytest.approx(1 / 3, abs=1e-12)
    assert occ(1.0) == pytest.approx(1.0, abs=1e-9)
    assert occ.check_probability()


@pytest.mark.parametrize("p", [0.6, 0.7])
def test_occupation_matches_markov_dp(p):
    prov = fl.sign_probs(fl.LatticeStepLaw.simple(p), 2000)
    occ = fl.occupation_gf(prov, 10).coef
    dp, left = occupation_pmf_dp(p)
    assert left < 1e-12
    assert np.allclose(occ, dp, atol=1e-9)


@pytest.mark.parametrize("p", [0.55, 0.6, 0.7])
def test_three_forms_agree(p):
    forms = fl.occupation_gf_forms(fl.sign_probs(fl.LatticeStepLaw.simple(p), 3000, cap=10**8), 60)
    a, b, c = (f.coef for f in forms.values())
    assert np.max(np.abs(a - b)) < 1e-9
    assert np.max(np.abs(a - c)) < 1e-9
    closed = fl.simple_walk_closed_forms(p, 60).occupation
    assert np.max(np.abs(closed.coef - c)) < 1e-9


def test_occupation_requires_positive_drift():
    with pytest.raises(DomainError):
        fl.occupation_gf(fl.sign_probs(fl.LatticeStepLaw.simple(0.5), 50), 10)
    with pytest.raises(DomainError):
        fl.occupation_gf(fl.sign_probs(fl.LatticeStepLaw.simple(0.6), 5), 10)


def test_mean_occupation_closed_form():
    # E Z_0 for the +/-1 walk: derivative at 1 of (1 - q/p)/(1 - r(z)), i.e. q/(p - q)^2
    p, q = 0.6, 0.4
    occ = fl.simple_walk_closed_forms(p, 3000).occupation
    assert occ.derivative_at_one() == pytest.approx(q / (p - q) ** 2, rel=1e-8)


# -- simple walk closed forms --------------------------------------------------


def test_h_series():
    f = fl.simple_walk_closed_forms(0.6, 3000)
    assert f.h[0] == 0.6 - 0.4
    assert f.h(1.0) == pytest.approx(1.0, abs=1e-9)


def test_rationalized_form_at_one():
    p, q = 0.6, 0.4
    assert fl.simple_walk_occupation_printed(p, 1.0) == pytest.approx(-(p - q) / q)
    occ = fl.simple_walk_closed_forms(p, 2000).occupation
    assert occ(1.0) == pytest.approx(1.0, abs=1e-9)


def test_closed_forms_domain():
    with pytest.raises(DomainError):
        fl.simple_walk_closed_forms(0.5, 10)


# -- last zero -----------------------------------------------------------------


def enum_last_zero(p, N):
    out = np.zeros(N + 1)
    for steps in itertools.product((-1, 1), repeat=N):
        x, last, prob = 0, 0, 1.0
        for k, st_ in enumerate(steps, 1):
            x += st_
            prob *= p if st_ > 0 else 1 - p
            if x == 0:
                last = k
        out[last] += prob
    return out


@pytest.mark.parametrize("p", [0.5, 0.6, 0.7])
@pytest.mark.parametrize("N", [1, 2, 5, 8, 11, 12])
def test_last_zero_enumeration(p, N):
    assert np.allclose(fl.last_zero_pmf(p, N), enum_last_zero(p, N), atol=1e-12, rtol=0)


def test_last_zero_basic():
    assert np.array_equal(fl.last_zero_pmf(0.5, 2), [0.5, 0.0, 0.5])
    for N in (7, 50, 301):
        assert fl.last_zero_pmf(0.63, N).sum() == pytest.approx(1.0, abs=1e-12)
    even, odd = fl.last_zero_pmf(0.7, 40), fl.last_zero_pmf(0.7, 41)
    assert np.array_equal(odd[:41], even) and odd[41] == 0.0


def test_last_zero_errors():
    with pytest.raises(fl.ResourceError):
        fl.last_zero_pmf(0.6, 100, cap=50)
    with pytest.raises(DomainError):
        fl.last_zero_pmf(1.0, 4)


# -- zeros joint law -----------------------------------------------------------


def enum_zeros_joint(p, n_max):
    """P(N_0 = r, T_0 = 2n): paths of length 2n ending at 0 with r zeros, then no return."""
    q = 1 - p
    table = np.zeros((n_max + 1, n_max + 1))
    table[0, 0] = p - q
    for n in range(1, n_max + 1):
        for steps in itertools.product((-1, 1), repeat=2 * n):
            if sum(steps) != 0:
                continue
            zeros = np.count_nonzero(np.cumsum(steps) == 0)
            table[zeros, n] += p**n * q**n * (p - q)
    return table


def test_zeros_joint_enumeration():
    p = 0.6
    assert np.allclose(fl.zeros_joint_table(p, 7), enum_zeros_joint(p, 7), atol=1e-14)


def test_zeros_joint_values():
    p, q = 0.6, 0.4
    assert fl.zeros_joint_pmf(p, 1, 1) == pytest.approx(2 * p * q * (p - q), abs=1e-15)
    t = fl.zeros_joint_table(p, 30)
    for r in range(1, 31):
        for n in range(r, 31):
            ballot = 2**r * r / (2 * n - r) * math.comb(2 * n - r, n) * (p * q) ** n * (p - q)
            assert t[r, n] == pytest.approx(ballot, rel=1e-10, abs=1e-300)
    assert np.all(np.tril(t, -1)[1:] == 0)


def test_zeros_joint_mass_grows_to_one():
    masses = [fl.zeros_joint_table(0.6, n).sum() for n in (10, 20, 100, 400)]
    assert np.all(np.diff(masses) > 0)
    assert masses[1] == pytest.approx(0.806966, abs=1e-6)
    assert masses[-1] == pytest.approx(1.0, abs=1e-7)


def test_zeros_joint_rational_form_differs():
    # the r/(n-r) form misses the never-return factor and breaks at r = n
    assert math.isnan(fl.zeros_joint_pmf_printed(0.6, 2, 2))
    assert fl.zeros_joint_pmf_printed(0.6, 1, 2) != pytest.approx(fl.zeros_joint_pmf(0.6, 1, 2))
    with pytest.raises(DomainError):
        fl.zeros_joint_pmf(0.6, 3, 2)


# -- Gaussian walk -------------------------------------------------------------


@pytest.mark.parametrize("ratio", [0.5, 0.1])
def test_normal_walk_two_routes(ratio):
    r_series = fl.ladder_series(fl.normal_sign_probs(ratio, 1.0, 4000), 1000).r
    for z in (0.3, 0.6, 0.9):
        assert fl.normal_walk_r(z, ratio) == pytest.approx(r_series(z), abs=1e-6)


def test_normal_walk_negative_drift_route():
    r_series = fl.ladder_series(fl.normal_sign_probs(-0.3, 2.0, 400), 400).r
    assert fl.normal_walk_r(0.5, -0.3, 2.0) == pytest.approx(r_series(0.5), abs=1e-10)


def test_normal_walk_large_drift():
    assert fl.normal_walk_r(0.9, 10.0) < 1e-3


def test_normal_walk_limit():
    q, s = 1e-4, 1.0
    r = fl.normal_walk_r(math.exp(-q * s), -math.sqrt(2 * q))
    assert abs(r ** (1 / math.sqrt(q)) - math.exp(-(math.sqrt(1 + s) - 1))) < 0.01


def test_normal_walk_domain():
    with pytest.raises(DomainError):
        fl.normal_walk_r(0.5, 0.0)
    with pytest.raises(DomainError):
        fl.normal_walk_r(1.0, 0.5)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_sojourn_identity(s):
    lhs, rhs = fl.sojourn_integral_identity(s)
    assert abs(lhs - rhs) < 1e-8
    assert math.exp(-lhs) == pytest.approx(laplace_A(s), abs=1e-8)


def test_sojourn_identity_small_s():
    lhs, rhs = fl.sojourn_integral_identity(1e-9)
    assert abs(lhs) < 1e-8 and abs(rhs) < 1e-8
    with pytest.raises(DomainError):
        fl.sojourn_integral_identity(0.0)
