import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluctua import sparre


def test_negative_indices_examples():
    assert sparre.negative_partial_sum_indices([1, -2]) == [2]
    assert sparre.negative_partial_sum_indices([1, 2, 3]) == []
    assert sparre.negative_partial_sum_indices([-1, -1, 3]) == [2, 1]


def test_transform_examples():
    assert sparre.transform([1, -2]) == [-2, 1]
    assert sparre.first_minimum_position([-2, 1]) == 1
    assert sparre.transform([-1, -1, 3]) == [-1, -1, 3]
    assert sparre.first_minimum_position([-1, -1, 3]) == 2
    assert sparre.transform([2, 0.5, 1]) == [2, 0.5, 1]


def test_inverse_examples():
    assert sparre.inverse_transform([-2, 1]) == [1, -2]
    assert sparre.inverse_transform([3, -1, 2]) == [3, -1, 2]


def test_first_minimum_is_earliest():
    # minimum -1 attained at places 1 and 3
    assert sparre.first_minimum_position([-1, 1, -1]) == 1
    assert sparre.first_minimum_position([]) == 0


def test_nan_rejected():
    with pytest.raises(ValueError):
        sparre.transform([1.0, float("nan")])


def test_random_continuous_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        seq = list(rng.standard_normal(int(rng.integers(1, 13))))
        out = sparre.transform(seq)
        assert sparre.inverse_transform(out) == seq
        assert sparre.first_minimum_position(out) == len(sparre.negative_partial_sum_indices(seq))
        assert sorted(out) == sorted(seq)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_lattice_bijection_exhaustive(n):
    # on {-1, +1}^n the transform is a bijection, so images are distinct
    seqs = [list(s) for s in itertools.product((-1.0, 1.0), repeat=n)]
    images = {tuple(sparre.transform(s)) for s in seqs}
    assert len(images) == len(seqs)
    for s in seqs:
        assert sparre.inverse_transform(sparre.transform(s)) == s


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=0, max_size=12))
def test_integer_roundtrip(seq):
    seq = [float(x) for x in seq]
    out = sparre.transform(seq)
    assert sparre.inverse_transform(out) == seq
    assert sparre.first_minimum_position(out) == len(sparre.negative_partial_sum_indices(seq))
