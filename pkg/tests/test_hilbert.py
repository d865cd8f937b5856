import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ndmss.hilbert import (
    DoubledConfiguration,
    SpinConfiguration,
    all_configurations,
    all_doubled_configurations,
    config_to_index,
    doubled_index,
    flip,
    index_to_config,
    indices_of,
)

spins = st.integers(1, 6).flatmap(lambda n: st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n))


@pytest.mark.parametrize(
    "c, idx", [((-1, -1, -1), 0), ((1, 1, 1), 7), ((1, -1, 1), 5)]
)
def test_config_to_index_examples(c, idx):
    assert config_to_index(c) == idx


def test_index_to_config_examples():
    assert index_to_config(0, 2) == SpinConfiguration((-1, -1))
    assert index_to_config(3, 2) == SpinConfiguration((1, 1))
    with pytest.raises(IndexError):
        index_to_config(4, 2)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_roundtrip_all(n):
    for i in range(2**n):
        assert config_to_index(index_to_config(i, n)) == i


def test_flip_examples():
    assert flip((1, -1), {0}) == SpinConfiguration((-1, -1))
    c = SpinConfiguration((1, -1, 1))
    assert flip(c, []) == c
    with pytest.raises(IndexError):
        flip(c, [3])


@given(spins, st.data())
def test_flip_involution(c, data):
    sites = data.draw(st.sets(st.integers(0, len(c) - 1)))
    assert flip(flip(c, sites), sites) == SpinConfiguration(tuple(c))


@given(spins)
def test_index_bijection(c):
    assert index_to_config(config_to_index(c), len(c)) == SpinConfiguration(tuple(c))


def test_invalid_spin_rejected():
    with pytest.raises(ValueError):
        SpinConfiguration((1, 0))
    with pytest.raises(ValueError):
        DoubledConfiguration((1, 1), (1,))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_batch_enumeration_orders_by_index(n):
    basis = all_configurations(n)
    np.testing.assert_array_equal(indices_of(basis), np.arange(2**n))
    rows, cols = all_doubled_configurations(n)
    np.testing.assert_array_equal(doubled_index(rows, cols), np.arange(4**n))


def test_swapped():
    d = DoubledConfiguration((1, -1), (-1, -1))
    assert d.swapped().row == d.col and d.swapped().swapped() == d
