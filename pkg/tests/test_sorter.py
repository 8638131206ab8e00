import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from algonet.network import ReluNetwork, count_params, describe
from algonet.sparse import SparseAffineMap
from algonet.sorter import GENERATOR, bitonic_schedule, build_sorter, check_sorted, verify_sorter


def test_schedule_l1():
    s = bitonic_schedule(1)
    assert s.layers == (((0, 1, True),),)


def test_schedule_l4_shape():
    s = bitonic_schedule(4)
    assert len(s.layers) == 10
    assert all(len(layer) == 8 for layer in s.layers)
    for layer in s.layers:
        lanes = [i for k, l, _ in layer for i in (k, l)]
        assert sorted(lanes) == list(range(16))


def test_schedule_l3_sorts_all_permutations():
    s = bitonic_schedule(3)
    assert len(s.layers) == 6
    for p in itertools.permutations(range(1, 9)):
        assert s.apply(p).tolist() == list(range(1, 9))


def test_schedule_rejects_l0():
    with pytest.raises(ValueError):
        bitonic_schedule(0)


def test_reverse_sorted():
    assert build_sorter(2).forward(np.array([4.0, 3, 2, 1])).tolist() == [1, 2, 3, 4]


def test_all_equal_is_fixed_point():
    x = np.full(16, -3.75)
    assert np.array_equal(build_sorter(4).forward(x), x)


@pytest.mark.parametrize("L", [1, 2, 3, 4, 5])
def test_structure(L):
    net = build_sorter(L)
    N = 2**L
    assert net.hidden_layers == L * (L + 1) // 2
    assert net.hidden_widths == [2 * N] * net.hidden_layers
    assert (net.input_dim, net.output_dim) == (N, N)


def test_param_counts_l4():
    p = count_params(build_sorter(4))
    assert (p.dense, p.sparse) == (10576, 1392)
    assert describe(build_sorter(4)).hidden_layers == 10


def test_outputs_are_a_permutation():
    net = build_sorter(4)
    rng = np.random.default_rng(0)
    X = rng.integers(-50, 50, (1000, 16)).astype(float)  # integer values stay exact
    assert np.array_equal(net.forward(X), np.sort(X, axis=1))


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, 8, elements=st.floats(-1e8, 1e8, allow_nan=False)))
def test_sort_property(x):
    failed, _ = check_sorted(build_sorter(3), x)
    assert not failed.any()


def test_verify_l1():
    rep = verify_sorter(1, 100, 0)
    assert rep.passed and rep.max_deviation_ulps <= 4
    assert rep.generator == GENERATOR


def test_verify_l6():
    assert verify_sorter(6, 100, 1).passed


def test_verify_is_seeded():
    a, b = verify_sorter(5, 50, 7), verify_sorter(5, 50, 7)
    assert a == b


def test_verify_detects_broken_net():
    net = build_sorter(3)
    last = net.layers[-1]
    bad = ReluNetwork(net.layers[:-1] + (SparseAffineMap(last.weights, np.ones(8)),))
    assert verify_sorter(3, 20, 0, net=bad).failures == 20


def test_verify_needs_trials():
    with pytest.raises(ValueError):
        verify_sorter(2, 0, 0)
