import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algonet.branch import (
    Branch,
    BranchSpec,
    CrossingConstants,
    check_crossing,
    compile_branches,
    compile_crossing,
    compile_minmax,
    compile_sign_reversal,
    hidden_preactivations,
)
from algonet.fold import exp_constants, monomial_constants
from algonet.sparse import SparseMatrix

reals = st.floats(-1e6, 1e6, allow_nan=False)


@pytest.mark.parametrize("x, expected", [((3, 1), (1, 3)), ((-2, -2), (-2, -2)), ((-5, 4), (-5, 4))])
def test_minmax_examples(x, expected):
    assert compile_minmax().forward(np.array(x, float)).tolist() == list(expected)


def test_minmax_first_layer_weights():
    a2 = compile_minmax().layers[0].weights.to_dense()
    assert a2.tolist() == [[1, -1], [-1, 1], [0, 1], [0, -1]]
    assert SparseMatrix.from_dense(a2).matvec(np.array([3.0, 1.0])).tolist() == [2, -2, 1, -1]


@settings(max_examples=200, deadline=None)
@given(reals, reals)
def test_minmax_within_rounding(x, y):
    # (x - y) + y rounds, so the element is exact only up to a couple of ulps
    lo, hi = compile_minmax().forward(np.array([x, y]))
    ulp = np.spacing(max(abs(x), abs(y), 1e-300))
    assert abs(lo - min(x, y)) <= 2 * ulp and abs(hi - max(x, y)) <= 2 * ulp
    assert lo <= hi


@pytest.mark.parametrize("x", [0.5, -0.5])
def test_sign_reversal_abs(x):
    net = compile_sign_reversal(BranchSpec(None, 0, 1))
    assert net.forward(np.array([x, -x]))[0] == 0.5


def test_sign_reversal_concatenation():
    # sin(x) for x >= 0, x for x < 0; the else-branch is negative on its side
    net = compile_sign_reversal(BranchSpec(None, 0, 1), sign_b=1, sign_c=-1)
    xs = np.linspace(-2, 2, 41)
    out = net.forward(np.column_stack([np.sin(xs), xs]))[:, 0]
    np.testing.assert_allclose(out, np.where(xs >= 0, np.sin(xs), xs), rtol=0, atol=1e-15)


def test_sign_reversal_rejects_bad_sign():
    with pytest.raises(ValueError):
        compile_sign_reversal(BranchSpec(None, 0, 1), sign_b=0)


def test_branch_spec_validation():
    with pytest.raises(ValueError):
        BranchSpec(0, 0, 1)
    with pytest.raises(ValueError):
        BranchSpec(None, -1, 1)
    with pytest.raises(ValueError):
        CrossingConstants(0.0, 1.0)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.9])
def test_exp_unfold_step(x):
    s = 0.5
    k1, _ = exp_constants(s)
    assert k1.beta == pytest.approx((math.e - math.exp(s)) / s)
    assert k1.gamma == pytest.approx(math.exp(s))
    h = s - abs(x - s)
    z1, z2 = math.exp(h), math.exp(-h)
    net = compile_crossing(BranchSpec(0, 1, 2, value=math.exp(s)), k1)
    out = net.forward(np.array([x - s, math.e * z2, z1]))[0]
    assert out == pytest.approx(math.exp(x), rel=1e-15)


@pytest.mark.parametrize("x", [0.3 * math.pi, 0.7 * math.pi])
def test_trig_unfold_step(x):
    p = math.pi / 2
    h = p - abs(x - p)
    z1, z2 = math.cos(h), math.sin(h)
    then_cos = math.cos(2 * p) * z1 + math.sin(2 * p) * z2
    net = compile_crossing(BranchSpec(0, 1, 2, value=0.0), CrossingConstants(1.0, 1.0))
    out = net.forward(np.array([x - p, then_cos, z1]))[0]
    assert out == pytest.approx(math.cos(x), abs=1e-15)


def test_compile_crossing_needs_condition():
    with pytest.raises(ValueError):
        compile_crossing(BranchSpec(None, 0, 1), CrossingConstants(1.0, 1.0))


def test_branches_share_condition_neurons():
    k = CrossingConstants(1.0, 1.0)
    net = compile_branches(3, 0, [Branch(1, 2, k), Branch(2, 1, k)], emit_condition=True)
    assert net.width == 2 + 2 * 2
    a = np.linspace(-1, 1, 21)
    X = np.column_stack([a, a, -a])  # both branches cross at 0
    Y = net.forward(X)
    np.testing.assert_allclose(Y[:, 0], np.where(a >= 0, a, -a), atol=1e-15)
    np.testing.assert_allclose(Y[:, 1], np.where(a >= 0, -a, a), atol=1e-15)
    assert np.array_equal(Y[:, 2], a)


def test_value_terms_enter_switch_value():
    # then = 2w, else = w, switch value v* = w; identity on w must survive
    k = CrossingConstants(1.0, 1.0)
    net = compile_branches(4, 0, [Branch(1, 2, k, 0.0, ((3, 1.0),))])
    a = np.array([-0.25, 0.0, 0.25])
    w = np.array([0.3, 0.3, 0.3])
    Y = net.forward(np.column_stack([a, w + a, w + 0.5 * a, w]))[:, 0]
    np.testing.assert_allclose(Y, np.where(a >= 0, w + a, w + 0.5 * a), atol=1e-15)


def test_hidden_preactivations_shape():
    net = compile_minmax()
    assert hidden_preactivations(net, np.ones((5, 2))).shape == (5, 4)
    assert hidden_preactivations(net, [3.0, 1.0]).tolist() == [2, -2, 1, -1]


@pytest.mark.parametrize("k", range(2, 11))
def test_monomial_constants_satisfy_crossing(k):
    s = 0.25
    x = np.linspace(0, 2 * s, 4001)
    a, h = x - s, s - np.abs(x - s)
    # both branches continued across the pivot, relative to v* = s^k
    b_hat = (2 * s - h) ** k - s**k
    c_hat = h**k - s**k
    c = monomial_constants(k, s)
    assert check_crossing(a, b_hat, c.beta, 1).ok
    assert check_crossing(a, c_hat, c.gamma, 1).ok


@pytest.mark.parametrize("k", range(2, 11))
def test_tangent_beta_violates_crossing(k):
    s = 0.25
    x = np.linspace(s, 2 * s, 2001)
    a = x - s
    diag = check_crossing(a, x**k - s**k, k * s ** (k - 1), 1)
    assert diag.then_violations > 0
    assert diag.worst_margin < 0


def test_check_crossing_counts_both_sides():
    a = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    d = check_crossing(a, np.array([0.0, -1.0, 0.0, 1.0, 0.0]), 1.0, 1)
    assert (d.then_violations, d.else_violations) == (1, 1)
    assert d.worst_margin == -0.5
    assert check_crossing(a, 2 * a, 1.0, -1).ok
