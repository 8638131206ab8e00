import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algonet import fold, oracle
from algonet.fold import FoldChain, InitMode
from algonet.network import describe

grid = np.linspace(0, 1, 1001)


def slope_changes(xs, ys, tol=1e-9):
    d = np.diff(ys) / np.diff(xs)
    return xs[1:-1][np.abs(np.diff(d)) > tol]


def test_init_parse():
    assert InitMode.parse("zero") is InitMode.ZERO
    assert InitMode.parse(InitMode.TAYLOR) is InitMode.TAYLOR
    with pytest.raises(ValueError):
        InitMode.parse("cubic")


def test_fold_chain():
    fc = FoldChain.dyadic(3, "zero")
    assert fc.pivots == (0.5, 0.25, 0.125)
    assert fc.finest == 0.125
    assert FoldChain.dyadic(2, "zero", scale=math.pi).pivots == (math.pi / 2, math.pi / 4)


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4, allow_nan=False))
def test_fold_unit(x):
    y = fold.fold_unit(0.5).forward(np.array([x]))
    assert y[0] == pytest.approx(x, abs=1e-15)
    assert y[1] == pytest.approx(0.5 - abs(x - 0.5), abs=1e-15)


def test_fold_phase_layer_widths():
    net = fold.fold_phase(FoldChain.dyadic(4, "zero"))
    assert net.hidden_widths == [2, 4, 6, 8]
    out = net.forward(np.array([0.8]))
    assert out == pytest.approx([0.8, 0.2, 0.2, 0.05, 0.05], abs=1e-15)


def test_hat():
    g = fold.build_hat()
    vals = g.forward(np.array([[0.25], [0.5], [1.0], [-1.0], [2.0], [0.3]]))[:, 0]
    assert vals.tolist() == pytest.approx([0.5, 1.0, 0.0, 0.0, 0.0, 0.6], abs=1e-15)


def test_sawtooth():
    assert np.array_equal(fold.build_sawtooth(1).forward(grid[:, None]), fold.build_hat().forward(grid[:, None]))
    g2 = fold.build_sawtooth(2).forward(np.array([[0.125], [0.25]]))[:, 0]
    assert g2.tolist() == [0.5, 1.0]
    xs = np.linspace(0, 1, 801)
    kinks = slope_changes(xs, fold.build_sawtooth(3).forward(xs[:, None])[:, 0])
    assert np.allclose(kinks, np.arange(1, 8) / 8)


@pytest.mark.parametrize("L", [1, 4, 8])
def test_telgarsky(L):
    net = fold.build_square_telgarsky(L)
    assert net.hidden_layers == L and net.width == 5
    y = net.forward(grid[:, None])[:, 0]
    np.testing.assert_allclose(y, oracle.oracle_square_telgarsky(grid, L), rtol=0, atol=1e-15)
    assert np.abs(y - grid**2).max() <= 4.0 ** -(L + 1) + 1e-15


def test_telgarsky_first_level():
    assert fold.build_square_telgarsky(1).forward(np.array([0.25]))[0] == 0.125


@pytest.mark.parametrize("L", [1, 3, 7])
@pytest.mark.parametrize("init", ["zero", "interpolating"])
def test_square_folding(L, init):
    net = fold.build_square_folding(L, init)
    assert net.hidden_layers == L and net.width == (2 if L == 1 else 4)
    assert net.forward(np.array([0.0]))[0] == 0.0
    y = net.forward(grid[:, None])[:, 0]
    np.testing.assert_allclose(y, oracle.oracle_square(grid, L, init), rtol=0, atol=4e-16)
    assert np.abs(y - grid**2).max() <= 4.0**-L


@pytest.mark.parametrize("L", [2, 5, 10])
def test_square_interpolates_dyadics(L):
    x = np.arange(2**L + 1) * 2.0**-L
    y = fold.build_square_folding(L, "interpolating").forward(x[:, None])[:, 0]
    assert np.array_equal(y, x * x)


@pytest.mark.parametrize("init", ["taylor", "interpolating"])
def test_exp_pair(init):
    L = 6
    net = fold.build_exp_pair(L, init)
    assert (net.hidden_layers, net.width, net.output_dim) == (2 * L, 2 * L + 4, 2)
    assert net.forward(np.array([0.0])).tolist() == [1.0, 1.0]
    y = net.forward(grid[:, None])
    err = np.abs(y - np.column_stack([np.exp(grid), np.exp(-grid)])).max()
    assert err <= math.e * 4.0**-L


def test_exp_l20_at_one():
    y = fold.build_exp_pair(20).forward(np.array([1.0]))
    assert abs(y[0] - math.e) <= math.e * 2.0**-40


def test_exp_zero_init_rejected():
    with pytest.raises(ValueError):
        fold.build_exp_pair(3, "zero")


def test_exp_constants():
    s = 0.25
    k1, k2 = fold.exp_constants(s)
    assert k1.beta == pytest.approx((math.exp(2 * s) - math.exp(s)) / s)
    assert k1.gamma == pytest.approx(math.exp(s))
    assert k2.beta == pytest.approx(math.exp(-s))
    assert k2.gamma == pytest.approx((1 - math.exp(-s)) / s)


@pytest.mark.parametrize("init", ["taylor", "interpolating"])
def test_sincos_pair(init):
    L = 6
    net = fold.build_sincos_pair(L, init)
    assert net.forward(np.array([0.0])).tolist() == [1.0, 0.0]
    x = grid * math.pi
    c, s = net.forward(x[:, None]).T
    assert np.abs(c * c + s * s - 1).max() <= math.pi**2 * 2.0 ** (-2 * L + 1)


def test_periodic_cos():
    L = 8
    base = fold.build_sincos_pair(L, "interpolating")
    net = fold.build_periodic_cos(L, 1)
    assert net.forward(np.array([1.5 * math.pi]))[0] == pytest.approx(
        base.forward(np.array([0.5 * math.pi]))[0], abs=1e-15)
    assert net.forward(np.array([2 * math.pi]))[0] == pytest.approx(1.0, abs=4.0**-L)


def test_monomials_structure_l25():
    s = describe(fold.build_monomials(10, 25))
    assert (s.depth, s.width) == (52, 68)


def test_monomials_at_zero():
    assert fold.build_monomials(6, 5).forward(np.array([0.0])).tolist() == [1, 0, 0, 0, 0, 0, 0]


def test_monomial_unfold_matrix():
    s = 0.125
    h = np.linspace(0, s, 7)
    M = fold.monomial_unfold_matrix(5, s)
    powers = h[:, None] ** np.arange(6)
    np.testing.assert_allclose(powers @ M.T, (2 * s - h)[:, None] ** np.arange(6), rtol=1e-13)


def test_monomials_track_oracle():
    L = 8
    y = fold.build_monomials(4, L).forward(grid[:, None])
    ref = oracle.oracle_monomials(grid, 4, L, dtype=np.longdouble).astype(float)
    assert np.abs(y - ref).max() <= 8 * L * np.spacing(1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1, allow_nan=False))
def test_mul_zero_factor(x):
    assert fold.build_mul_x_only(5).forward(np.array([x, 0.0]))[0] == 0.0
    # each unfold's switch value is p times the other factor, which is not zero,
    # so the alternating net hits zero only up to the rounding of that cancellation
    mul = fold.build_mul(5)
    assert abs(mul.forward(np.array([x, 0.0]))[0]) <= 4 * np.spacing(1.0)
    assert abs(mul.forward(np.array([0.0, x]))[0]) <= 4 * np.spacing(1.0)


@pytest.mark.parametrize("L", [1, 3, 6])
def test_mul_structure(L):
    net = fold.build_mul(L)
    assert (net.hidden_layers, net.width) == (3 * L, 4 * L + 4)
    assert net.hidden_widths[:L] == [4 * j for j in range(1, L + 1)]
    x = fold.build_mul_x_only(L)
    assert x.hidden_layers == 2 * L


def test_mul_beats_x_only():
    g = np.linspace(0, 1, 41)
    X = np.column_stack([a.ravel() for a in np.meshgrid(g, g, indexing="ij")])
    exact = X[:, 0] * X[:, 1]
    for L in range(2, 7):
        e_mul = np.abs(fold.build_mul(L).forward(X)[:, 0] - exact).max()
        e_x = np.abs(fold.build_mul_x_only(L).forward(X)[:, 0] - exact).max()
        assert e_mul < e_x


def test_constructors_in_float32():
    for net in (fold.build_square_folding(4, dtype=np.float32), fold.build_exp_pair(4, dtype=np.float32),
                fold.build_mul(3, dtype=np.float32)):
        assert net.dtype == np.float32
        assert net.forward(np.full(net.input_dim, 0.5)).dtype == np.float32


def test_metadata_records_constructor():
    net = fold.build_square_folding(3, "interpolating")
    assert net.metadata["constructor"] == "square"
    assert net.metadata["L"] == 3


def test_scaled_hat_is_exact():
    p = 4 * math.pi
    x = np.linspace(0, 2 * p, 100001)
    y = fold.scaled_hat(p).forward(x[:, None])[:, 0]
    assert np.array_equal(y, np.where(x <= p, x, 2 * p - x))
