"""Recursive fold/unfold approximators compiled to ReLU networks.

Every constructor follows the same plan.  ``L`` folding layers map the input
onto the finest interval ``[0, s_L]`` while keeping each level's input alive
as an identity pair; a base-case approximation is applied there (an affine
map, fused into the next layer); then ``L`` unfolding layers undo the folds
one level at a time, each compiled as a conditional on ``x_j - s_j``.

State vectors between stages are documented per constructor.  ``x_j`` is the
input of level ``j`` (``x_1 = x``, ``x_{j+1} = h_j(x_j)``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .branch import Branch, CrossingConstants, compile_branches
from .network import (
    ReluNetwork,
    affine_network,
    chain,
    lift_identity,
    parallel,
    selection,
)
from .sparse import SparseAffineMap, SparseMatrix


class InitMode(str, enum.Enum):
    ZERO = "zero"
    TAYLOR = "taylor"
    INTERPOLATING = "interpolating"

    @classmethod
    def parse(cls, value) -> "InitMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown init mode {value!r}; expected zero, taylor or interpolating") from None


@dataclass(frozen=True)
class FoldChain:
    """Pivots and base-case choice of a recursive approximator."""

    L: int
    pivots: tuple[float, ...]
    init: InitMode

    @classmethod
    def dyadic(cls, L: int, init, scale: float = 1.0) -> "FoldChain":
        if L < 1:
            raise ValueError("need at least one level (L >= 1)")
        return cls(L, tuple(scale * 2.0**-j for j in range(1, L + 1)), InitMode.parse(init))

    @property
    def finest(self) -> float:
        """Length of the base interval ``[0, s_L]``."""
        return self.pivots[-1]


def _affine(rows: int, cols: int, entries, bias=None, dtype=np.float64) -> ReluNetwork:
    w = SparseMatrix.from_entries(rows, cols, entries, dtype=dtype)
    return affine_network(w, np.zeros(rows) if bias is None else bias)


def _stage(gather: ReluNetwork, blocks: Sequence[ReluNetwork], reorder: ReluNetwork | None = None) -> ReluNetwork:
    blocks = [b for b in blocks if b is not None]
    parts = [gather, parallel(blocks)]
    if reorder is not None:
        parts.append(reorder)
    return chain(parts)


def _carry(n: int, dtype) -> ReluNetwork | None:
    return lift_identity(n, 1, dtype=dtype) if n > 0 else None


def fold_unit(pivot: float, dtype=np.float64) -> ReluNetwork:
    """``x -> (x, h(x))`` with ``h(x) = pivot - |x - pivot|``; two neurons.

    The neurons ``relu(x - pivot)`` and ``relu(pivot - x)`` are an identity
    pair for ``x - pivot``, so ``x`` survives the layer for free.
    """
    hidden = SparseAffineMap(SparseMatrix.from_dense([[1.0], [-1.0]], dtype=dtype), [-pivot, pivot])
    out = SparseAffineMap(SparseMatrix.from_dense([[1.0, -1.0], [-1.0, -1.0]], dtype=dtype), [pivot, pivot])
    return ReluNetwork((hidden, out), {"constructor": "fold", "pivot": pivot})


def _fold_stage(j: int, pivot: float, n_extra: int, dtype) -> ReluNetwork:
    """``[x_1..x_j, e_1..e_k] -> [x_1..x_{j+1}, e_1..e_k]``."""
    n_in = j + n_extra
    gather = selection(n_in, [j - 1] + list(range(j - 1)) + list(range(j, n_in)), dtype=dtype)
    # parallel output: [x_j, x_{j+1}, x_1..x_{j-1}, e...]
    order = list(range(2, j + 1)) + [0, 1] + list(range(j + 1, j + 1 + n_extra))
    return _stage(gather, [fold_unit(pivot, dtype), _carry(n_in - 1, dtype)], selection(j + 1 + n_extra, order, dtype))


def fold_phase(chain_: FoldChain, n_extra: int = 0, dtype=np.float64) -> ReluNetwork:
    """``[x, e...] -> [x_1, ..., x_{L+1}, e...]``; layer ``j`` has ``2*(j + n_extra)`` neurons."""
    return chain([_fold_stage(j, s, n_extra, dtype) for j, s in enumerate(chain_.pivots, start=1)])


# -- generic unary fold/unfold -----------------------------------------------------


@dataclass(frozen=True)
class _Component:
    """How one entry of the unfolded state is produced at a level.

    kind ``branch``: then-value ``then_row @ z``, else-value ``z[k]``.
    kind ``const``: a fixed number.  kind ``input``: ``x_j`` itself.
    """

    kind: str
    then_row: tuple[float, ...] = ()
    constants: CrossingConstants | None = None
    value: float = 0.0


def _unfold_stage(j: int, pivot: float, comps: Sequence[_Component], dtype) -> ReluNetwork:
    """``[z_0..z_{m-1}, x_1..x_j] -> [z'_0..z'_{m-1}, x_1..x_{j-1}]``."""
    m = len(comps)
    n_in = m + j
    branch_ids = [k for k, c in enumerate(comps) if c.kind == "branch"]
    r = len(branch_ids)
    # gather: [a, b_1..b_r, c_1..c_r, x_1..x_{j-1}]
    entries = [(0, m + j - 1, 1.0)]
    bias = np.zeros(1 + 2 * r + (j - 1))
    bias[0] = -pivot
    for i, k in enumerate(branch_ids):
        entries.extend((1 + i, col, v) for col, v in enumerate(comps[k].then_row) if v != 0.0)
        entries.append((1 + r + i, k, 1.0))
    entries.extend((1 + 2 * r + t, m + t, 1.0) for t in range(j - 1))
    gather = _affine(len(bias), n_in, entries, bias, dtype)

    branches = [
        Branch(1 + i, 1 + r + i, comps[k].constants, comps[k].value) for i, k in enumerate(branch_ids)
    ]
    bnet = compile_branches(1 + 2 * r, 0, branches, emit_condition=True, dtype=dtype)
    # parallel output: [branch results (r), a, x_1..x_{j-1}]
    n_mid = r + 1 + (j - 1)
    out_entries, out_bias = [], np.zeros(m + j - 1)
    for k, c in enumerate(comps):
        if c.kind == "branch":
            out_entries.append((k, branch_ids.index(k), 1.0))
        elif c.kind == "const":
            out_bias[k] = c.value
        elif c.kind == "input":
            out_entries.append((k, r, 1.0))
            out_bias[k] = pivot
        else:
            raise ValueError(c.kind)
    out_entries.extend((m + t, r + 1 + t, 1.0) for t in range(j - 1))
    assemble = _affine(m + j - 1, n_mid, out_entries, out_bias, dtype)
    return _stage(gather, [bnet, _carry(j - 1, dtype)], assemble)


def _base_case(L: int, init_w: Sequence[float], init_b: Sequence[float], dtype) -> ReluNetwork:
    """``[x_1..x_{L+1}] -> [z (from x_{L+1}), x_1..x_L]``."""
    m = len(init_w)
    entries = [(k, L, float(w)) for k, w in enumerate(init_w) if w != 0.0]
    entries.extend((m + t, t, 1.0) for t in range(L))
    bias = np.concatenate([np.asarray(init_b, dtype=float), np.zeros(L)])
    return _affine(m + L, L + 1, entries, bias, dtype)


def _fold_unfold(
    fc: FoldChain,
    init_w: Sequence[float],
    init_b: Sequence[float],
    level_components: Callable[[int, float], Sequence[_Component]],
    dtype,
) -> ReluNetwork:
    parts = [fold_phase(fc, dtype=dtype), _base_case(fc.L, init_w, init_b, dtype)]
    for j in range(fc.L, 0, -1):
        parts.append(_unfold_stage(j, fc.pivots[j - 1], level_components(j, fc.pivots[j - 1]), dtype))
    return chain(parts)


# -- hat and sawtooth --------------------------------------------------------------


def build_hat(dtype=np.float64) -> ReluNetwork:
    """``g(x) = 2 relu(x) - 4 relu(x - 1/2) + 2 relu(x - 1)``: the unit hat on [0, 1]."""
    hidden = SparseAffineMap(SparseMatrix.from_dense([[1.0], [1.0], [1.0]], dtype=dtype), [0.0, -0.5, -1.0])
    out = SparseAffineMap(SparseMatrix.from_dense([[2.0, -4.0, 2.0]], dtype=dtype), [0.0])
    return ReluNetwork((hidden, out), {"constructor": "hat"})


def scaled_hat(p: float, dtype=np.float64) -> ReluNetwork:
    """``relu(x) - 2 relu(x - p) + relu(x - 2p)`` = ``p g(x / 2p)``: folds [0, 2p] onto [0, p].

    For floating-point ``x`` in [0, 2p] the result is exact: ``x - p`` is exact
    on [p, 2p] and ``2p - x`` is a multiple of ``ulp(p)`` no larger than ``p``.
    """
    hidden = SparseAffineMap(SparseMatrix.from_dense([[1.0], [1.0], [1.0]], dtype=dtype), [0.0, -p, -2 * p])
    out = SparseAffineMap(SparseMatrix.from_dense([[1.0, -2.0, 1.0]], dtype=dtype), [0.0])
    return ReluNetwork((hidden, out), {"constructor": "scaled_hat", "p": p})


def build_sawtooth(s: int, dtype=np.float64) -> ReluNetwork:
    """``g`` composed with itself ``s`` times; ``2**(s-1)`` hats on [0, 1]."""
    if s < 1:
        raise ValueError("sawtooth needs s >= 1")
    return chain([build_hat(dtype)] * s).with_metadata(constructor="sawtooth", s=s)


# -- x^2 -----------------------------------------------------------------------------


def build_square_telgarsky(L: int, dtype=np.float64) -> ReluNetwork:
    """``x - sum_{s=1..L} 4**-s g_s(x)`` on [0, 1]; width 5.

    State between layers: ``[g_{s}(x), S_s]`` with running value
    ``S_s = x - sum_{t<=s} 4**-t g_t(x)``.
    """
    if L < 1:
        raise ValueError("need L >= 1")
    hat = build_hat(dtype)
    stages = [
        _stage(selection(1, [0, 0], dtype), [hat, lift_identity(1, 1, dtype)], None)
    ]  # x -> [g_1, x]
    for s in range(2, L + 1):
        # [g_{s-1}, S_{s-2}] -> [g_s, S_{s-1}] with S_{s-1} = S_{s-2} - 4**-(s-1) g_{s-1}
        gather = _affine(2, 2, [(0, 0, 1.0), (1, 1, 1.0), (1, 0, -(4.0 ** -(s - 1)))], dtype=dtype)
        stages.append(_stage(gather, [hat, lift_identity(1, 1, dtype)]))
    final = _affine(1, 2, [(0, 1, 1.0), (0, 0, -(4.0**-L))], dtype=dtype)
    return chain(stages + [final]).with_metadata(constructor="square-telgarsky", L=L)


def build_square_folding(L: int, init="zero", dtype=np.float64) -> ReluNetwork:
    """Folding approximation of ``x^2`` on [0, 1] with ``L`` hidden layers.

    The correction of level ``j`` is ``eta_j(x_j) = 2 s_j (x_j - x_{j+1})``,
    affine in the fold outputs, so it is accumulated into a running sum
    carried as an identity pair: state ``[x_{j+1}, S_j]``.
    ``init``: ``zero`` (``taylor`` is the same thing for ``x^2``) or
    ``interpolating`` (``s_L * x`` on the base interval).
    """
    fc = FoldChain.dyadic(L, init)
    stages = []
    for j, s in enumerate(fc.pivots, start=1):
        fold = fold_unit(s, dtype)  # -> [x_j, x_{j+1}]
        eta = _affine(2, 2, [(0, 1, 1.0), (1, 0, 2 * s), (1, 1, -2 * s)], dtype=dtype)  # [x_{j+1}, eta_j]
        if j == 1:
            stages.append(chain([fold, eta]))
            continue
        acc = _affine(2, 3, [(0, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0)], dtype=dtype)
        stages.append(
            _stage(selection(2, [0, 1], dtype), [chain([fold, eta]), lift_identity(1, 1, dtype)], acc)
        )
    base = fc.finest if fc.init is InitMode.INTERPOLATING else 0.0
    stages.append(_affine(1, 2, [(0, 0, base), (0, 1, 1.0)], dtype=dtype))
    return chain(stages).with_metadata(constructor="square", L=L, init=fc.init.value)


# -- exp and trig ------------------------------------------------------------------


def exp_constants(s: float) -> tuple[CrossingConstants, CrossingConstants]:
    """Crossing constants for the ``e^x`` and ``e^-x`` unfolds at pivot ``s``."""
    k1 = CrossingConstants(beta=(math.exp(2 * s) - math.exp(s)) / s, gamma=math.exp(s))
    k2 = CrossingConstants(beta=math.exp(-s), gamma=(1 - math.exp(-s)) / s)
    return k1, k2


def build_exp_pair(L: int, init="taylor", dtype=np.float64) -> ReluNetwork:
    """``x -> (e^x, e^-x)`` on [0, 1]; ``2L`` hidden layers, width ``2L + 4``."""
    fc = FoldChain.dyadic(L, init)
    w = fc.finest
    if fc.init is InitMode.TAYLOR:
        init_w, init_b = (1.0, -1.0), (1.0, 1.0)
    elif fc.init is InitMode.INTERPOLATING:
        init_w, init_b = ((math.exp(w) - 1) / w, (math.exp(-w) - 1) / w), (1.0, 1.0)
    else:
        raise ValueError("exp pair supports taylor or interpolating init")

    def level(j, s):
        k1, k2 = exp_constants(s)
        return [
            _Component("branch", (0.0, math.exp(2 * s)), k1, math.exp(s)),
            _Component("branch", (math.exp(-2 * s), 0.0), k2, math.exp(-s)),
        ]

    net = _fold_unfold(fc, init_w, init_b, level, dtype)
    return net.with_metadata(constructor="exp", L=L, init=fc.init.value)


def build_sincos_pair(L: int, init="taylor", dtype=np.float64) -> ReluNetwork:
    """``x -> (cos x, sin x)`` on [0, pi]; pivots ``pi 2**-j``, all crossing constants 1."""
    fc = FoldChain.dyadic(L, init, scale=math.pi)
    w = fc.finest
    if fc.init is InitMode.TAYLOR:
        init_w, init_b = (0.0, 1.0), (1.0, 0.0)
    elif fc.init is InitMode.INTERPOLATING:
        init_w, init_b = ((math.cos(w) - 1) / w, math.sin(w) / w), (1.0, 0.0)
    else:
        raise ValueError("sincos pair supports taylor or interpolating init")
    one = CrossingConstants(1.0, 1.0)

    def level(j, p):
        c2, s2 = math.cos(2 * p), math.sin(2 * p)
        return [
            _Component("branch", (c2, s2), one, math.cos(p)),
            _Component("branch", (s2, -c2), one, math.sin(p)),
        ]

    net = _fold_unfold(fc, init_w, init_b, level, dtype)
    return net.with_metadata(constructor="sincos", L=L, init=fc.init.value)


def build_periodic_cos(L: int, s: int, init="interpolating", dtype=np.float64) -> ReluNetwork:
    """``cos`` on ``[0, pi 2**s]`` as ``f_L(pi g_s(x / (pi 2**s)))``.

    The scaled sawtooth is applied as ``s`` scaled hats with pivots
    ``pi 2**(s-1), ..., pi`` rather than by rescaling to [0, 1], which would
    round the input and amplify that rounding by ``2**s``.
    """
    if s < 1:
        raise ValueError("need s >= 1")
    folds = [scaled_hat(math.pi * 2**i, dtype) for i in range(s - 1, -1, -1)]
    net = chain(folds + [build_sincos_pair(L, init, dtype), selection(2, [0], dtype)])
    return net.with_metadata(constructor="periodic-cos", L=L, s=s, init=InitMode.parse(init).value)


# -- monomials -----------------------------------------------------------------------


def monomial_unfold_matrix(d: int, s: float) -> np.ndarray:
    """``M[k, l]`` with ``x^k = sum_l M[k, l] h^l`` where ``h = 2s - x``."""
    M = np.zeros((d + 1, d + 1))
    for k in range(d + 1):
        for l in range(k + 1):
            M[k, l] = math.comb(k, l) * (2 * s) ** (k - l) * (-1) ** l
    return M


def monomial_constants(k: int, s: float) -> CrossingConstants:
    """``beta``: secant slope of ``x^k`` over ``[s, 2s]``; ``gamma``: tangent slope at ``s``.

    The tangent is not enough for ``beta``: a convex ``x^k`` lies above its
    tangent on both sides of the pivot, so ``beta*a - b_hat`` would not
    change sign.  ``gamma = 1`` also satisfies the crossing condition but
    does not scale with ``s^k`` and costs several times more rounding.
    """
    return CrossingConstants(beta=(2**k - 1) * s ** (k - 1), gamma=k * s ** (k - 1))


def build_monomials(d: int, L: int, init="interpolating", dtype=np.float64) -> ReluNetwork:
    """``x -> (1, x, ..., x^d)`` on [0, 1]; width ``2L + 2d - 2``.

    Entry 0 is exact and entry 1 is ``x`` up to one rounding of ``(x - s) + s``
    (carrying ``x`` separately would cost a wider layer); each degree ``k >= 2`` is one conditional per
    level whose then-value is the affine unfold ``M @ z``.
    """
    if d < 2:
        raise ValueError("need degree d >= 2")
    fc = FoldChain.dyadic(L, init)
    w = fc.finest
    if fc.init is InitMode.INTERPOLATING:
        init_w = [0.0] + [w ** (k - 1) for k in range(1, d + 1)]
    elif fc.init is InitMode.TAYLOR:
        init_w = [0.0, 1.0] + [0.0] * (d - 1)
    else:
        raise ValueError("monomials support interpolating or taylor init")
    init_b = [1.0] + [0.0] * d

    def level(j, s):
        M = monomial_unfold_matrix(d, s)
        comps = [_Component("const", value=1.0), _Component("input")]
        for k in range(2, d + 1):
            comps.append(_Component("branch", tuple(M[k]), monomial_constants(k, s), s**k))
        return comps

    net = _fold_unfold(fc, init_w, init_b, level, dtype)
    return net.with_metadata(constructor="monomials", d=d, L=L, init=fc.init.value)


# -- multiplication ----------------------------------------------------------------


def mul_constants(s: float) -> CrossingConstants:
    return CrossingConstants(4 * s, 4 * s)


def _bilinear_unfold_stage(n_carry_in: int, cond: int, other: int, w: int, keep: Sequence[int],
                           pivot: float, consts: CrossingConstants, dtype) -> ReluNetwork:
    """One conditional ``cond > pivot ? 2*pivot*other - w : w`` with ``v* = pivot*other``.

    Output: ``[w', value of cond, keep...]``.
    """
    n_in = n_carry_in
    entries = [(0, cond, 1.0), (1, other, 2 * pivot), (1, w, -1.0), (2, w, 1.0), (3, other, 1.0)]
    entries.extend((4 + t, idx, 1.0) for t, idx in enumerate(keep))
    bias = np.zeros(4 + len(keep))
    bias[0] = -pivot
    gather = _affine(len(bias), n_in, entries, bias, dtype)
    bnet = compile_branches(4, 0, [Branch(1, 2, consts, 0.0, ((3, pivot),))], emit_condition=True, dtype=dtype)
    # bnet reads input 3 only through v*; feed it via the gather
    n_mid = 2 + len(keep)
    assemble = _affine(n_mid, n_mid, [(0, 0, 1.0), (1, 1, 1.0)] + [(2 + t, 2 + t, 1.0) for t in range(len(keep))],
                       np.array([0.0, pivot] + [0.0] * len(keep)), dtype)
    return _stage(gather, [bnet, _carry(len(keep), dtype)], assemble)


def build_mul(L: int, dtype=np.float64) -> ReluNetwork:
    """``(x, y) -> ~xy`` on [0, 1]^2 folding x and y alternately; error ``O(4**-L)``.

    Fold layer ``j`` folds ``x_j`` and ``y_j`` together.  Unfolding level ``j``
    takes two layers: the ``y`` conditional then the ``x`` conditional.
    """
    fc = FoldChain.dyadic(L, "zero")
    stages = []
    for j, s in enumerate(fc.pivots, start=1):
        # [x_1..x_j, y_1..y_j] -> [x_1..x_{j+1}, y_1..y_{j+1}]
        n = 2 * j
        picks = [j - 1, 2 * j - 1] + list(range(j - 1)) + list(range(j, 2 * j - 1))
        # parallel out: [x_j, x_{j+1}, y_j, y_{j+1}, x_1..x_{j-1}, y_1..y_{j-1}]
        xs = list(range(4, 4 + j - 1)) + [0, 1]
        ys = list(range(4 + j - 1, 4 + 2 * (j - 1))) + [2, 3]
        stages.append(_stage(selection(n, picks, dtype),
                             [fold_unit(s, dtype), fold_unit(s, dtype), _carry(n - 2, dtype)],
                             selection(n + 2, xs + ys, dtype)))
    # [x_1..x_{L+1}, y_1..y_{L+1}] -> [w=0, x_1..x_{L+1}, y_1..y_L]
    n = 2 * (L + 1)
    stages.append(_affine(1 + (L + 1) + L, n, [(1 + t, t, 1.0) for t in range(L + 1)]
                          + [(2 + L + t, L + 1 + t, 1.0) for t in range(L)], dtype=dtype))
    for j in range(L, 0, -1):
        s = fc.pivots[j - 1]
        k = mul_constants(s)
        # state [w, x_1..x_{j+1}, y_1..y_j]; y-conditional uses other = x_{j+1}
        xi = lambda t: 1 + (t - 1)  # noqa: E731
        yi = lambda t: 1 + (j + 1) + (t - 1)  # noqa: E731
        keep = [xi(t) for t in range(1, j + 1)] + [yi(t) for t in range(1, j)]
        st = _bilinear_unfold_stage(1 + (j + 1) + j, yi(j), xi(j + 1), 0, keep, s, k, dtype)
        # out [w', y_j, x_1..x_j, y_1..y_{j-1}] -> [w', x_1..x_j, y_1..y_j]
        order = [0] + list(range(2, 2 + j)) + list(range(2 + j, 2 + j + j - 1)) + [1]
        stages.append(chain([st, selection(1 + 2 * j, order, dtype)]))
        # state [w, x_1..x_j, y_1..y_j]; x-conditional uses other = y_j
        xi2 = lambda t: 1 + (t - 1)  # noqa: E731
        yi2 = lambda t: 1 + j + (t - 1)  # noqa: E731
        keep = [xi2(t) for t in range(1, j)] + [yi2(t) for t in range(1, j)]
        st = _bilinear_unfold_stage(1 + 2 * j, xi2(j), yi2(j), 0, keep, s, k, dtype)
        # out [w'', x_j, x_1..x_{j-1}, y_1..y_{j-1}] -> [w'', x_1..x_j, y_1..y_{j-1}]
        order = [0] + list(range(2, 2 + j - 1)) + [1] + list(range(2 + j - 1, 2 + 2 * (j - 1)))
        stages.append(chain([st, selection(1 + j + (j - 1), order, dtype)]))
    stages.append(selection(2, [0], dtype))  # drop x_1
    return chain(stages).with_metadata(constructor="mul", L=L)


def build_mul_x_only(L: int, dtype=np.float64) -> ReluNetwork:
    """``(x, y) -> ~xy`` folding only ``x``; zero base case, error ``O(2**-L)``."""
    fc = FoldChain.dyadic(L, "zero")
    parts = [fold_phase(fc, n_extra=1, dtype=dtype)]
    # [x_1..x_{L+1}, y] -> [w=0, x_1..x_L, y]
    parts.append(_affine(1 + L + 1, L + 2, [(1 + t, t, 1.0) for t in range(L)] + [(L + 1, L + 1, 1.0)], dtype=dtype))
    k = CrossingConstants(4.0, 4.0)
    for j in range(L, 0, -1):
        s = fc.pivots[j - 1]
        # state [w, x_1..x_j, y]
        keep = list(range(1, j)) + [j + 1]
        st = _bilinear_unfold_stage(j + 2, j, j + 1, 0, keep, s, k, dtype)
        # out [w', x_j, x_1..x_{j-1}, y] -> [w', x_1..x_{j-1}, y]
        parts.append(chain([st, selection(2 + j, [0] + list(range(2, 2 + j)), dtype)]))
    parts.append(selection(2, [0], dtype))  # drop y
    return chain(parts).with_metadata(constructor="mul-x-only", L=L)
