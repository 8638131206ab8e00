"""Compile continuous if-then-else statements into a single ReLU layer.

Inputs to a compiled branch are the values ``a`` (condition), ``b`` (then
value) and ``c`` (else value), each read from an index of the layer input.
The then-branch is taken where ``a >= 0`` (``where a <= 0`` when
``then_sign == -1``).  ``v*`` is the common value of ``b`` and ``c`` where
the condition switches; callers assert it, nothing here can check it.

Two constructions are offered:

* sign reversal, for ``b - v*`` and ``c - v*`` that themselves change sign
  at the switch point (two neurons);
* crossing constants ``beta, gamma > 0`` such that ``beta*a - (b - v*)`` and
  ``gamma*a - (c - v*)`` change sign at the switch point (two neurons per
  branch plus ``relu(a)``, ``relu(-a)`` shared by all branches on ``a``).

The flags ``sign_b``/``sign_c`` give the sign of ``beta*a - b_hat`` and
``gamma*a - c_hat`` on the then-side; the reference case is ``(+1, +1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .network import ReluNetwork
from .sparse import SparseAffineMap, SparseMatrix


def _sign(s: int) -> int:
    if s not in (1, -1):
        raise ValueError(f"sign flag must be +1 or -1, got {s!r}")
    return s


@dataclass(frozen=True)
class CrossingConstants:
    beta: float
    gamma: float
    sign_b: int = 1
    sign_c: int = 1

    def __post_init__(self):
        if not (self.beta > 0 and self.gamma > 0):
            raise ValueError("crossing constants must be positive")
        _sign(self.sign_b)
        _sign(self.sign_c)


@dataclass(frozen=True)
class BranchSpec:
    """Where the operands of one conditional live in the layer input.

    ``value_terms`` lets the switch value depend affinely on other inputs:
    ``v* = value + sum(coef * x[idx])``.  Bivariate unfolds need this.
    """

    condition: int | None
    then: int
    otherwise: int
    value: float = 0.0
    then_sign: int = 1
    value_terms: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        _sign(self.then_sign)
        idx = [self.then, self.otherwise] + ([self.condition] if self.condition is not None else [])
        if len(set(idx)) != len(idx):
            raise ValueError("condition, then and else inputs must be distinct")
        if min(idx) < 0:
            raise ValueError("input indices must be non-negative")
        object.__setattr__(self, "value_terms", tuple((int(i), float(c)) for i, c in self.value_terms))

    def max_index(self) -> int:
        idx = [self.then, self.otherwise] + [i for i, _ in self.value_terms]
        if self.condition is not None:
            idx.append(self.condition)
        return max(idx)


@dataclass(frozen=True)
class Branch:
    """One output of a multi-branch layer sharing a condition."""

    then: int
    otherwise: int
    constants: CrossingConstants
    value: float = 0.0
    value_terms: tuple[tuple[int, float], ...] = field(default=())


class _Rows:
    """Accumulates sparse rows for a hidden layer and its read-out."""

    def __init__(self):
        self.entries: list[tuple[int, int, float]] = []
        self.bias: list[float] = []

    def add(self, terms: dict[int, float], const: float) -> int:
        r = len(self.bias)
        self.entries.extend((r, c, v) for c, v in terms.items() if v != 0.0)
        self.bias.append(const)
        return r

    def to_map(self, cols: int, dtype) -> SparseAffineMap:
        w = SparseMatrix.from_entries(len(self.bias), cols, self.entries, dtype=dtype)
        return SparseAffineMap(w, np.asarray(self.bias))


def _axpy(terms: dict[int, float], idx: int, coef: float) -> None:
    terms[idx] = terms.get(idx, 0.0) + coef


def compile_minmax(dtype=np.float64) -> ReluNetwork:
    """Comparison element ``(x, y) -> (min, max)`` with zero biases."""
    a2 = SparseMatrix.from_dense([[1, -1], [-1, 1], [0, 1], [0, -1]], dtype=dtype)
    a1 = SparseMatrix.from_dense([[0, -1, 1, -1], [1, 0, 1, -1]], dtype=dtype)
    return ReluNetwork(
        (SparseAffineMap.linear(a2), SparseAffineMap.linear(a1)),
        {"constructor": "minmax"},
    )


def compile_sign_reversal(
    spec: BranchSpec,
    sign_b: int = 1,
    sign_c: int = 1,
    n_inputs: int | None = None,
    dtype=np.float64,
) -> ReluNetwork:
    """``v* + sign_b*relu(sign_b*(b - v*)) + sign_c*relu(sign_c*(c - v*))``.

    ``sign_b`` is the sign of ``b - v*`` where the then-branch is active and
    ``sign_c`` the sign of ``c - v*`` where the else-branch is active.
    """
    sb, sc = _sign(sign_b), _sign(sign_c)
    n = n_inputs if n_inputs is not None else spec.max_index() + 1
    hidden, out = _Rows(), _Rows()
    vterms = dict(spec.value_terms)
    pre_b = {spec.then: 1.0}
    pre_c = {spec.otherwise: 1.0}
    for i, coef in vterms.items():
        _axpy(pre_b, i, -coef)
        _axpy(pre_c, i, -coef)
    hb = hidden.add({i: sb * v for i, v in pre_b.items()}, -sb * spec.value)
    hc = hidden.add({i: sc * v for i, v in pre_c.items()}, -sc * spec.value)
    read = {hb: float(sb), hc: float(sc)}
    for i, coef in vterms.items():
        p = hidden.add({i: 1.0}, 0.0)
        m = hidden.add({i: -1.0}, 0.0)
        read[p], read[m] = coef, -coef
    out.add(read, spec.value)
    layers = (hidden.to_map(n, dtype), out.to_map(len(hidden.bias), dtype))
    return ReluNetwork(layers, {"constructor": "sign_reversal"})


def compile_branches(
    n_inputs: int,
    condition: int,
    branches: Sequence[Branch],
    then_sign: int = 1,
    emit_condition: bool = False,
    dtype=np.float64,
) -> ReluNetwork:
    """One hidden layer realising several conditionals on the same ``a``.

    Hidden neurons: ``relu(a), relu(-a)``, then per branch
    ``relu(sb*(beta*a - b + v*))`` and ``relu(sc*(c - v* - gamma*a))``, then
    identity pairs for any inputs ``v*`` depends on.  Outputs are the branch
    results in order, followed by ``a`` itself when ``emit_condition``.
    """
    ts = _sign(then_sign)
    hidden = _Rows()
    a_terms = {condition: float(ts)}
    ha_pos = hidden.add(a_terms, 0.0)
    ha_neg = hidden.add({condition: -float(ts)}, 0.0)

    pair_of: dict[int, tuple[int, int]] = {}
    reads: list[tuple[dict[int, float], float]] = []
    per_branch = []
    for br in branches:
        k = br.constants
        vterms = dict(br.value_terms)
        pre_b = {i: k.beta * v for i, v in a_terms.items()}
        _axpy(pre_b, br.then, -1.0)
        pre_c = {i: -k.gamma * v for i, v in a_terms.items()}
        _axpy(pre_c, br.otherwise, 1.0)
        for i, coef in vterms.items():
            _axpy(pre_b, i, coef)
            _axpy(pre_c, i, -coef)
        sb, sc = k.sign_b, k.sign_c
        hb = hidden.add({i: sb * v for i, v in pre_b.items()}, sb * br.value)
        hc = hidden.add({i: sc * v for i, v in pre_c.items()}, -sc * br.value)
        per_branch.append((br, hb, hc))
        for i in vterms:
            pair_of.setdefault(i, (-1, -1))

    for i in pair_of:
        pair_of[i] = (hidden.add({i: 1.0}, 0.0), hidden.add({i: -1.0}, 0.0))

    for br, hb, hc in per_branch:
        k = br.constants
        read = {hb: -float(k.sign_b), ha_pos: k.beta, hc: float(k.sign_c), ha_neg: -k.gamma}
        for i, coef in br.value_terms:
            p, m = pair_of[i]
            _axpy(read, p, coef)
            _axpy(read, m, -coef)
        reads.append((read, br.value))
    if emit_condition:
        reads.append(({ha_pos: float(ts), ha_neg: -float(ts)}, 0.0))

    out = _Rows()
    for read, const in reads:
        out.add(read, const)
    layers = (hidden.to_map(n_inputs, dtype), out.to_map(len(hidden.bias), dtype))
    return ReluNetwork(layers, {"constructor": "branches", "count": len(branches)})


def compile_crossing(
    spec: BranchSpec,
    k: CrossingConstants,
    n_inputs: int | None = None,
    dtype=np.float64,
) -> ReluNetwork:
    """Single conditional via crossing constants; output is one scalar."""
    if spec.condition is None:
        raise ValueError("compile_crossing needs a condition input")
    n = n_inputs if n_inputs is not None else spec.max_index() + 1
    br = Branch(spec.then, spec.otherwise, k, spec.value, spec.value_terms)
    net = compile_branches(n, spec.condition, [br], then_sign=spec.then_sign, dtype=dtype)
    return net.with_metadata(constructor="crossing")


def hidden_preactivations(net: ReluNetwork, x) -> np.ndarray:
    """Inputs to the first hidden layer's ReLUs (for inspecting on/off patterns)."""
    x = np.asarray(x, dtype=net.dtype)
    if x.ndim == 2:
        return net.layers[0].apply(np.ascontiguousarray(x.T)).T
    return net.layers[0].apply(x)


@dataclass(frozen=True)
class CrossingDiagnostic:
    """Sampled check of the crossing assumption for one branch."""

    then_violations: int
    else_violations: int
    worst_margin: float

    @property
    def ok(self) -> bool:
        return self.then_violations == 0 and self.else_violations == 0


def check_crossing(a, hat, coef: float, sign: int, tol: float = 0.0) -> CrossingDiagnostic:
    """Count samples where ``coef*a - hat`` has the wrong sign.

    ``sign`` is the expected sign on the then-side (``a > 0``); the else-side
    must show the opposite sign.  Samples with ``a == 0`` are ignored.
    ``tol`` tolerates violations of at most that magnitude.
    """
    a = np.asarray(a, dtype=float)
    d = sign * (coef * a - np.asarray(hat, dtype=float))
    then = a > 0
    other = a < 0
    bad_then = then & (d < -tol)
    bad_else = other & (d > tol)
    margins = np.concatenate([d[then], -d[other]])
    worst = float(margins.min()) if margins.size else float("inf")
    return CrossingDiagnostic(int(bad_then.sum()), int(bad_else.sum()), worst)
