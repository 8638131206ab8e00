"""Error sweeps: compiled network vs. oracle vs. exact target on a uniform grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from . import fold, oracle
from .fold import InitMode
from .network import ReluNetwork


@dataclass(frozen=True)
class SweepTarget:
    """Everything a sweep needs to know about one constructor."""

    name: str
    n_inputs: int
    components: tuple[str, ...]
    inits: tuple[InitMode, ...]
    domain: Callable[[Mapping[str, Any]], tuple[float, float]]
    build: Callable[..., ReluNetwork]
    oracle: Callable[..., np.ndarray]
    exact: Callable[..., np.ndarray]

    @property
    def default_init(self) -> InitMode:
        return self.inits[0]


def _col(*arrs):
    return np.stack(arrs, axis=-1)


def _nparams(p):
    return {k: v for k, v in p.items() if k in ("d", "s")}


TARGETS: dict[str, SweepTarget] = {}


def _register(t: SweepTarget) -> None:
    TARGETS[t.name] = t


_register(SweepTarget(
    "square", 1, ("x^2",), (InitMode.ZERO, InitMode.INTERPOLATING), lambda p: (0.0, 1.0),
    lambda L, init, dtype, **p: fold.build_square_folding(L, init, dtype),
    lambda X, L, init, dtype, **p: oracle.oracle_square(X[:, 0], L, init, dtype)[:, None],
    lambda X, **p: X[:, :1] ** 2,
))
_register(SweepTarget(
    "square-telgarsky", 1, ("x^2",), (InitMode.ZERO,), lambda p: (0.0, 1.0),
    lambda L, init, dtype, **p: fold.build_square_telgarsky(L, dtype),
    lambda X, L, init, dtype, **p: oracle.oracle_square_telgarsky(X[:, 0], L, dtype)[:, None],
    lambda X, **p: X[:, :1] ** 2,
))
_register(SweepTarget(
    "exp", 1, ("exp(x)", "exp(-x)"), (InitMode.TAYLOR, InitMode.INTERPOLATING), lambda p: (0.0, 1.0),
    lambda L, init, dtype, **p: fold.build_exp_pair(L, init, dtype),
    lambda X, L, init, dtype, **p: _col(*oracle.oracle_exp(X[:, 0], L, init, dtype)),
    lambda X, **p: _col(np.exp(X[:, 0]), np.exp(-X[:, 0])),
))
_register(SweepTarget(
    "sincos", 1, ("cos(x)", "sin(x)"), (InitMode.TAYLOR, InitMode.INTERPOLATING), lambda p: (0.0, math.pi),
    lambda L, init, dtype, **p: fold.build_sincos_pair(L, init, dtype),
    lambda X, L, init, dtype, **p: _col(*oracle.oracle_sincos(X[:, 0], L, init, dtype)),
    lambda X, **p: _col(np.cos(X[:, 0]), np.sin(X[:, 0])),
))
_register(SweepTarget(
    "periodic-cos", 1, ("cos(x)",), (InitMode.INTERPOLATING, InitMode.TAYLOR),
    lambda p: (0.0, math.pi * 2 ** p.get("s", 1)),
    lambda L, init, dtype, s=1, **p: fold.build_periodic_cos(L, s, init, dtype),
    lambda X, L, init, dtype, s=1, **p: oracle.oracle_periodic_cos(X[:, 0], L, s, init, dtype)[:, None],
    lambda X, **p: np.cos(X[:, :1]),
))
_register(SweepTarget(
    "monomials", 1, (), (InitMode.INTERPOLATING, InitMode.TAYLOR), lambda p: (0.0, 1.0),
    lambda L, init, dtype, d=10, **p: fold.build_monomials(d, L, init, dtype),
    lambda X, L, init, dtype, d=10, **p: oracle.oracle_monomials(X[:, 0], d, L, init, dtype),
    lambda X, d=10, **p: X[:, :1] ** np.arange(d + 1),
))
_register(SweepTarget(
    "mul", 2, ("xy",), (InitMode.ZERO,), lambda p: (0.0, 1.0),
    lambda L, init, dtype, **p: fold.build_mul(L, dtype),
    lambda X, L, init, dtype, **p: oracle.oracle_mul(X[:, 0], X[:, 1], L, dtype)[:, None],
    lambda X, **p: X[:, :1] * X[:, 1:2],
))
_register(SweepTarget(
    "mul-x-only", 2, ("xy",), (InitMode.ZERO,), lambda p: (0.0, 1.0),
    lambda L, init, dtype, **p: fold.build_mul_x_only(L, dtype),
    lambda X, L, init, dtype, **p: oracle.oracle_mul_x_only(X[:, 0], X[:, 1], L, dtype)[:, None],
    lambda X, **p: X[:, :1] * X[:, 1:2],
))


def get_target(name: str) -> SweepTarget:
    try:
        return TARGETS[name]
    except KeyError:
        raise ValueError(f"unknown constructor {name!r}; choose from {', '.join(sorted(TARGETS))}") from None


def component_names(t: SweepTarget, params: Mapping[str, Any]) -> tuple[str, ...]:
    if t.name == "monomials":
        return tuple(f"x^{k}" for k in range(params.get("d", 10) + 1))
    return t.components


def make_grid(t: SweepTarget, grid: int, params: Mapping[str, Any] | None = None) -> np.ndarray:
    """Uniform grid including both domain endpoints; 2-D targets get the tensor grid."""
    if grid < 2:
        raise ValueError("grid needs at least 2 points")
    lo, hi = t.domain(params or {})
    g = np.linspace(lo, hi, grid)
    if t.n_inputs == 1:
        return g[:, None]
    X, Y = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


@dataclass
class SweepPoints:
    X: np.ndarray
    err_net: np.ndarray
    err_oracle: np.ndarray
    net_vs_oracle: np.ndarray


@dataclass
class ErrorSweepReport:
    """Per-level maximum errors, per component, plus per-point data for kept levels.

    ``ulps`` is ``|network - oracle|`` in units of the spacing at the largest
    oracle magnitude of that component on the grid.
    """

    constructor: str
    L_values: tuple[int, ...]
    grid: int
    init: InitMode
    dtype: str
    oracle_dtype: str
    components: tuple[str, ...]
    params: dict = field(default_factory=dict)
    max_err_net: dict[int, np.ndarray] = field(default_factory=dict)
    max_err_oracle: dict[int, np.ndarray] = field(default_factory=dict)
    max_net_vs_oracle: dict[int, np.ndarray] = field(default_factory=dict)
    ulps: dict[int, np.ndarray] = field(default_factory=dict)
    points: dict[int, SweepPoints] = field(default_factory=dict)

    def max_error(self, L: int) -> float:
        return float(np.max(self.max_err_net[L]))

    def max_ulps(self, L: int) -> float:
        return float(np.max(self.ulps[L]))

    def summary_rows(self) -> list[dict]:
        rows = []
        for L in self.L_values:
            for c, name in enumerate(self.components):
                rows.append({
                    "L": L,
                    "component": name,
                    "max_err_net": float(self.max_err_net[L][c]),
                    "max_err_oracle": float(self.max_err_oracle[L][c]),
                    "max_net_vs_oracle": float(self.max_net_vs_oracle[L][c]),
                    "ulps": float(self.ulps[L][c]),
                })
        return rows

    def point_rows(self) -> Iterable[dict]:
        two_d = self.points and next(iter(self.points.values())).X.shape[1] == 2
        multi = len(self.components) > 1
        for L, pts in self.points.items():
            for c, name in enumerate(self.components):
                for i in range(pts.X.shape[0]):
                    row = {"L": L}
                    if multi:
                        row["component"] = name
                    row["x"] = repr(float(pts.X[i, 0]))
                    if two_d:
                        row["y"] = repr(float(pts.X[i, 1]))
                    row["err_net"] = repr(float(pts.err_net[i, c]))
                    row["err_oracle"] = repr(float(pts.err_oracle[i, c]))
                    row["net_vs_oracle"] = repr(float(pts.net_vs_oracle[i, c]))
                    yield row

    def write_csv(self, fh) -> None:
        rows = iter(self.point_rows())
        first = next(rows, None)
        cols = list(first) if first else ["L", "x", "err_net", "err_oracle", "net_vs_oracle"]
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        if first:
            w.writerow(first)
            w.writerows(rows)


def error_sweep(
    constructor: str,
    L_range: Iterable[int],
    grid: int | None = None,
    init=None,
    target: Callable[[np.ndarray], np.ndarray] | None = None,
    dtype=np.float64,
    oracle_dtype=None,
    keep_points: bool | Iterable[int] = True,
    **params,
) -> ErrorSweepReport:
    """Evaluate network, oracle and target on a uniform grid for each ``L``.

    ``grid`` defaults to 10001 points (101 per axis for two-input targets).
    ``oracle_dtype`` lets the oracle run at a wider precision than the
    network; errors are always measured in float64 or wider.
    """
    t = get_target(constructor)
    init = InitMode.parse(init) if init is not None else t.default_init
    if init not in t.inits:
        raise ValueError(f"{constructor} does not support init {init.value!r}")
    grid = grid if grid is not None else (10001 if t.n_inputs == 1 else 101)
    dtype = np.dtype(dtype)
    odt = np.dtype(oracle_dtype) if oracle_dtype is not None else dtype
    Ls = tuple(int(L) for L in L_range)
    keep = set(Ls) if keep_points is True else set() if keep_points is False else set(keep_points)

    X = make_grid(t, grid, params)
    wide = np.promote_types(odt, np.float64)
    Xw = X.astype(wide)
    exact = (target(Xw) if target is not None else t.exact(Xw, **_nparams(params))).reshape(len(X), -1)
    comps = component_names(t, params)
    rep = ErrorSweepReport(constructor, Ls, grid, init, dtype.name, odt.name, comps, dict(params))
    for L in Ls:
        net = t.build(L, init, dtype, **_nparams(params))
        y_net = net.forward(X.astype(dtype)).astype(wide).reshape(len(X), -1)
        y_orc = np.asarray(t.oracle(X.astype(odt), L, init, odt, **_nparams(params))).astype(wide).reshape(len(X), -1)
        e_net, e_orc, dev = np.abs(exact - y_net), np.abs(exact - y_orc), np.abs(y_net - y_orc)
        rep.max_err_net[L] = e_net.max(axis=0).astype(float)
        rep.max_err_oracle[L] = e_orc.max(axis=0).astype(float)
        rep.max_net_vs_oracle[L] = dev.max(axis=0).astype(float)
        scale = np.spacing(np.abs(y_orc).max(axis=0).astype(dtype)).astype(float)
        rep.ulps[L] = rep.max_net_vs_oracle[L] / scale
        if L in keep:
            rep.points[L] = SweepPoints(X, e_net.astype(float), e_orc.astype(float), dev.astype(float))
    return rep
