"""Exact bitonic sorting networks built from min/max comparison elements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import ReluNetwork, chain
from .sparse import SparseAffineMap, SparseMatrix

GENERATOR = "numpy Philox4x64-10"


@dataclass(frozen=True)
class WiringSchedule:
    """Comparator placements per layer: ``(lane_k, lane_l, ascending)`` with ``k < l``."""

    L: int
    layers: tuple[tuple[tuple[int, int, bool], ...], ...]

    @property
    def N(self) -> int:
        return 2**self.L

    def apply(self, x) -> np.ndarray:
        """Run the schedule with ordinary ``min``/``max`` (reference semantics)."""
        x = np.array(x, dtype=float)
        for layer in self.layers:
            for k, l, asc in layer:
                lo, hi = min(x[k], x[l]), max(x[k], x[l])
                x[k], x[l] = (lo, hi) if asc else (hi, lo)
        return x


def bitonic_schedule(L: int) -> WiringSchedule:
    if L < 1:
        raise ValueError("bitonic_schedule needs L >= 1")
    N = 2**L
    layers = []
    for i in range(1, L + 1):
        for j in range(i - 1, -1, -1):
            layer = []
            for k in range(N):
                l = k ^ (1 << j)
                if l > k:
                    layer.append((k, l, (k & (1 << i)) == 0))
            layers.append(tuple(layer))
    return WiringSchedule(L, tuple(layers))


def _comparator_stage(layer, N: int, dtype) -> ReluNetwork:
    # four neurons per comparator: relu(x-y), relu(y-x), relu(y), relu(-y)
    comps = np.array([(k, l, asc) for k, l, asc in layer], dtype=np.int64).reshape(-1, 3)
    ks, ls, asc = comps[:, 0], comps[:, 1], comps[:, 2].astype(bool)
    touched = np.zeros(N, dtype=bool)
    touched[ks] = touched[ls] = True
    passing = np.flatnonzero(~touched)
    m, p = len(ks), len(passing)
    base = 4 * np.arange(m)

    r_in = np.concatenate([base, base, base + 1, base + 1, base + 2, base + 3,
                           4 * m + 2 * np.arange(p), 4 * m + 2 * np.arange(p) + 1])
    c_in = np.concatenate([ks, ls, ks, ls, ls, ls, passing, passing])
    v_in = np.concatenate([np.ones(m), -np.ones(m), -np.ones(m), np.ones(m),
                           np.ones(m), -np.ones(m), np.ones(p), -np.ones(p)])
    hidden = 4 * m + 2 * p
    w_in = SparseMatrix.from_coo(hidden, N, r_in, c_in, v_in, dtype=dtype)

    lo_lane = np.where(asc, ks, ls)
    hi_lane = np.where(asc, ls, ks)
    pb = 4 * m + 2 * np.arange(p)
    r_out = np.concatenate([lo_lane, lo_lane, lo_lane, hi_lane, hi_lane, hi_lane, passing, passing])
    c_out = np.concatenate([base + 1, base + 2, base + 3, base, base + 2, base + 3, pb, pb + 1])
    v_out = np.concatenate([-np.ones(m), np.ones(m), -np.ones(m), np.ones(m), np.ones(m),
                            -np.ones(m), np.ones(p), -np.ones(p)])
    w_out = SparseMatrix.from_coo(N, hidden, r_out, c_out, v_out, dtype=dtype)
    return ReluNetwork((SparseAffineMap.linear(w_in), SparseAffineMap.linear(w_out)))


def build_sorter(L: int, dtype=np.float64) -> ReluNetwork:
    """ReLU network sorting ``N = 2**L`` inputs ascending, exactly."""
    sched = bitonic_schedule(L)
    stages = [_comparator_stage(layer, sched.N, dtype) for layer in sched.layers]
    return chain(stages).with_metadata(constructor="sorter", L=L, N=sched.N)


@dataclass(frozen=True)
class SortVerification:
    L: int
    N: int
    trials: int
    seed: int
    generator: str
    failures: int
    max_deviation: float
    max_deviation_ulps: float
    tolerance_ulps: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def sort_tolerance_ulps(net: ReluNetwork) -> float:
    return 4.0 * net.num_layers


def check_sorted(net: ReluNetwork, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row failure flags and deviations (in ulps of the row's largest magnitude)."""
    X = np.atleast_2d(np.asarray(X, dtype=net.dtype))
    Y = net.forward(X)
    ref = np.sort(X, axis=1)
    scale = np.spacing(np.max(np.abs(X), axis=1)).astype(float)
    scale[scale == 0] = np.finfo(net.dtype).tiny
    dev = np.max(np.abs(Y - ref), axis=1) / scale
    tol = sort_tolerance_ulps(net)
    drops = np.max(np.maximum(Y[:, :-1] - Y[:, 1:], 0.0), axis=1, initial=0.0) / scale
    failed = (dev > tol) | (drops > tol)
    return failed, dev * scale


def verify_sorter(L: int, trials: int, seed: int, net: ReluNetwork | None = None) -> SortVerification:
    """Sort ``trials`` seeded normal vectors and compare with ``numpy.sort``.

    Output must be non-decreasing and match the sorted input to within
    ``4 * num_layers`` ulps of each vector's largest magnitude.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    net = net if net is not None else build_sorter(L)
    rng = np.random.Generator(np.random.Philox(seed))
    X = rng.standard_normal((trials, 2**L))
    failed, dev = check_sorted(net, X)
    scale = np.spacing(np.max(np.abs(X), axis=1))
    return SortVerification(
        L=L,
        N=2**L,
        trials=trials,
        seed=seed,
        generator=GENERATOR,
        failures=int(failed.sum()),
        max_deviation=float(dev.max()),
        max_deviation_ulps=float((dev / scale).max()),
        tolerance_ulps=sort_tolerance_ulps(net),
    )
