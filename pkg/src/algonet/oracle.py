"""Network-free reference implementations of every compiled algorithm.

These are literal recursions: level ``j`` folds at its pivot, recurses, and
picks a branch.  They are vectorised over the input with ``np.where`` and
take the then-branch on ``x >= pivot``; both branches agree at the pivot, so
this only removes sensitivity to exact hits on dyadic grid points.
"""

from __future__ import annotations

import math

import numpy as np

from .fold import InitMode


def _arr(x, dtype):
    return np.asarray(x, dtype=dtype)


def _fold(x, pivot):
    return pivot - np.abs(x - pivot)


def _check_level(L: int) -> None:
    if L < 1:
        raise ValueError("need L >= 1")


# -- sorting -------------------------------------------------------------------------


def oracle_bitonic_sort(x) -> np.ndarray:
    """Bitonic sort of a copy of ``x`` along its last axis (length a power of two).

    Leading axes are independent vectors sorted side by side.
    """
    x = np.array(x, dtype=float)
    N = x.shape[-1] if x.ndim else 0
    if N < 1 or N & (N - 1):
        raise ValueError(f"bitonic sort needs a power-of-two length, got {N}")
    L = N.bit_length() - 1
    for i in range(1, L + 1):
        for j in range(i - 1, -1, -1):
            for k in range(N):
                l = k ^ (1 << j)
                if l > k:
                    lo = np.minimum(x[..., k], x[..., l])
                    hi = np.maximum(x[..., k], x[..., l])
                    if (k & (1 << i)) == 0:
                        x[..., k], x[..., l] = lo, hi
                    else:
                        x[..., k], x[..., l] = hi, lo
    return x


# -- x^2 -----------------------------------------------------------------------------


def oracle_square(x, L: int, init="zero", dtype=np.float64):
    """Fold/unfold approximation of ``x^2`` on [0, 1]."""
    _check_level(L)
    init = InitMode.parse(init)
    t = np.dtype(dtype).type
    x = _arr(x, dtype)

    def rec(x, j):
        if j == L + 1:
            if init is InitMode.INTERPOLATING:
                return x * t(2.0**-L)
            return np.zeros_like(x)
        pivot = t(2.0**-j)
        z = rec(_fold(x, pivot), j + 1)
        return np.where(x >= pivot, z + 4 * pivot * x - 4 * pivot * pivot, z)

    return rec(x, 1)


def oracle_hat(x, dtype=np.float64):
    x = _arr(x, dtype)
    return 2 * np.maximum(x, 0) - 4 * np.maximum(x - 0.5, 0) + 2 * np.maximum(x - 1, 0)


def oracle_sawtooth(x, s: int, dtype=np.float64):
    y = _arr(x, dtype)
    for _ in range(s):
        y = oracle_hat(y, dtype)
    return y


def oracle_square_telgarsky(x, L: int, dtype=np.float64):
    """``x - sum_{s=1..L} 4**-s g_s(x)`` evaluated directly."""
    _check_level(L)
    t = np.dtype(dtype).type
    x = _arr(x, dtype)
    out, g = x.copy(), x
    for s in range(1, L + 1):
        g = oracle_hat(g, dtype)
        out = out - t(4.0**-s) * g
    return out


# -- exp and trig ------------------------------------------------------------------


def oracle_exp(x, L: int, init="taylor", dtype=np.float64):
    """``(~e^x, ~e^-x)`` on [0, 1]; returns a pair of arrays."""
    _check_level(L)
    init = InitMode.parse(init)
    t = np.dtype(dtype).type
    x = _arr(x, dtype)
    w = 2.0**-L
    if init is InitMode.TAYLOR:
        base = lambda x: (1 + x, 1 - x)  # noqa: E731
    elif init is InitMode.INTERPOLATING:
        c1, c2 = t((math.exp(w) - 1) / w), t((math.exp(-w) - 1) / w)
        base = lambda x: (1 + c1 * x, 1 + c2 * x)  # noqa: E731
    else:
        raise ValueError("exp supports taylor or interpolating init")

    def rec(x, j):
        if j == L + 1:
            return base(x)
        pivot = 2.0**-j
        z1, z2 = rec(_fold(x, t(pivot)), j + 1)
        up = x >= t(pivot)
        return (np.where(up, t(math.exp(2 * pivot)) * z2, z1),
                np.where(up, t(math.exp(-2 * pivot)) * z1, z2))

    return rec(x, 1)


def oracle_sincos(x, L: int, init="taylor", dtype=np.float64):
    """``(~cos x, ~sin x)`` on [0, pi]."""
    _check_level(L)
    init = InitMode.parse(init)
    t = np.dtype(dtype).type
    x = _arr(x, dtype)
    w = math.pi * 2.0**-L
    if init is InitMode.TAYLOR:
        base = lambda x: (np.ones_like(x), x)  # noqa: E731
    elif init is InitMode.INTERPOLATING:
        c1, c2 = t((math.cos(w) - 1) / w), t(math.sin(w) / w)
        base = lambda x: (1 + c1 * x, c2 * x)  # noqa: E731
    else:
        raise ValueError("sincos supports taylor or interpolating init")

    def rec(x, j):
        if j == L + 1:
            return base(x)
        pivot = math.pi * 2.0**-j
        z1, z2 = rec(_fold(x, t(pivot)), j + 1)
        c, s = t(math.cos(2 * pivot)), t(math.sin(2 * pivot))
        up = x >= t(pivot)
        return (np.where(up, c * z1 + s * z2, z1), np.where(up, s * z1 - c * z2, z2))

    return rec(x, 1)


def oracle_periodic_cos(x, L: int, s: int, init="interpolating", dtype=np.float64):
    """``cos`` on ``[0, pi 2**s]``: ``s`` reflections at ``pi 2**(s-1), ..., pi``, then the base pair."""
    t = np.dtype(dtype).type
    u = _arr(x, dtype)
    for i in range(s - 1, -1, -1):
        p = t(math.pi * 2**i)
        u = np.maximum(u, 0) - 2 * np.maximum(u - p, 0) + np.maximum(u - 2 * p, 0)
    return oracle_sincos(u, L, init, dtype)[0]


# -- monomials -----------------------------------------------------------------------


def oracle_monomials(x, d: int, L: int, init="interpolating", dtype=np.float64) -> np.ndarray:
    """Approximations of ``(1, x, ..., x^d)``; shape ``x.shape + (d + 1,)``.

    Base case ``x_L^k * x / x_L`` for ``k >= 1`` and ``1`` for ``k = 0``.
    """
    _check_level(L)
    if d < 2:
        raise ValueError("need degree d >= 2")
    init = InitMode.parse(init)
    t = np.dtype(dtype).type
    x = _arr(x, dtype)
    xL = 2.0**-L

    def base(x):
        u = [np.ones_like(x), x.copy()]
        for k in range(2, d + 1):
            u.append(t(xL**k) * x / t(xL) if init is InitMode.INTERPOLATING else np.zeros_like(x))
        return u

    if init not in (InitMode.INTERPOLATING, InitMode.TAYLOR):
        raise ValueError("monomials support interpolating or taylor init")

    def rec(x, j):
        if j == L + 1:
            return base(x)
        pivot = 2.0**-j
        z = rec(_fold(x, t(pivot)), j + 1)
        u = [np.ones_like(x), x.copy()]
        for k in range(2, d + 1):
            uk = t((-1) ** k) * z[k]
            for l in range(k):
                uk = uk - t(math.comb(k, l) * (-1) ** (k + l) * 2 ** (k - l) * pivot ** (k - l)) * u[l]
            u.append(uk)
        up = x >= t(pivot)
        # orders 0 and 1 are known, only higher orders switch branches
        return u[:2] + [np.where(up, a, b) for a, b in zip(u[2:], z[2:])]

    return np.stack(rec(x, 1), axis=-1)


# -- multiplication ----------------------------------------------------------------


def oracle_mul(x, y, L: int, dtype=np.float64):
    """Alternating-fold approximation of ``xy`` on [0, 1]^2 with zero base case."""
    _check_level(L)
    t = np.dtype(dtype).type
    x, y = np.broadcast_arrays(_arr(x, dtype), _arr(y, dtype))

    def mul(x, y, j):
        if j == L + 1:
            return np.zeros_like(x)
        pivot = t(2.0**-j)
        z = mul_y(_fold(x, pivot), y, j)
        return np.where(x >= pivot, 2 * pivot * y - z, z)

    def mul_y(x, y, j):
        pivot = t(2.0**-j)
        z = mul(x, _fold(y, pivot), j + 1)
        return np.where(y >= pivot, 2 * pivot * x - z, z)

    return mul(x, y, 1)


def oracle_mul_x_only(x, y, L: int, dtype=np.float64):
    """Folds only ``x``; zero base case, first-order accurate."""
    _check_level(L)
    t = np.dtype(dtype).type
    x, y = np.broadcast_arrays(_arr(x, dtype), _arr(y, dtype))

    def mul(x, j):
        if j == L + 1:
            return np.zeros_like(x)
        pivot = t(2.0**-j)
        z = mul(_fold(x, pivot), j + 1)
        return np.where(x >= pivot, 2 * pivot * y - z, z)

    return mul(x, 1)
