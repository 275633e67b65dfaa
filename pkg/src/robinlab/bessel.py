"""Integer-order Bessel functions J_m and I_m by Miller's backward recurrence.

Everything here is vectorised over the argument.  Each column of an input
array may carry its own order, which lets root finders refine thousands of
brackets with different orders in one sweep.

Only ratios are needed by the secular equations, and ratios come straight out
of the unnormalised backward recurrence, so normalisation is applied only when
function values are actually requested.
"""

from __future__ import annotations

import numpy as np

_BIG = 1e250
_TINY_START = 1e-30


def _start_order(max_order: int, max_x: float) -> int:
    top = max(float(max_order), float(max_x), 1.0)
    n = int(top + 20 + np.sqrt(40.0 * top))
    return n + (n % 2)


def _backward(x: np.ndarray, orders: list[np.ndarray], modified: bool):
    """Run the backward recurrence once and pick out values at given orders.

    Parameters
    ----------
    x : (P,) array of positive arguments.
    orders : list of (P,) integer arrays; for each list entry the value of
        order ``orders[i][col]`` is captured for column ``col``.
    modified : use the I-recurrence instead of the J-recurrence.

    Returns
    -------
    picked : list of (P,) arrays, unnormalised but on a common scale per column.
    norm : (P,) array; dividing by it gives J (or e^{-x} I).
    """
    x = np.asarray(x, dtype=float)
    top_order = max(int(o.max()) for o in orders) if orders else 0
    n_start = _start_order(top_order + 1, float(x.max()))
    picked = [np.zeros_like(x) for _ in orders]
    nxt = np.zeros_like(x)
    cur = np.full_like(x, _TINY_START)
    norm = np.zeros_like(x)
    sign = 1.0 if modified else -1.0
    for k in range(n_start, 0, -1):
        # cur holds order k, nxt holds order k+1
        for o, store in zip(orders, picked):
            hit = o == k
            if hit.any():
                store[hit] = cur[hit]
        if modified:
            norm += 2.0 * cur
        elif k % 2 == 0:
            norm += 2.0 * cur
        prev = (2.0 * k / x) * cur + sign * nxt
        nxt, cur = cur, prev
        big = np.abs(cur) > _BIG
        if big.any():
            cur[big] /= _BIG
            nxt[big] /= _BIG
            norm[big] /= _BIG
            for store in picked:
                store[big] /= _BIG
    for o, store in zip(orders, picked):
        hit = o == 0
        if hit.any():
            store[hit] = cur[hit]
    norm += cur
    return picked, norm


def _as_orders(m, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(m, dtype=int), shape).copy()


def jv(m, x) -> np.ndarray:
    """J_m(x) for integer m >= 0 and real x >= 0 (elementwise)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = _as_orders(m, x.shape)
    out = np.where(m == 0, 1.0, 0.0)
    pos = x > 0
    if pos.any():
        (vals,), norm = _backward(x[pos], [m[pos]], modified=False)
        out[pos] = vals / norm
    return out


def jv_table(max_order: int, x) -> np.ndarray:
    """Table of J_0..J_max_order at each x; shape (max_order+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("jv_table expects strictly positive arguments")
    orders = [np.full(x.shape, k, dtype=int) for k in range(max_order + 1)]
    vals, norm = _backward(x, orders, modified=False)
    return np.array(vals) / norm


def ive(m, x) -> np.ndarray:
    """Exponentially scaled e^{-x} I_m(x) for integer m >= 0, x >= 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = _as_orders(m, x.shape)
    out = np.where(m == 0, 1.0, 0.0)
    pos = x > 0
    if pos.any():
        (vals,), norm = _backward(x[pos], [m[pos]], modified=True)
        out[pos] = vals / norm
    return out


def j_log_derivative(m, x) -> np.ndarray:
    """q = x J_m'(x) / J_m(x), computed as x J_{m-1}/J_m - m.

    For m = 0 this uses J_{-1} = -J_1.  Undefined at zeros of J_m, where the
    result is +-inf or nan.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = _as_orders(m, x.shape)
    lower = np.where(m == 0, 1, m - 1)
    (vm, vlow), _ = _backward(x, [m, lower], modified=False)
    vlow = np.where(m == 0, -vlow, vlow)
    with np.errstate(divide="ignore", invalid="ignore"):
        return x * vlow / vm - m


def i_log_derivative(m, x) -> np.ndarray:
    """p = x I_m'(x) / I_m(x), computed as x I_{m+1}/I_m + m.  Increasing in x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = _as_orders(m, x.shape)
    (vm, vup), _ = _backward(x, [m, m + 1], modified=True)
    return x * vup / vm + m


def bessel_zeros(m: int, upper: float, step: float = 0.4) -> np.ndarray:
    """All positive zeros of J_m below ``upper``, in increasing order.

    Consecutive zeros of J_m are more than 2.9 apart for every m >= 0, so a
    sign-change grid with spacing ``step`` isolates each zero in its own cell.
    The cells are then refined by bisection to full precision.
    """
    if upper <= m:
        return np.empty(0)
    grid = np.arange(max(float(m), step), upper + step, step)
    vals = jv(m, grid)
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    exact = np.nonzero(vals == 0.0)[0]
    if exact.size:
        raise ArithmeticError(f"grid point hit a zero of J_{m} exactly at {grid[exact[0]]}")
    lo, hi = grid[idx].copy(), grid[idx + 1].copy()
    roots = bisect_vectorized(lambda z: jv(m, z), lo, hi)
    return roots[roots < upper]


def bisect_vectorized(f, lo, hi, max_iter: int = 200) -> np.ndarray:
    """Bisection on many brackets at once; each bracket must have a sign change.

    Stops when every bracket has collapsed to adjacent floating point numbers.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    flo = f(lo)
    fhi = f(hi)
    bad = np.sign(flo) * np.sign(fhi) > 0
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        raise ArithmeticError(f"bracket [{lo[i]!r}, {hi[i]!r}] has no sign change")
    slo = np.sign(flo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        fm = f(mid)
        go_right = np.sign(fm) == slo
        lo = np.where(active & go_right, mid, lo)
        hi = np.where(active & ~go_right, mid, hi)
    return 0.5 * (lo + hi)
