"""Small 1-D search routines shared by the solvers."""

import math

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQ = (3 - math.sqrt(5)) / 2


def golden_section_min(f, a, b, tol=1e-10, max_iter=200):
    """Golden-section search for a minimum of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x))`` for the best point visited.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    best_x, best_f = a, f(a)
    fb = f(b)
    if fb < best_f:
        best_x, best_f = b, fb
    if h <= tol:
        return best_x, best_f

    c = a + INV_PHI_SQ * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(max_iter):
        if h <= tol:
            break
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQ * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
    for x, y in ((c, yc), (d, yd)):
        if y < best_f:
            best_x, best_f = x, y
    return best_x, best_f


def grid_then_golden(f, grid, tol=1e-10, n_starts=1):
    """Minimize ``f`` over a sorted grid, then polish around the best grid points.

    ``n_starts`` local minima of the grid profile are refined; the overall best
    point is returned as ``(x, f(x))``.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.array([f(x) for x in grid])
    return refine_grid_minimum(f, grid, values, tol=tol, n_starts=n_starts)


def refine_grid_minimum(f, grid, values, tol=1e-10, n_starts=1):
    values = np.where(np.isnan(values), np.inf, values)
    order = _local_minima(values)[:n_starts]
    best_x, best_f = grid[int(np.argmin(values))], float(np.min(values))
    if not np.isfinite(best_f):
        return best_x, best_f
    for k in order:
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, len(grid) - 1)]
        x, fx = golden_section_min(f, lo, hi, tol=tol)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def _local_minima(values):
    n = len(values)
    idx = []
    for k in range(n):
        left = values[k - 1] if k > 0 else np.inf
        right = values[k + 1] if k < n - 1 else np.inf
        if values[k] <= left and values[k] <= right and np.isfinite(values[k]):
            idx.append(k)
    idx.sort(key=lambda k: values[k])
    return idx


def solve_decreasing(fun, lo, hi, tol=1e-14, max_iter=100):
    """Vectorized safeguarded Newton for roots of decreasing functions.

    ``fun(x)`` returns ``(value, derivative)`` arrays. Each root must be
    bracketed: ``value(lo) > 0 > value(hi)``. Newton steps leaving the current
    bracket fall back to bisection.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        val, der = fun(x)
        pos = val > 0
        lo = np.where(pos, x, lo)
        hi = np.where(pos, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - val / der
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        x_new = np.where(ok, newton, 0.5 * (lo + hi))
        x_new = np.where(val == 0, x, x_new)
        done = np.abs(x_new - x) <= tol * (1.0 + np.abs(x))
        x = x_new
        if np.all(done):
            break
    return x
