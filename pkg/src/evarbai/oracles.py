"""Slow brute-force references for the tests.

Nothing here calls the fast solvers or their numeric helpers: MGFs go
through ``scipy.special.logsumexp`` and KL values are evaluated directly.

Direction of each bound:

* ``evar_grid`` minimizes over a finite set of ``z`` and upper-bounds EVaR.
* ``klinf_primal_grid`` minimizes KL over a finite feasible set of laws and
  upper-bounds the projection.
* ``tmu_grid`` maximizes over a finite set of weights. It would lower-bound
  ``T(mu)`` exactly if the inner values were exact, and is close to one
  otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import logsumexp

Z_LO, Z_HI = 1e-4, 1e4
MAX_GRID_POINTS = 5_000_000
GOLDEN_ITERS = 48
T_CHUNK = 2048


@dataclass(frozen=True)
class GridSpec:
    z_points: int = 100_000
    simplex_step: float = 1 / 2000
    x_points: int = 10_000

    def __post_init__(self):
        if self.z_points < 2 or self.x_points < 2 or not 0 < self.simplex_step <= 0.5:
            raise ValueError("grid sizes must be at least 2")


def _rho(r):
    alpha = getattr(r, "alpha", r)
    return -math.log1p(-alpha)


def _atoms(d):
    return np.asarray(d.locs, dtype=float), np.asarray(d.masses, dtype=float)


def evar_grid(d, r, z_points=100_000):
    """``min(x_max, min_z f(z))`` over ``z_points`` log-spaced ``z`` in ``[1e-4, 1e4]``."""
    if z_points < 100:
        raise ValueError("z_points must be at least 100")
    rho = _rho(r)
    x, m = _atoms(d)
    z = np.geomspace(Z_LO, Z_HI, z_points)
    lm = logsumexp(z[:, None] * x[None, :], b=m[None, :], axis=1)
    return float(min(x.max(), np.min((lm + rho) / z)))


# batched EVaR for many laws on one common support


def _evar_batch(locs, log_masses, rho):
    """EVaR of every row of ``log_masses`` (``-inf`` marks an empty atom)."""
    present = np.isfinite(log_masses)
    x_top = np.max(np.where(present, locs[None, :], -np.inf), axis=1)

    def f(u):
        z = np.exp(u)[:, None]
        return (logsumexp(log_masses + z * locs[None, :], axis=1) + rho) / z[:, 0]

    # f is unimodal in log z: its derivative changes sign once
    a = np.full(len(log_masses), math.log(Z_LO))
    b = np.full(len(log_masses), math.log(Z_HI))
    inv = (math.sqrt(5) - 1) / 2
    c, e = b - inv * (b - a), a + inv * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(GOLDEN_ITERS):
        left = fc < fe
        b = np.where(left, e, b)
        a = np.where(left, a, c)
        # one fresh evaluation per row: the interior point that was not kept
        new_c, new_e = b - inv * (b - a), a + inv * (b - a)
        fresh = f(np.where(left, new_c, new_e))
        c, e, fc, fe = (np.where(left, new_c, e), np.where(left, c, new_e),
                        np.where(left, fresh, fe), np.where(left, fc, fresh))
    ends = np.minimum(f(np.full_like(a, math.log(Z_LO))), f(np.full_like(a, math.log(Z_HI))))
    return np.minimum(np.minimum(np.minimum(fc, fe), ends), x_top)


def _simplex_grid(m, n):
    """All mass vectors on ``m`` atoms with entries in ``{0, 1/n, ..., 1}``."""
    count = math.comb(n + m - 1, m - 1)
    if count > MAX_GRID_POINTS:
        raise ValueError(f"simplex grid with {count} points is too large")
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        i = np.arange(n + 1)
        return np.stack([i, n - i], axis=1) / n
    if m == 3:
        i, j = np.triu_indices(n + 1)
        # pairs 0 <= i <= j <= n give the cut points of a 3-part composition
        return np.stack([i, j - i, n - j], axis=1) / n
    rows = [c for c in product(range(n + 1), repeat=m - 1) if sum(c) <= n]
    arr = np.array(rows)
    return np.concatenate([arr, n - arr.sum(axis=1, keepdims=True)], axis=1) / n


class PrimalGridTable:
    """Every law on a fixed support with masses on a ``1/n`` grid, with its EVaR."""

    def __init__(self, support, alpha, step):
        self.locs = np.array(sorted(set(float(x) for x in support)))
        n = round(1.0 / step)
        if abs(n * step - 1.0) > 1e-9:
            raise ValueError("simplex_step must be 1/n")
        self.masses = _simplex_grid(len(self.locs), n)
        rho = _rho(alpha)
        with np.errstate(divide="ignore"):
            logm = np.log(self.masses)
        chunks = [_evar_batch(self.locs, logm[k:k + 200_000], rho)
                  for k in range(0, len(logm), 200_000)]
        self.evars = np.concatenate(chunks)
        self._order = np.argsort(self.evars, kind="stable")
        self._sorted_evars = self.evars[self._order]

    def kl_from(self, eta):
        """``KL(eta || kappa)`` for every grid law ``kappa``."""
        x, m = _atoms(eta)
        idx = np.searchsorted(self.locs, x)
        idx = np.clip(idx, 0, len(self.locs) - 1)
        if not np.allclose(self.locs[idx], x, atol=1e-12):
            raise ValueError("eta is not supported on the table support")
        k = self.masses[:, idx]
        with np.errstate(divide="ignore"):
            terms = np.where(k > 0, m[None, :] * np.log(m[None, :] / np.where(k > 0, k, 1.0)),
                             np.inf)
        return terms.sum(axis=1)

    def profile(self, eta, side):
        """Sorted EVaRs and the matching running minimum of the KL values.

        For ``side="upper"`` entry ``i`` is the best value over laws with EVaR at
        least ``sorted_evars[i]``; for ``"lower"`` at most.
        """
        kl = self.kl_from(eta)[self._order]
        if side == "upper":
            best = np.minimum.accumulate(kl[::-1])[::-1]
        elif side == "lower":
            best = np.minimum.accumulate(kl)
        else:
            raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
        return self._sorted_evars, best

    def query(self, eta, nus, side):
        ev, best = self.profile(eta, side)
        nus = np.atleast_1d(np.asarray(nus, dtype=float))
        out = np.full(nus.shape, np.inf)
        if side == "upper":
            i = np.searchsorted(ev, nus, side="left")
            ok = i < len(ev)
            out[ok] = best[i[ok]]
        else:
            i = np.searchsorted(ev, nus, side="right") - 1
            ok = i >= 0
            out[ok] = best[i[ok]]
        return out


@lru_cache(maxsize=16)
def primal_table(support, alpha, step):
    return PrimalGridTable(support, alpha, step)


def _table_for(eta, alpha, step):
    support = tuple(sorted(set(float(x) for x in eta.locs) | {0.0, 1.0}))
    return primal_table(support, float(alpha), float(step))


def klinf_primal_grid(eta, nu, r, side, simplex_step=1 / 2000):
    """Smallest KL over gridded laws on ``supp(eta) + {0, 1}`` meeting the EVaR constraint.

    ``math.inf`` when no grid law is feasible.
    """
    alpha = getattr(r, "alpha", r)
    table = _table_for(eta, alpha, simplex_step)
    return float(table.query(eta, [nu], side)[0])


def _default_step(d):
    support = set(float(x) for x in d.locs) | {0.0, 1.0}
    return 1 / 20000 if len(support) <= 2 else 1 / 2000


def tmu_grid(instance, r, simplex_step=1 / 500, x_points=10_000, kl_step=None):
    """Exhaustive ``max_t min_j min_x`` over gridded weights and thresholds (``K <= 3``).

    ``kl_step`` is the mass grid of the projection tables; by default 1/20000
    for laws on two atoms and 1/2000 otherwise.
    """
    alpha = getattr(r, "alpha", r)
    K = len(instance)
    if K > 3:
        raise ValueError("tmu_grid supports at most three arms")
    evars = np.array([evar_grid(d, alpha) for d in instance])
    best = int(np.argmin(evars))
    if np.sum(np.abs(evars - evars[best]) <= 1e-9) > 1:
        return 0.0
    tables = [_table_for(d, alpha, kl_step or _default_step(d)) for d in instance]
    t = _simplex_grid(K, round(1.0 / simplex_step))
    phi = np.full(len(t), np.inf)
    for j in range(K):
        if j == best:
            continue
        xs = np.linspace(evars[best], evars[j], x_points)
        u = tables[best].query(instance[best], xs, "upper")
        low = tables[j].query(instance[j], xs, "lower")
        for k in range(0, len(t), T_CHUNK):
            tb, tj = t[k:k + T_CHUNK, best:best + 1], t[k:k + T_CHUNK, j:j + 1]
            with np.errstate(invalid="ignore"):
                # 0 * inf = 0
                val = (np.where(tb > 0, tb * u[None, :], 0.0)
                       + np.where(tj > 0, tj * low[None, :], 0.0))
            phi[k:k + T_CHUNK] = np.minimum(phi[k:k + T_CHUNK], val.min(axis=1))
    return float(phi.max())
