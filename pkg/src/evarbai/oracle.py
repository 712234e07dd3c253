"""Characteristic time, oracle sampling weights and the sample-complexity lower bound.

For a best arm ``b`` and an alternative ``j`` the confusion cost at weights
``t`` is

    g_j(t) = min_{x in [EVaR(b), EVaR(j)]} t_b KLU(mu_b, x) + t_j KLL(mu_j, x)

and ``T(mu) = max_t min_j g_j(t)``. Every ``g_j`` is a minimum of functions
affine in ``t``, so the max-min is solved by a cutting-plane LP over
``(t, s)``: each evaluated threshold ``x`` contributes the cut
``s <= t_b KLU(x) + t_j KLL(x)``. The LP optimum upper-bounds ``T(mu)``; the
exact ``Phi`` at the LP weights lower-bounds it, and the loop stops once the
two meet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ._search import golden_section_min
from .evar import evar
from .klinf import LOWER, UPPER, bernoulli_kl, klinf_value
from .measures import DiscreteDistribution, as_risk

X_GRID = 64
X_TOL = 1e-9
TIE_TOL = 1e-9
BIG_M = 1e6


def set_tolerances(x_grid_points=None, x_tol=None, tie_tol=None):
    """Override the solver tolerances for this process (``None`` keeps the current one)."""
    global X_GRID, X_TOL, TIE_TOL
    if x_grid_points is not None:
        if int(x_grid_points) < 2:
            raise ValueError("x_grid_points must be at least 2")
        X_GRID = int(x_grid_points)
    if x_tol is not None:
        X_TOL = float(x_tol)
    if tie_tol is not None:
        TIE_TOL = float(tie_tol)


class DegenerateInstanceError(ValueError):
    """The EVaR-best arm is not unique, so ``T(mu) = 0``."""


@dataclass(frozen=True)
class AlternativeCost:
    arm: int
    x: float
    g_value: float


@dataclass
class OracleSolution:
    weights: np.ndarray
    characteristic_time: float
    per_alternative: list = field(default_factory=list)
    best_arm: int = 0
    upper_bound: float = math.nan


def _weighted(t, v):
    # 0 * inf = 0: an arm that is never sampled contributes nothing
    return 0.0 if t == 0 else t * v


def _pair_objective(best, other, t_best, t_other, r):
    def phi(x):
        return _weighted(t_best, klinf_value(UPPER, best, x, r)) + _weighted(
            t_other, klinf_value(LOWER, other, x, r)
        )

    return phi


def _interval(best, other, r, strict=True):
    lo, hi = evar(best, r).value, evar(other, r).value
    if strict and lo > hi + 1e-12:
        raise ValueError(
            f"best arm has the larger EVaR ({lo!r} > {hi!r}); arms passed in the wrong order"
        )
    return lo, hi


def pairwise_g(best, other, t_best, t_other, r, n_grid=None, tol=None):
    """Confusion cost between ``best`` and ``other`` and its minimizing threshold.

    Returns ``(value, x)`` with ``x`` in ``[EVaR(best), EVaR(other)]``.
    """
    r = as_risk(r)
    n_grid = n_grid or X_GRID
    tol = tol or X_TOL
    if t_best < 0 or t_other < 0:
        raise ValueError("weights must be nonnegative")
    lo, hi = _interval(best, other, r)
    if hi - lo <= 1e-12 or (t_best == 0 and t_other == 0):
        return 0.0, lo
    if _binary(best) and _binary(other):
        return _bernoulli_pair(best, other, t_best, t_other, r)
    phi = _pair_objective(best, other, t_best, t_other, r)
    grid = np.linspace(lo, hi, n_grid)
    values = np.array([phi(x) for x in grid])
    k = int(np.argmin(values))
    x, v = golden_section_min(phi, grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)], tol=tol)
    if values[k] <= v:
        x, v = float(grid[k]), float(values[k])
    return max(float(v), 0.0), float(x)


def _binary(d):
    return d.support_within((0.0, 1.0))


def _bernoulli_pair(best, other, t_best, t_other, r):
    # On {0, 1} both projections equal kl(p, q_x) where EVaR(Bern(q_x)) = x, and
    # q_x increases with x, so the inner problem is over q in [p_b, p_j]. Its
    # minimizer is the weighted mean of the two success rates.
    value, q = _bernoulli_pair_value(best.mass_at(1.0), other.mass_at(1.0), t_best, t_other, r)
    x = 1.0 if q is None else evar(DiscreteDistribution.bernoulli(q), r).value
    return value, float(x)


def _bernoulli_pair_value(pb, pj, t_best, t_other, r):
    """Value and minimizing success rate (``None`` stands for ``x = 1``)."""
    cap = 1.0 - r.alpha  # Bern(q) has EVaR 1 for every q >= cap
    q = min(max((t_best * pb + t_other * pj) / (t_best + t_other), pb), min(pj, cap))
    value = _weighted(t_best, bernoulli_kl(pb, q)) + _weighted(t_other, bernoulli_kl(pj, q))
    if pj >= cap:
        # x = 1 is inside the interval and there the lower projection of `other` vanishes
        at_one = _weighted(t_best, bernoulli_kl(pb, cap))
        if at_one < value:
            return max(float(at_one), 0.0), None
    return max(float(value), 0.0), q


def best_arm_index(evars, tie_tol=None):
    """Index of the unique smallest EVaR; raises on ties within ``tie_tol``."""
    tie_tol = TIE_TOL if tie_tol is None else tie_tol
    evars = np.asarray(evars, dtype=float)
    b = int(np.argmin(evars))
    others = np.delete(evars, b)
    if others.size and np.min(others) - evars[b] <= tie_tol:
        raise DegenerateInstanceError("several arms share the smallest EVaR")
    return b


def phi_value(instance, r, weights, best=None):
    """``min_j g_j(weights)`` and the per-alternative costs."""
    r = as_risk(r)
    if best is None:
        best = best_arm_index([evar(d, r).value for d in instance])
    costs = []
    for j, d in enumerate(instance):
        if j == best:
            continue
        g, x = pairwise_g(instance[best], d, float(weights[best]), float(weights[j]), r)
        costs.append(AlternativeCost(j, x, g))
    return min(c.g_value for c in costs), costs


def characteristic_time(instance, r, method="cutting_plane", tol=1e-9, max_iter=100,
                        iterations=500, warm_start=None) -> OracleSolution:
    """Oracle weights ``t*`` and ``T(mu)`` for a list of arm laws.

    ``method="cutting_plane"`` (default) solves the max-min exactly up to
    ``tol``; ``method="mirror"`` runs entropic mirror ascent for
    ``iterations`` steps from ``warm_start`` (uniform by default).
    """
    r = as_risk(r)
    instance = list(instance)
    K = len(instance)
    if K < 2:
        raise ValueError("need at least two arms")
    if method not in ("cutting_plane", "mirror"):
        raise ValueError(f"unknown method {method!r}")
    evars = [evar(d, r).value for d in instance]
    best_arm_index(evars)
    # solve in a canonical arm order so that permuting the input permutes the output exactly
    order = sorted(range(K), key=lambda i: (evars[i], instance[i].locs.tobytes(),
                                             instance[i].masses.tobytes()))
    arms = [instance[i] for i in order]
    sorted_evars = [evars[i] for i in order]
    if method == "mirror":
        start = None if warm_start is None else np.asarray(warm_start, dtype=float)[order]
        sol = _mirror_ascent(arms, r, 0, iterations, start)
    elif K == 2 and all(_binary(d) for d in arms):
        sol = _two_bernoulli(arms, r, 0)
    else:
        sol = _cutting_plane(arms, r, 0, sorted_evars, tol, max_iter)
    weights = np.empty(K)
    weights[order] = sol.weights
    costs = [AlternativeCost(order[c.arm], c.x, c.g_value) for c in sol.per_alternative]
    costs.sort(key=lambda c: c.arm)
    return OracleSolution(weights, sol.characteristic_time, costs, order[0], sol.upper_bound)


def _cut_values(instance, r, best, j, x):
    u = klinf_value(UPPER, instance[best], x, r)
    l_ = klinf_value(LOWER, instance[j], x, r)
    return min(u, BIG_M), min(l_, BIG_M)


def _two_bernoulli(instance, r, best):
    # Phi is concave in t_best and each evaluation is closed form
    j = 1 - best
    pb, pj = instance[best].mass_at(1.0), instance[j].mass_at(1.0)
    tb, neg = golden_section_min(lambda t: -_bernoulli_pair_value(pb, pj, t, 1.0 - t, r)[0],
                                 0.0, 1.0, tol=1e-12)
    t = np.zeros(2)
    t[best], t[j] = tb, 1.0 - tb
    phi, costs = phi_value(instance, r, t, best)
    return OracleSolution(t, phi, costs, best, -neg)


def _cutting_plane(instance, r, best, evars, tol, max_iter):
    K = len(instance)
    alts = [j for j in range(K) if j != best]
    cuts = []  # (j, U, L)
    for j in alts:
        for x in np.linspace(evars[best], evars[j], X_GRID):
            cuts.append((j, *_cut_values(instance, r, best, j, float(x))))

    best_t, best_phi, best_costs = None, -math.inf, None
    upper = math.inf
    for _ in range(max_iter):
        t, s = _solve_lp(cuts, K, best)
        upper = min(upper, s)
        phi, costs = phi_value(instance, r, t, best)
        if phi > best_phi:
            best_t, best_phi, best_costs = t, phi, costs
        if upper - best_phi <= tol * (1.0 + abs(best_phi)):
            break
        for c in costs:
            cuts.append((c.arm, *_cut_values(instance, r, best, c.arm, c.x)))
    return OracleSolution(best_t, max(best_phi, 0.0), best_costs, best, upper)


def _solve_lp(cuts, K, best):
    # variables: t_0..t_{K-1}, s ; maximize s
    n = len(cuts)
    a_ub = np.zeros((n, K + 1))
    for row, (j, u, l_) in enumerate(cuts):
        a_ub[row, best] = -u
        a_ub[row, j] = -l_
        a_ub[row, K] = 1.0
    cost = np.zeros(K + 1)
    cost[K] = -1.0
    a_eq = np.ones((1, K + 1))
    a_eq[0, K] = 0.0
    bounds = [(0.0, 1.0)] * K + [(None, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(n), A_eq=a_eq, b_eq=[1.0],
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    t = np.clip(res.x[:K], 0.0, None)
    return t / t.sum(), float(res.x[K])


def _mirror_ascent(instance, r, best, iterations, warm_start):
    K = len(instance)
    w = np.full(K, 1.0 / K) if warm_start is None else np.asarray(warm_start, dtype=float)
    w = np.clip(w, 1e-12, None)
    w = w / w.sum()
    avg = np.zeros(K)
    g_max = 0.0
    for k in range(1, iterations + 1):
        phi, costs = phi_value(instance, r, w, best)
        active = [c for c in costs if c.g_value <= phi + 1e-9]
        grad = np.zeros(K)
        for c in active:
            grad[best] += min(klinf_value(UPPER, instance[best], c.x, r), BIG_M)
            grad[c.arm] += min(klinf_value(LOWER, instance[c.arm], c.x, r), BIG_M)
        grad /= len(active)
        g_max = max(g_max, float(np.max(np.abs(grad))))
        if g_max == 0:
            break
        # textbook entropic step sqrt(2 log K / k) / G
        eta = math.sqrt(2.0 * math.log(K) / k) / g_max
        logits = np.log(w) + eta * grad
        w = np.exp(logits - logits.max())
        w = w / w.sum()
        avg += w
    avg /= avg.sum()
    phi, costs = phi_value(instance, r, avg, best)
    return OracleSolution(avg, max(phi, 0.0), costs, best)


def sample_complexity_lower_bound(instance, r, delta, solution=None):
    """``log(1 / (4 delta)) / T(mu)``; ``math.inf`` for a degenerate instance."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if solution is None:
        try:
            solution = characteristic_time(instance, r)
        except DegenerateInstanceError:
            return math.inf
    T = solution.characteristic_time
    if T <= 0:
        return math.inf
    return math.log(1.0 / (4.0 * delta)) / T
