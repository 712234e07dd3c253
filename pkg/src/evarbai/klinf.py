"""KL projections onto EVaR super- and sublevel sets.

``kl_inf_upper(eta, nu)`` is ``min KL(eta || kappa)`` over laws on [0, 1] with
``EVaR(kappa) >= nu``; ``kl_inf_lower`` is the same with ``EVaR(kappa) <= nu``.
Both are computed through their dual programs:

* upper: ``max_{t, lambda3} E_eta[log(1 + lambda3 (1 - exp(t (X - nu) + rho)))]``
  with ``t = lambda1 / lambda3``; the integrand must stay positive on all of
  [0, 1], so the binding point is ``x = 1``;
* lower: ``inf_{z > 0} sup_lambda E_eta[log(1 - lambda (e^{-rho + z nu} - e^{zX}))]``
  with positivity binding at ``x = 0``.

Internally the multiplier is rescaled to the fraction ``s`` of its feasible
range, so every integrand reads ``1 + s c(x)`` with ``c >= -1`` and
``s in [0, 1)``. Mass the stationarity density leaves unassigned sits at the
binding point (``1`` for the upper side, ``0`` for the lower side).

Laws supported in ``{0, 1}`` take an exact shortcut: the optimal ``kappa`` is
Bernoulli as well and the projection is a Bernoulli KL to the Bernoulli law
whose EVaR equals ``nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from ._search import _local_minima, golden_section_min, solve_decreasing
from .evar import evar
from .measures import DiscreteDistribution, as_risk, tilt

T_MAX = 200.0
T_GRID = 128
Z_MAX = 1e4
Z_GRID = 256
EPS_B = 1e-8
BIG_EXPONENT = 30.0

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class Threshold:
    nu: float

    def __post_init__(self):
        nu = float(self.nu)
        if not 0.0 <= nu <= 1.0 or math.isnan(nu):
            raise ValueError(f"threshold must lie in [0, 1], got {self.nu!r}")
        object.__setattr__(self, "nu", nu)


def _nu(nu):
    return nu.nu if isinstance(nu, Threshold) else Threshold(nu).nu


@dataclass(frozen=True)
class DualSolutionU:
    lambda1: float
    lambda3: float
    value: float
    primal: DiscreteDistribution
    witness: DiscreteDistribution

    @property
    def slope(self):
        return self.lambda1 / self.lambda3 if self.lambda3 > 0 else 0.0


@dataclass(frozen=True)
class DualSolutionL:
    z: float
    lam: float
    value: float
    primal: DiscreteDistribution


# feasibility windows


def feasible_lambda3_max(t, nu, r, xmax=1.0):
    """Supremum of admissible ``lambda3`` at slope ``t`` (positivity up to ``xmax``)."""
    r = as_risk(r)
    w = r.rho + t * (xmax - _nu(nu))
    if w <= 0:
        return math.inf
    if w > 700:
        return math.exp(-w)
    return 1.0 / math.expm1(w)


def feasible_lambda_domain(z, nu, r):
    """Admissible multipliers of the lower dual at ``z``: ``[0, hi)``, ``hi`` possibly inf."""
    r = as_risk(r)
    if z <= 0:
        raise ValueError("z must be positive")
    v = z * _nu(nu) - r.rho
    if v <= 0:
        return (0.0, math.inf)
    if v > 700:
        return (0.0, math.exp(-v))
    return (0.0, 1.0 / math.expm1(v))


# Bernoulli shortcut


def bernoulli_kl(p, q):
    """``KL(Bern(p) || Bern(q))`` with the usual ``0 log 0`` conventions."""
    out = 0.0
    for a, b in ((p, q), (1.0 - p, 1.0 - q)):
        if a > 0:
            if b <= 0:
                return math.inf
            out += a * math.log(a / b)
    return max(out, 0.0)


@lru_cache(maxsize=1 << 16)
def _bernoulli_inverse(nu, alpha):
    rho = -math.log1p(-alpha)
    if nu <= 0:
        return 0.0
    if nu >= 1:
        return 1.0 - alpha
    log_nu, log_1mnu = math.log(nu), math.log1p(-nu)

    def g(u):
        # KL(Bern(nu) || Bern(e^u)) - rho, decreasing in u on (-inf, log nu)
        return nu * (log_nu - u) + (1 - nu) * (log_1mnu - math.log1p(-math.exp(u))) - rho

    lo = log_nu - (rho + 1.0) / nu - 1.0
    hi = log_nu
    if g(lo) <= 0:
        return 0.0
    u = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(u)


def bernoulli_evar_inverse(nu, r):
    """The ``q`` with ``EVaR(Bern(q)) = nu`` (EVaR is increasing in ``q``)."""
    r = as_risk(r)
    return _bernoulli_inverse(float(_nu(nu)), r.alpha)


def _on_binary_support(eta):
    return eta.support_within((0.0, 1.0))


# coefficient tables: integrand is 1 + s * c(x)


def _upper_coeffs(locs, nu, rho, t):
    t = np.asarray(t, dtype=float)[:, None]
    w = t * (locs[None, :] - nu) + rho
    w1 = rho + t * (1.0 - nu)
    denom = -np.expm1(-w1)
    with np.errstate(over="ignore", invalid="ignore"):
        r_pos = np.exp(w - w1) * (-np.expm1(-w)) / denom
        r_neg = np.expm1(w) * np.exp(-w1) / denom
    r = np.where(w > 0, r_pos, r_neg)
    c = -r
    return c, np.zeros_like(c), np.zeros(c.shape, dtype=bool)


def _lower_coeffs(locs, nu, rho, z):
    z = np.asarray(z, dtype=float)[:, None]
    u = z * (locs[None, :] - nu) + rho
    one_minus = -np.expm1(-(z * nu - rho))
    big = u > BIG_EXPONENT
    u_small = np.minimum(u, BIG_EXPONENT)
    c = np.expm1(u_small) / one_minus
    with np.errstate(divide="ignore"):
        logc = np.where(big, u + np.log(-np.expm1(-np.maximum(u, 1.0))) - np.log(one_minus), 0.0)
    return c, logc, big


def _integrand(c, logc, big, s):
    s = s[:, None]
    inv_c = np.exp(-logc)
    with np.errstate(all="ignore"):
        term = np.where(big, 1.0 / (inv_c + s), c / (1.0 + s * c))
        logf = np.where(big, logc + np.log(inv_c + s), np.log1p(s * c))
    return term, logf


def _inner_max(masses, c, logc, big, s_max=1.0 - EPS_B):
    """Maximize ``sum_i m_i log(1 + s c_i)`` over ``s in [0, s_max]`` row by row."""
    n = c.shape[0]

    def deriv(s):
        term, _ = _integrand(c, logc, big, s)
        with np.errstate(over="ignore"):
            return (term * masses).sum(axis=1), -((term**2) * masses).sum(axis=1)

    d0, _ = deriv(np.zeros(n))
    d1, _ = deriv(np.full(n, s_max))
    s = np.zeros(n)
    at_max = d1 >= 0
    s[at_max] = s_max
    interior = (d0 > 0) & ~at_max
    if np.any(interior):
        idx = np.flatnonzero(interior)
        sub_c, sub_l, sub_b = c[idx], logc[idx], big[idx]

        def sub_deriv(x):
            term, _ = _integrand(sub_c, sub_l, sub_b, x)
            with np.errstate(over="ignore"):
                return (term * masses).sum(axis=1), -((term**2) * masses).sum(axis=1)

        s[idx] = solve_decreasing(sub_deriv, np.zeros(idx.size), np.full(idx.size, s_max))
    _, logf = _integrand(c, logc, big, s)
    values = (logf * masses).sum(axis=1)
    values = np.where(s > 0, values, 0.0)
    return s, values


def _primal_from_density(eta, f, binding_point):
    dens = eta.masses / f
    leftover = 1.0 - dens.sum()
    locs, masses = list(eta.locs), list(dens)
    if leftover > 0:
        locs.append(binding_point)
        masses.append(leftover)
    masses = np.asarray(masses)
    return DiscreteDistribution(locs, masses / masses.sum())


# upper projection


def _upper_profile(eta, nu, rho, ts):
    c, logc, big = _upper_coeffs(eta.locs, nu, rho, ts)
    return _inner_max(eta.masses, c, logc, big)


def _solve_upper_dual(eta, nu, r, grid_factor=1, tol=1e-10):
    rho = r.rho
    e = evar(eta, r)
    t_hi = T_MAX
    ts = np.geomspace(1e-3, t_hi, T_GRID * grid_factor)
    if math.isfinite(e.minimizer):
        ts = np.union1d(ts, [e.minimizer])
    _, vals = _upper_profile(eta, nu, rho, ts)
    k = int(np.argmax(vals))
    while (k == ts.size - 1 or vals[k] <= 0) and t_hi < 1e7:
        extra = np.geomspace(t_hi, 50 * t_hi, 32)[1:]
        t_hi = extra[-1]
        _, extra_vals = _upper_profile(eta, nu, rho, extra)
        ts = np.concatenate([ts, extra])
        vals = np.concatenate([vals, extra_vals])
        k = int(np.argmax(vals))
    if vals[k] <= 0:
        return None

    def neg_profile(log_t):
        return -_upper_profile(eta, nu, rho, [math.exp(log_t)])[1][0]

    lo = math.log(ts[max(k - 1, 0)])
    hi = math.log(ts[min(k + 1, ts.size - 1)])
    log_t, _ = golden_section_min(neg_profile, lo, hi, tol=tol)
    t = math.exp(log_t)
    if -neg_profile(log_t) < vals[k]:
        t = float(ts[k])
    c, logc, big = _upper_coeffs(eta.locs, nu, rho, [t])
    s, val = _inner_max(eta.masses, c, logc, big)
    s, val = float(s[0]), float(val[0])
    f = 1.0 + s * c[0]
    primal = _primal_from_density(eta, f, 1.0)
    lam3 = s * feasible_lambda3_max(t, nu, r)
    return DualSolutionU(t * lam3, lam3, val, primal, tilt(primal, t))


def _upper_at_one(eta, r):
    m1 = eta.mass_at(1.0)
    target = 1.0 - r.alpha
    rest = 1.0 - m1
    scale = r.alpha / rest
    locs = list(eta.locs)
    masses = list(eta.masses * scale)
    if m1 > 0:
        masses[-1] = target
    else:
        locs.append(1.0)
        masses.append(target)
    value = rest * math.log(rest / r.alpha)
    if m1 > 0:
        value += m1 * math.log(m1 / target)
    primal = DiscreteDistribution(locs, masses)
    return DualSolutionU(math.inf, rest / r.alpha - 1.0, max(value, 0.0), primal,
                         DiscreteDistribution.point_mass(1.0))


def _upper_bernoulli(eta, nu, r):
    p = eta.mass_at(1.0)
    q = bernoulli_evar_inverse(nu, r)
    value = bernoulli_kl(p, q)
    t = math.log(nu * (1 - q) / (q * (1 - nu)))
    lam3 = (1 - (1 - p) / (1 - q)) / math.expm1(r.rho - t * nu)
    return DualSolutionU(t * lam3, lam3, value, DiscreteDistribution.bernoulli(q),
                         DiscreteDistribution.bernoulli(nu))


def kl_inf_upper(eta: DiscreteDistribution, nu, r, method="auto") -> DualSolutionU:
    """Smallest ``KL(eta || kappa)`` over laws with ``EVaR(kappa) >= nu``.

    ``method`` is ``"auto"``, ``"dual"`` (always run the dual solver) or
    ``"bernoulli"`` (closed form, support must be within ``{0, 1}``).
    """
    r = as_risk(r)
    return _kl_inf_upper(eta, _nu(nu), r.alpha, method)


@lru_cache(maxsize=4096)
def _kl_inf_upper(eta, nu, alpha, method):
    r = as_risk(alpha)
    if nu <= evar(eta, r).value:
        return DualSolutionU(0.0, 0.0, 0.0, eta, eta)
    if nu >= 1.0:
        return _upper_at_one(eta, r)
    binary = _on_binary_support(eta)
    if method == "bernoulli" and not binary:
        raise ValueError("the Bernoulli shortcut needs support within {0, 1}")
    if binary and method in ("auto", "bernoulli"):
        return _upper_bernoulli(eta, nu, r)
    sol = _solve_upper_dual(eta, nu, r)
    if sol is None:
        return DualSolutionU(0.0, 0.0, 0.0, eta, eta)
    if evar(sol.primal, r).value < nu - 1e-6:
        retry = _solve_upper_dual(eta, nu, r, grid_factor=4, tol=1e-13)
        if retry is not None:
            sol = retry
    return sol


# lower projection


def _lower_profile(eta, nu, rho, zs):
    c, logc, big = _lower_coeffs(eta.locs, nu, rho, zs)
    return _inner_max(eta.masses, c, logc, big)


def _solve_lower_dual(eta, nu, r, grid_factor=1, tol=1e-10, n_starts=3):
    rho = r.rho
    z_lo = rho / nu * (1 + 1e-9)
    z_hi = max(Z_MAX, 100 * z_lo)
    zs = np.geomspace(z_lo, z_hi, Z_GRID * grid_factor)
    _, vals = _lower_profile(eta, nu, rho, zs)
    while int(np.argmin(vals)) == zs.size - 1 and z_hi < 1e8:
        extra = np.geomspace(z_hi, 20 * z_hi, 32)[1:]
        z_hi = extra[-1]
        _, extra_vals = _lower_profile(eta, nu, rho, extra)
        zs = np.concatenate([zs, extra])
        vals = np.concatenate([vals, extra_vals])

    def profile(log_z):
        return _lower_profile(eta, nu, rho, [math.exp(log_z)])[1][0]

    log_zs = np.log(zs)
    best_lz, best_v = log_zs[int(np.argmin(vals))], float(np.min(vals))
    for k in _local_minima(vals)[:n_starts]:
        lo = log_zs[max(k - 1, 0)]
        hi = log_zs[min(k + 1, zs.size - 1)]
        lz, v = golden_section_min(profile, lo, hi, tol=tol)
        if v < best_v:
            best_lz, best_v = lz, v
    z = math.exp(best_lz)
    c, logc, big = _lower_coeffs(eta.locs, nu, rho, [z])
    s, val = _inner_max(eta.masses, c, logc, big)
    s, val = float(s[0]), float(val[0])
    _, logf = _integrand(c, logc, big, np.array([s]))
    f = np.exp(logf[0])
    primal = _primal_from_density(eta, f, 0.0)
    v = z * nu - rho
    lam = s * math.exp(-v) / -math.expm1(-v)
    return DualSolutionL(z, lam, val, primal)


def _lower_bernoulli(eta, nu, r):
    p = eta.mass_at(1.0)
    q = bernoulli_evar_inverse(nu, r)
    if q <= 0:
        return DualSolutionL(math.inf, 0.0, math.inf, DiscreteDistribution.point_mass(0.0))
    value = bernoulli_kl(p, q)
    kappa = DiscreteDistribution.bernoulli(q)
    z = evar(kappa, r).minimizer
    v = z * nu - r.rho
    lam = (1 - (1 - p) / (1 - q)) / math.expm1(v)
    return DualSolutionL(z, lam, value, kappa)


def kl_inf_lower(eta: DiscreteDistribution, nu, r, method="auto") -> DualSolutionL:
    """Smallest ``KL(eta || kappa)`` over laws with ``EVaR(kappa) <= nu``.

    Returns ``value = math.inf`` when only ``delta_0`` is feasible (``nu = 0``)
    and ``eta`` puts mass away from the origin.
    """
    r = as_risk(r)
    return _kl_inf_lower(eta, _nu(nu), r.alpha, method)


@lru_cache(maxsize=4096)
def _kl_inf_lower(eta, nu, alpha, method):
    r = as_risk(alpha)
    if nu >= evar(eta, r).value:
        return DualSolutionL(0.0, 0.0, 0.0, eta)
    if nu <= 0.0:
        return DualSolutionL(math.inf, 0.0, math.inf, DiscreteDistribution.point_mass(0.0))
    binary = _on_binary_support(eta)
    if method == "bernoulli" and not binary:
        raise ValueError("the Bernoulli shortcut needs support within {0, 1}")
    if binary and method in ("auto", "bernoulli"):
        return _lower_bernoulli(eta, nu, r)
    sol = _solve_lower_dual(eta, nu, r)
    if evar(sol.primal, r).value > nu + 1e-6:
        sol = _solve_lower_dual(eta, nu, r, grid_factor=4, tol=1e-13, n_starts=6)
    return sol


# direct evaluation of the dual objectives (diagnostics and tests)


def upper_dual_objective(eta, lambda1, lambda3, nu, r):
    """``E_eta[log(1 + lambda3 (1 - exp(t (X - nu) + rho)))]`` with ``t = lambda1 / lambda3``.

    Returns ``-inf`` outside the domain where the integrand is positive on [0, 1].
    """
    r = as_risk(r)
    if lambda3 == 0:
        return 0.0
    t = lambda1 / lambda3

    def integrand(x):
        return 1.0 + lambda3 * (1.0 - np.exp(t * (x - nu) + r.rho))

    if integrand(np.array([1.0]))[0] <= 0:
        return -math.inf
    return float(np.dot(eta.masses, np.log(integrand(eta.locs))))


def lower_dual_objective(eta, z, lam, nu, r):
    """``E_eta[log(1 - lam (e^{-rho + z nu} - e^{zX}))]``; ``-inf`` off the domain."""
    r = as_risk(r)
    a = math.exp(-r.rho + z * nu)

    def integrand(x):
        return 1.0 - lam * (a - np.exp(z * x))

    if integrand(np.array([0.0]))[0] <= 0:
        return -math.inf
    return float(np.dot(eta.masses, np.log(integrand(eta.locs))))


# value-only entry point for the hot loops


NU_KEY_DIGITS = 9


def klinf_value(side, eta, nu, r):
    """Projection value only, memoized on ``(eta, round(nu, 9), alpha)``."""
    r = as_risk(r)
    return _klinf_value(side, eta, round(float(nu), NU_KEY_DIGITS), r.alpha)


@lru_cache(maxsize=1 << 18)
def _klinf_value(side, eta, nu, alpha):
    nu = min(max(nu, 0.0), 1.0)
    r = as_risk(alpha)
    e = evar(eta, r).value
    if side == UPPER:
        if nu <= e:
            return 0.0
        if nu < 1.0 and _on_binary_support(eta):
            return bernoulli_kl(eta.mass_at(1.0), bernoulli_evar_inverse(nu, r))
        return _kl_inf_upper(eta, nu, alpha, "auto").value
    if side == LOWER:
        if nu >= e:
            return 0.0
        if nu > 0.0 and _on_binary_support(eta):
            return bernoulli_kl(eta.mass_at(1.0), bernoulli_evar_inverse(nu, r))
        return _kl_inf_lower(eta, nu, alpha, "auto").value
    raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
