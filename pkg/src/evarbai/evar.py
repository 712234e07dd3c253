"""Entropic Value-at-Risk of finite-support laws.

``EVaR_alpha(d) = inf_{z>0} (log E_d[e^{zX}] + rho) / z``. The objective
``f(z)`` has derivative ``(G(z) - rho) / z^2`` with
``G(z) = z Λ'(z) - Λ(z)`` nondecreasing, so the minimizer is the root of
``G(z) = rho`` when one exists. For finite support ``G`` increases to
``-log d{X = x_max}``, which makes the boundary case an exact mass test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .measures import DiscreteDistribution, as_risk, kl_divergence

INTERIOR = "interior"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class EvarResult:
    value: float
    minimizer: float  # math.inf in the boundary regime
    regime: str


def _mgf_terms(d, z):
    # weights shifted by x_max so that every exponent is <= 0
    w = d.masses * np.exp(z * (d.locs - d.x_max))
    s = w.sum()
    mean = np.dot(w, d.locs) / s
    var = np.dot(w, (d.locs - mean) ** 2) / s
    return s, mean, var


def log_partition_gap(d, z):
    """``G_d(z) = z Λ'(z) - Λ(z)``, evaluated without the ``z x_max`` cancellation."""
    if z == 0:
        return 0.0
    s, mean, _ = _mgf_terms(d, z)
    return float(z * (mean - d.x_max) - math.log(s))


def evar_objective(d, r, z):
    """``f_d(z) = (log E_d[e^{zX}] + rho) / z`` for ``z > 0``."""
    r = as_risk(r)
    s, _, _ = _mgf_terms(d, z)
    return d.x_max + (math.log(s) + r.rho) / z


def boundary_regime(d, r):
    """True iff the infimum is only approached as ``z -> inf``."""
    r = as_risk(r)
    return d.is_point_mass or d.mass_at_max >= 1.0 - r.alpha


def evar(d: DiscreteDistribution, r) -> EvarResult:
    r = as_risk(r)
    return _evar_cached(d, r.alpha)


@lru_cache(maxsize=65536)
def _evar_cached(d, alpha):
    r = as_risk(alpha)
    if boundary_regime(d, r):
        return EvarResult(d.x_max, math.inf, BOUNDARY)

    rho = r.rho
    # G(0+) = 0 < rho and G increases to -log(mass_at_max) > rho
    lo, hi = 0.0, 1.0
    while log_partition_gap(d, hi) < rho:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ArithmeticError("failed to bracket the EVaR minimizer")

    z = 0.5 * (lo + hi)
    for _ in range(200):
        s, mean, var = _mgf_terms(d, z)
        g = z * (mean - d.x_max) - math.log(s) - rho
        if abs(g) <= 1e-12:
            break
        if g > 0:
            hi = z
        else:
            lo = z
        if hi - lo <= 1e-12 * (1.0 + z):
            break
        # G'(z) = z * tilted variance
        slope = z * var
        step = z - g / slope if slope > 0 else math.nan
        z = step if lo < step < hi else 0.5 * (lo + hi)

    value = evar_objective(d, r, z)
    value = min(max(value, d.mean), d.x_max)
    return EvarResult(float(value), float(z), INTERIOR)


def evar_dual_check(d, r, q):
    """Mean of a law ``q`` inside the KL ball of radius rho around ``d``.

    Any such mean is a lower bound on ``EVaR(d)``; used to certify values.
    """
    r = as_risk(r)
    kl = kl_divergence(q, d)
    if kl > r.rho + 1e-9:
        raise ValueError(f"q lies outside the KL ball: KL(q||d) = {kl!r} > rho = {r.rho!r}")
    return q.mean
