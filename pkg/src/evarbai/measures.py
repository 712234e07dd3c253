"""Finite-support laws on [0, 1] and their entropic primitives.

Everything the solvers touch (arm laws, empirical histograms, projection
results) is a :class:`DiscreteDistribution`. Instances are immutable and
hashable so they can key the solver caches.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

MERGE_TOL = 1e-12
DROP_MASS = 1e-15
SUM_TOL = 1e-9


class DiscreteDistribution:
    """Probability measure with finitely many atoms in [0, 1].

    Locations closer than ``1e-12`` are merged (masses summed) and masses
    below ``1e-15`` are dropped before renormalizing, so two laws built from
    the same histogram compare equal.
    """

    __slots__ = ("_locs", "_masses", "_hash")

    def __init__(self, locs, masses):
        locs = np.asarray(locs, dtype=float).ravel()
        masses = np.asarray(masses, dtype=float).ravel()
        if locs.shape != masses.shape:
            raise ValueError("locs and masses must have the same length")
        if locs.size == 0:
            raise ValueError("a distribution needs at least one atom")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(masses))):
            raise ValueError("locations and masses must be finite")
        if np.any(locs < 0.0) or np.any(locs > 1.0):
            raise ValueError("locations must lie in [0, 1]")
        if np.any(masses < 0.0):
            raise ValueError("masses must be nonnegative")
        total = masses.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"masses sum to {total!r}, expected 1")

        order = np.argsort(locs, kind="stable")
        locs, masses = locs[order], masses[order]
        merged_l, merged_m = [locs[0]], [masses[0]]
        for x, m in zip(locs[1:], masses[1:]):
            if x - merged_l[-1] < MERGE_TOL:
                merged_m[-1] += m
            else:
                merged_l.append(x)
                merged_m.append(m)
        locs = np.array(merged_l)
        masses = np.array(merged_m)
        keep = masses >= DROP_MASS
        if not np.any(keep):
            raise ValueError("all masses are negligible")
        locs, masses = locs[keep], masses[keep]
        masses = masses / masses.sum()

        locs.setflags(write=False)
        masses.setflags(write=False)
        self._locs = locs
        self._masses = masses
        self._hash = hash((locs.tobytes(), masses.tobytes()))

    # construction helpers

    @classmethod
    def from_pairs(cls, pairs):
        """Build from the literal format ``[[location, mass], ...]``."""
        pairs = list(pairs)
        if not pairs:
            raise ValueError("a distribution needs at least one atom")
        try:
            locs, masses = zip(*((float(x), float(m)) for x, m in pairs))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed distribution literal: {exc}") from None
        return cls(locs, masses)

    @classmethod
    def point_mass(cls, c):
        return cls([c], [1.0])

    @classmethod
    def bernoulli(cls, p):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        return cls([0.0, 1.0], [1.0 - p, p])

    @classmethod
    def from_counts(cls, counts):
        """Exact histogram from a ``{location: count}`` mapping."""
        items = sorted((float(x), int(c)) for x, c in counts.items() if c > 0)
        if not items:
            raise ValueError("no observations")
        total = sum(c for _, c in items)
        return cls([x for x, _ in items], [c / total for _, c in items])

    @classmethod
    def from_samples(cls, samples):
        return cls.from_counts(Counter(float(x) for x in samples))

    def to_pairs(self):
        return [[float(x), float(m)] for x, m in zip(self._locs, self._masses)]

    # accessors

    @property
    def locs(self):
        return self._locs

    @property
    def masses(self):
        return self._masses

    @property
    def size(self):
        return self._locs.size

    @property
    def x_max(self):
        return float(self._locs[-1])

    @property
    def mass_at_max(self):
        return float(self._masses[-1])

    @property
    def mean(self):
        return float(np.dot(self._locs, self._masses))

    @property
    def is_point_mass(self):
        return self._locs.size == 1

    def mass_at(self, x):
        idx = np.flatnonzero(np.abs(self._locs - x) < MERGE_TOL)
        return float(self._masses[idx[0]]) if idx.size else 0.0

    def support_within(self, points):
        pts = np.asarray(points, dtype=float)
        return all(np.any(np.abs(pts - x) < MERGE_TOL) for x in self._locs)

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return (
            self._locs.shape == other._locs.shape
            and np.array_equal(self._locs, other._locs)
            and np.array_equal(self._masses, other._masses)
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        atoms = ", ".join(f"{x:.6g}: {m:.6g}" for x, m in zip(self._locs, self._masses))
        return f"DiscreteDistribution({{{atoms}}})"


@dataclass(frozen=True)
class RiskLevel:
    """Risk level ``alpha`` and the KL radius ``rho = -log(1 - alpha)``."""

    alpha: float
    rho: float = field(init=False)

    def __post_init__(self):
        a = float(self.alpha)
        if not 0.0 < a < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "rho", -math.log1p(-a))


def as_risk(r):
    return r if isinstance(r, RiskLevel) else RiskLevel(r)


# entropic primitives


def _shifted_weights(d, z):
    """Tilted weights ``m_i exp(z (x_i - x_ref))`` and the reference point.

    The reference point is the atom that maximizes ``z x``, so every exponent
    is nonpositive.
    """
    x_ref = d.locs[-1] if z >= 0 else d.locs[0]
    w = d.masses * np.exp(z * (d.locs - x_ref))
    return w, x_ref


def log_mgf(d, z):
    """``log E_d[exp(z X)]``; for ``z >= 0`` the result lies in ``[0, z]``."""
    z = float(z)
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    w, x_ref = _shifted_weights(d, z)
    return z * x_ref + math.log(w.sum())


def tilted_mean(d, z):
    """Mean of the exponentially tilted law ``dQ_z/dd = e^{zx} / E_d[e^{zX}]``."""
    w, _ = _shifted_weights(d, float(z))
    return float(np.dot(w, d.locs) / w.sum())


def tilted_variance(d, z):
    """Variance of the tilted law, i.e. the second derivative of :func:`log_mgf`."""
    w, _ = _shifted_weights(d, float(z))
    w = w / w.sum()
    m = np.dot(w, d.locs)
    return float(max(np.dot(w, (d.locs - m) ** 2), 0.0))


def kl_divergence(p, q):
    """``KL(p || q)``; ``math.inf`` when ``p`` is not absolutely continuous w.r.t. ``q``."""
    idx = np.searchsorted(q.locs, p.locs)
    idx_c = np.clip(idx, 0, q.size - 1)
    lo = np.clip(idx - 1, 0, q.size - 1)
    hit = np.abs(q.locs[idx_c] - p.locs) < MERGE_TOL
    hit_lo = np.abs(q.locs[lo] - p.locs) < MERGE_TOL
    match = np.where(hit, idx_c, lo)
    if not np.all(hit | hit_lo):
        return math.inf
    qm = q.masses[match]
    return float(max(np.sum(p.masses * np.log(p.masses / qm)), 0.0))


def tilt(d, s):
    """Exponential change of measure ``dQ/dd ∝ exp(s X)`` for any real ``s``."""
    w, _ = _shifted_weights(d, float(s))
    return DiscreteDistribution(d.locs, w / w.sum())


def esscher_tilt(d, t):
    """Esscher tilt toward the origin: ``dκ/dd = e^{-tX} / E_d[e^{-tX}]``."""
    if t < 0 or not math.isfinite(t):
        raise ValueError("t must be finite and nonnegative")
    return tilt(d, -t)
