"""Track-and-Stop for the arm with the smallest EVaR.

Sampling follows C-tracking of the oracle weights computed on the empirical
laws, with forced exploration of arms below ``sqrt(n) - K/2`` pulls. Sampling
stops when the GLRT statistic

    Z(n) = min_{a != leader} inf_x  N_leader KLU(mu_leader, x) + N_a KLL(mu_a, x)

crosses ``beta(n, delta) = log((K - 1) / delta) + 3 log(n + 1) + 2``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .evar import evar
from .measures import DiscreteDistribution, as_risk
from .oracle import DegenerateInstanceError, characteristic_time, pairwise_g

EVAR_TIE_TOL = 1e-12
EAGER_PULLS = 200
HORIZON_CAP = 1_000_000


def threshold(n, delta, K):
    """``beta(n, delta) = log((K - 1) / delta) + 3 log(n + 1) + 2``."""
    if n < 0 or not 0.0 < delta < 1.0 or K < 2:
        raise ValueError("need n >= 0, delta in (0, 1) and K >= 2")
    return math.log((K - 1) / delta) + 3.0 * math.log(n + 1) + 2.0


@dataclass(frozen=True)
class StopDecision:
    stopped: bool
    statistic: float
    threshold: float
    recommended: int | None = None


@dataclass
class TrackAndStopState:
    """Mutable state of one run. ``empiricals`` is rebuilt lazily from exact reward counts."""

    K: int
    delta: float
    counts: np.ndarray = field(init=False)
    cumulative_weights: np.ndarray = field(init=False)
    n: int = field(init=False, default=0)
    weights: np.ndarray = field(init=False)
    strict_tracking: bool = False
    _histograms: list = field(init=False, repr=False)
    _empiricals: list = field(init=False, repr=False)
    _weights_at: int = field(init=False, default=-1, repr=False)

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("need at least two arms")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.counts = np.zeros(self.K, dtype=np.int64)
        self.cumulative_weights = np.zeros(self.K)
        self.weights = np.full(self.K, 1.0 / self.K)
        self._histograms = [Counter() for _ in range(self.K)]
        self._empiricals = [None] * self.K

    @property
    def empiricals(self):
        for a in range(self.K):
            if self._empiricals[a] is None and self.counts[a] > 0:
                self._empiricals[a] = DiscreteDistribution.from_counts(self._histograms[a])
        return list(self._empiricals)

    @property
    def initialized(self):
        return bool(np.all(self.counts >= 1))

    def observe(self, arm, reward):
        reward = float(reward)
        if not 0.0 <= reward <= 1.0 or math.isnan(reward):
            raise ValueError(f"reward {reward!r} outside [0, 1]")
        if not 0 <= arm < self.K:
            raise IndexError(f"arm {arm} out of range")
        self._histograms[arm][reward] += 1
        self._empiricals[arm] = None
        self.counts[arm] += 1
        self.n += 1


def empirical_leader(state, r):
    """Arm with the smallest empirical EVaR, lowest index among ties."""
    values = np.array([evar(d, r).value for d in state.empiricals])
    return int(np.flatnonzero(values <= values.min() + EVAR_TIE_TOL)[0]), values


def glrt_statistic(state, r):
    """``(Z(n), leader)``; requires every arm to have been pulled."""
    r = as_risk(r)
    if not state.initialized:
        raise ValueError("every arm must be pulled before the GLRT is defined")
    leader, values = empirical_leader(state, r)
    emp = state.empiricals
    z = math.inf
    for a in range(state.K):
        if a == leader:
            continue
        if values[a] - values[leader] <= EVAR_TIE_TOL:
            return 0.0, leader
        g, _ = pairwise_g(emp[leader], emp[a], float(state.counts[leader]),
                          float(state.counts[a]), r)
        z = min(z, g)
    return max(z, 0.0), leader


def _recompute_due(state):
    if state.strict_tracking or state.n <= EAGER_PULLS:
        return True
    return state.n - state._weights_at >= math.ceil(state.n / 100)


def oracle_weights(state, r):
    """Oracle weights on the current empiricals, refreshed on the lazy cadence."""
    if not state.initialized:
        return state.weights
    if _recompute_due(state):
        try:
            state.weights = characteristic_time(state.empiricals, r).weights
        except DegenerateInstanceError:
            state.weights = np.full(state.K, 1.0 / state.K)
        state._weights_at = state.n
    return state.weights


def next_arm(state, weights):
    """C-tracking with forced exploration; also accumulates ``weights``."""
    weights = np.asarray(weights, dtype=float)
    state.cumulative_weights += weights
    starved = np.flatnonzero(state.counts < math.sqrt(state.n) - state.K / 2)
    if starved.size:
        return int(starved[np.argmin(state.counts[starved])])
    return int(np.argmax(state.cumulative_weights - state.counts))


def choose_arm(state, r, rule="tracking"):
    """Arm to pull next: one initialization round, then the sampling rule."""
    if not state.initialized:
        return int(np.flatnonzero(state.counts == 0)[0])
    if rule == "uniform":
        return int(np.argmin(state.counts))
    if rule != "tracking":
        raise ValueError(f"unknown sampling rule {rule!r}")
    return next_arm(state, oracle_weights(state, r))


def stop_decision(state, r):
    beta = threshold(state.n, state.delta, state.K)
    if not state.initialized:
        return StopDecision(False, 0.0, beta, None)
    z, leader = glrt_statistic(state, r)
    stopped = z >= beta
    return StopDecision(stopped, z, beta, leader if stopped else None)


def step(state, env_sample, r):
    """Record one ``(arm, reward)`` observation and test the stopping rule."""
    arm, reward = env_sample
    state.observe(arm, reward)
    return stop_decision(state, as_risk(r))


@dataclass
class RunResult:
    tau: int
    recommended: int | None
    stopped: bool
    counts: list
    statistic: float
    threshold: float


def run(draw, K, r, delta, horizon_cap=HORIZON_CAP, rule="tracking", strict_tracking=False,
        on_step=None):
    """Run Track-and-Stop against ``draw(arm) -> reward`` until stopping or the cap.

    ``stopped=False`` in the result means the horizon cap was reached.
    """
    return run_many(draw, K, r, [delta], horizon_cap, rule, strict_tracking, on_step)[0]


def run_many(draw, K, r, deltas, horizon_cap=HORIZON_CAP, rule="tracking",
             strict_tracking=False, on_step=None):
    """One trajectory, one stopping time per confidence level.

    Arm choices never depend on ``delta``, so the run for each ``delta`` is the
    prefix of this trajectory up to its own stopping time.
    """
    r = as_risk(r)
    deltas = [float(d) for d in deltas]
    state = TrackAndStopState(K, min(deltas), strict_tracking=strict_tracking)
    results = [None] * len(deltas)
    z, leader = 0.0, None
    while state.n < horizon_cap and any(res is None for res in results):
        arm = choose_arm(state, r, rule)
        state.observe(arm, draw(arm))
        if state.initialized:
            z, leader = glrt_statistic(state, r)
        for i, d in enumerate(deltas):
            if results[i] is None:
                beta = threshold(state.n, d, K)
                if state.initialized and z >= beta:
                    results[i] = RunResult(state.n, leader, True, state.counts.tolist(), z, beta)
        if on_step is not None:
            on_step(state, arm, z, leader)
    for i, d in enumerate(deltas):
        if results[i] is None:
            results[i] = RunResult(state.n, None, False, state.counts.tolist(), z,
                                   threshold(state.n, d, K))
    return results
