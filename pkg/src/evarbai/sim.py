"""Bandit environments, seeded reward streams and the Monte-Carlo harness.

Seeding contract: a trial with 64-bit seed ``s`` draws arm ``a``'s rewards
from ``Generator(Philox(SeedSequence(s, spawn_key=(a,))))``. Per-arm streams
make each arm's reward sequence independent of the order in which arms are
pulled. Trial ``i`` of a Monte-Carlo batch with base seed ``b`` uses
``s = trial_seed(b, i)``, the first 64 bits of
``SeedSequence(b, spawn_key=(i,))``, so parallel scheduling cannot change
any result.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .evar import evar
from .measures import DiscreteDistribution, as_risk
from .oracle import DegenerateInstanceError, best_arm_index, characteristic_time
from .tas import HORIZON_CAP, run_many

DEFAULT_GRID = 1e-3


# arm specifications


@dataclass(frozen=True)
class BernoulliArm:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"bernoulli p={self.p!r} outside [0, 1]")

    def law(self):
        return DiscreteDistribution.bernoulli(self.p)

    def draw(self, rng):
        return 1.0 if rng.random() < self.p else 0.0


@dataclass(frozen=True)
class DiscreteArm:
    dist: DiscreteDistribution

    def law(self):
        return self.dist

    def draw(self, rng):
        cdf = np.cumsum(self.dist.masses)
        k = int(np.searchsorted(cdf, rng.random(), side="right"))
        return float(self.dist.locs[min(k, self.dist.size - 1)])


@dataclass(frozen=True)
class BetaQuantizedArm:
    """Beta(a, b) draw rounded to the nearest multiple of ``grid``."""

    a: float
    b: float
    grid: float = DEFAULT_GRID

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("beta parameters must be positive")
        cells = round(1.0 / self.grid)
        if not 0.0 < self.grid <= 0.5 or abs(cells * self.grid - 1.0) > 1e-9:
            raise ValueError(f"grid={self.grid!r} must divide 1")

    @property
    def cells(self):
        return round(1.0 / self.grid)

    def law(self):
        # exact law of the rounded draw: cell k collects [(k - 1/2) g, (k + 1/2) g)
        n = self.cells
        edges = np.clip((np.arange(n + 2) - 0.5) / n, 0.0, 1.0)
        masses = np.diff(stats.beta.cdf(edges, self.a, self.b))
        locs = np.arange(n + 1) / n
        keep = masses > 0
        return DiscreteDistribution(locs[keep], masses[keep] / masses.sum())

    def draw(self, rng):
        x = float(stats.beta.ppf(rng.random(), self.a, self.b))
        return round(x * self.cells) / self.cells


def arm_from_spec(spec):
    """Arm from the config literal ``{"bernoulli": p}``, ``{"discrete": [[x, m], ...]}``
    or ``{"beta_quantized": {"a": .., "b": .., "grid": ..}}``."""
    if isinstance(spec, (BernoulliArm, DiscreteArm, BetaQuantizedArm)):
        return spec
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"arm spec must be a one-key object, got {spec!r}")
    (kind, value), = spec.items()
    if kind == "bernoulli":
        return BernoulliArm(float(value))
    if kind == "discrete":
        return DiscreteArm(DiscreteDistribution.from_pairs(value))
    if kind == "beta_quantized":
        extra = set(value) - {"a", "b", "grid"}
        if extra:
            raise ValueError(f"unknown beta_quantized key(s): {sorted(extra)}")
        return BetaQuantizedArm(float(value["a"]), float(value["b"]),
                                float(value.get("grid", DEFAULT_GRID)))
    raise ValueError(f"unknown arm kind {kind!r}")


def arm_to_spec(arm):
    if isinstance(arm, BernoulliArm):
        return {"bernoulli": arm.p}
    if isinstance(arm, DiscreteArm):
        return {"discrete": arm.dist.to_pairs()}
    return {"beta_quantized": {"a": arm.a, "b": arm.b, "grid": arm.grid}}


class BanditInstance:
    def __init__(self, arms):
        self.arms = [arm_from_spec(a) for a in arms]
        if len(self.arms) < 2:
            raise ValueError("an instance needs at least two arms")
        self.laws = [a.law() for a in self.arms]

    @property
    def K(self):
        return len(self.arms)

    def evars(self, r):
        return [evar(d, r).value for d in self.laws]

    def best_arm(self, r):
        """Unique EVaR-minimizing arm; raises on ties."""
        return best_arm_index(self.evars(r))


# reward streams


def trial_seed(base_seed, trial):
    state = np.random.SeedSequence(int(base_seed), spawn_key=(int(trial),)).generate_state(
        1, np.uint64)
    return int(state[0])


def arm_streams(seed, K):
    return [np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed),
                                                                        spawn_key=(a,))))
            for a in range(K)]


def sample(instance, arm, rng_stream):
    """One reward of ``arm`` from its stream."""
    if not 0 <= arm < instance.K:
        raise IndexError(f"arm {arm} out of range")
    return instance.arms[arm].draw(rng_stream)


# trials


@dataclass
class TrialRecord:
    trial: int
    seed: int
    delta: float
    tau: int
    recommended: int | None
    correct: bool
    stopped: bool
    counts: list
    wall_time: float


def run_trial_many(instance, r, deltas, seed, trial=0, horizon_cap=HORIZON_CAP,
                   rule="tracking", strict_tracking=False):
    """Records for several confidence levels sharing one reward trajectory."""
    r = as_risk(r)
    best = instance.best_arm(r)
    streams = arm_streams(seed, instance.K)
    start = time.perf_counter()
    results = run_many(lambda a: sample(instance, a, streams[a]), instance.K, r, deltas,
                       horizon_cap, rule, strict_tracking)
    wall = time.perf_counter() - start
    return [TrialRecord(trial, int(seed), float(d), res.tau, res.recommended,
                        res.recommended == best, res.stopped, res.counts, wall)
            for d, res in zip(deltas, results)]


def run_trial(instance, r, delta, seed, trial=0, **kwargs):
    return run_trial_many(instance, r, [delta], seed, trial, **kwargs)[0]


def _trial_job(args):
    instance, alpha, deltas, base_seed, trial, kwargs = args
    return run_trial_many(instance, alpha, deltas, trial_seed(base_seed, trial), trial, **kwargs)


def run_trials(instance, r, deltas, trials, base_seed, parallelism=1, **kwargs):
    """``records[i][t]``: record of trial ``t`` at ``deltas[i]``, sorted by trial."""
    r = as_risk(r)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    instance.best_arm(r)  # reject degenerate instances before spawning work
    jobs = [(instance, r.alpha, list(deltas), base_seed, t, kwargs) for t in range(trials)]
    if parallelism <= 1:
        out = [_trial_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            out = list(pool.map(_trial_job, jobs, chunksize=max(1, trials // (4 * parallelism))))
    out.sort(key=lambda recs: recs[0].trial)
    return [[recs[i] for recs in out] for i in range(len(deltas))]


@dataclass
class Summary:
    delta: float
    trials: int
    errors: int
    error_rate: float
    mean_tau: float
    std_tau: float
    T: float
    lower_bound: float
    ratio: float
    undecided: int = 0

    CSV_COLUMNS = ("delta", "trials", "errors", "error_rate", "mean_tau", "std_tau", "T",
                   "lower_bound", "ratio")

    def csv_row(self):
        return [repr(getattr(self, c)) for c in self.CSV_COLUMNS]

    def to_dict(self):
        return asdict(self)


def summarize(records, delta, T):
    taus = np.array([rec.tau for rec in records], dtype=float)
    errors = sum(not rec.correct for rec in records)
    mean = float(taus.mean())
    std = float(taus.std(ddof=1)) if len(taus) > 1 else 0.0
    lb = math.log(1.0 / (4.0 * delta)) / T if T > 0 else math.inf
    return Summary(float(delta), len(records), int(errors), errors / len(records), mean, std,
                   float(T), float(lb), mean * T / math.log(1.0 / delta),
                   sum(not rec.stopped for rec in records))


def monte_carlo(instance, r, delta, trials, base_seed=0, parallelism=1, **kwargs):
    """``(summary, records)`` for ``trials`` seeded runs at one confidence level."""
    summaries, records = delta_sweep(instance, r, [delta], trials, base_seed, parallelism,
                                     **kwargs)
    return summaries[0], records[0]


def delta_sweep(instance, r, deltas, trials, base_seed=0, parallelism=1, **kwargs):
    """Summaries for each ``delta``; all levels reuse the same trajectories."""
    r = as_risk(r)
    try:
        T = characteristic_time(instance.laws, r).characteristic_time
    except DegenerateInstanceError:
        raise DegenerateInstanceError("tied best arms: the instance has no unique answer") from None
    records = run_trials(instance, r, deltas, trials, base_seed, parallelism, **kwargs)
    return [summarize(recs, d, T) for recs, d in zip(records, deltas)], records


def binomial_upper(errors, trials, level=0.95):
    """One-sided Clopper-Pearson upper bound on an error probability."""
    if errors >= trials:
        return 1.0
    return float(stats.beta.ppf(level, errors + 1, trials - errors))


def lower_bound_t_test(taus, lower_bound):
    """One-sided p-value of H1: E[tau] < lower_bound."""
    taus = np.asarray(taus, dtype=float)
    if np.all(taus == taus[0]):
        return 0.0 if taus[0] < lower_bound else 1.0
    return float(stats.ttest_1samp(taus, lower_bound, alternative="less").pvalue)
