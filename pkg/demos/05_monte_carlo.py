"""Monte-Carlo check of delta-correctness and of the sample-complexity bound.

Each delta reuses the same seeded trajectories, so the sweep costs one batch.
As delta shrinks, E[tau] / (T log(1/delta)) should drift towards 1.
"""

import os

from evarbai.sim import BanditInstance, binomial_upper, delta_sweep

bandit = BanditInstance([{"bernoulli": 0.2}, {"bernoulli": 0.8}])
deltas = [0.1, 0.03, 0.01, 0.001]
summaries, _ = delta_sweep(bandit, 0.2, deltas, trials=100, base_seed=1,
                           parallelism=os.cpu_count() or 1)

print(f"T(mu) = {summaries[0].T:.5f}")
print("delta   errors  err<=(95%)  mean tau  lower bound  ratio")
for s in summaries:
    print(f"{s.delta:<7} {s.errors:>6} {binomial_upper(s.errors, s.trials):>10.4f} "
          f"{s.mean_tau:>9.1f} {s.lower_bound:>12.2f} {s.ratio:>6.3f}")
