"""One Track-and-Stop run, step by step.

The learner pulls by C-tracking of the plug-in oracle weights and stops once
the GLR statistic clears the threshold beta(n, delta).
"""

from evarbai.sim import BanditInstance, arm_streams, sample
from evarbai.tas import TrackAndStopState, choose_arm, glrt_statistic, step, threshold

alpha, delta = 0.2, 0.05
bandit = BanditInstance([{"bernoulli": 0.2}, {"bernoulli": 0.5}, {"bernoulli": 0.8}])
streams = arm_streams(seed=7, K=bandit.K)
state = TrackAndStopState(bandit.K, delta)

while True:
    arm = choose_arm(state, alpha)
    decision = step(state, (arm, sample(bandit, arm, streams[arm])), alpha)
    if state.n % 50 == 0 or decision.stopped:
        z, leader = glrt_statistic(state, alpha)
        print(f"n={state.n:5d} counts={[int(c) for c in state.counts]} leader={leader} "
              f"Z={z:8.3f} beta={threshold(state.n, delta, bandit.K):7.3f}")
    if decision.stopped:
        break

print(f"\nstopped after {state.n} pulls recommending arm {decision.recommended}"
      f" (true best: {bandit.best_arm(alpha)})")
