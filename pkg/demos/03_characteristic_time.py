"""Oracle weights and the characteristic time T(mu).

T(mu) is the max-min rate at which evidence against the closest alternative
accumulates under the best sampling proportions. log(1/(4 delta)) / T(mu)
lower-bounds the expected sample count of any delta-correct strategy.
"""

from evarbai import DiscreteDistribution, characteristic_time, sample_complexity_lower_bound
from evarbai.oracles import tmu_grid

B = DiscreteDistribution.bernoulli
instances = {
    "Bern(.2) vs Bern(.8), alpha .2": ([B(0.2), B(0.8)], 0.2),
    "Bern(.2) vs Bern(.4), alpha .2": ([B(0.2), B(0.4)], 0.2),
    "three Bernoulli arms, alpha .3": ([B(0.1), B(0.5), B(0.9)], 0.3),
}

for name, (laws, alpha) in instances.items():
    sol = characteristic_time(laws, alpha)
    w = ", ".join(f"{x:.4f}" for x in sol.weights)
    lb = sample_complexity_lower_bound(laws, alpha, 0.01, sol)
    print(f"{name}\n  T = {sol.characteristic_time:.6f},"
          f" weights [{w}], lower bound at delta=.01: {lb:.1f} pulls")

laws, alpha = instances["Bern(.2) vs Bern(.8), alpha .2"]
print(f"\nbrute-force grid value for the first instance: {tmu_grid(laws, alpha):.6f}")
