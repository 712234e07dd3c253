"""EVaR of a few small laws, and the two regimes it can land in.

When the top atom carries at least 1 - alpha of the mass the EVaR equals
that atom (boundary regime). Otherwise it is the value at an interior
minimizer z*.
"""

from evarbai import DiscreteDistribution, evar
from evarbai.oracles import evar_grid

laws = {
    "Bernoulli(0.3)": DiscreteDistribution.bernoulli(0.3),
    "three atoms": DiscreteDistribution([0.0, 0.4, 1.0], [0.5, 0.3, 0.2]),
    "heavy top": DiscreteDistribution([0.2, 0.9], [0.1, 0.9]),
}

for alpha in (0.05, 0.2, 0.5):
    print(f"alpha = {alpha}")
    for name, d in laws.items():
        res = evar(d, alpha)
        z = "-" if res.minimizer is None else f"{res.minimizer:.4f}"
        print(f"  {name:15s} EVaR {res.value:.6f}  regime {res.regime:8s}  z* {z}"
              f"  (grid check {evar_grid(d, alpha):.6f})")
