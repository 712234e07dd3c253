import math

import numpy as np
import pytest

from evarbai.evar import evar
from evarbai.klinf import klinf_value
from evarbai.measures import DiscreteDistribution, RiskLevel
from evarbai.oracle import (
    DegenerateInstanceError,
    characteristic_time,
    pairwise_g,
    phi_value,
    sample_complexity_lower_bound,
)

# dense x-grid (1e4 points) over primal-grid projection tables, frozen
G_HALF_GRID = 0.19277475952185752
# exhaustive t in {0, 1/500, ..., 1} on the same x-grid, frozen
T2_GRID = 0.19277475952185752
# tmu_grid, 3-arm simplex step 1/1000, frozen
T3_GRID = 0.09543118339606554

B = DiscreteDistribution.bernoulli
TWO = [B(0.2), B(0.8)]
THREE = [B(0.1), B(0.5), B(0.9)]
MIXED = [DiscreteDistribution([0.0, 0.4, 1.0], [0.3, 0.5, 0.2]),
         DiscreteDistribution([0.0, 0.6, 1.0], [0.2, 0.3, 0.5])]


class TestPairwise:
    def test_degenerate_interval(self):
        assert pairwise_g(B(0.4), B(0.4), 0.5, 0.5, 0.2)[0] == 0.0

    def test_zero_weights(self):
        assert pairwise_g(B(0.2), B(0.8), 0.0, 0.0, 0.2)[0] == 0.0

    def test_dense_grid(self):
        v, x = pairwise_g(B(0.2), B(0.8), 0.5, 0.5, 0.2)
        assert v == pytest.approx(G_HALF_GRID, abs=1e-3)
        assert evar(B(0.2), 0.2).value <= x <= evar(B(0.8), 0.2).value

    def test_misordered(self):
        with pytest.raises(ValueError, match="wrong order"):
            pairwise_g(B(0.8), B(0.2), 0.5, 0.5, 0.2)

    def test_generic_path_matches_grid(self):
        r = RiskLevel(0.3)
        a, b = MIXED
        v, x = pairwise_g(a, b, 0.4, 0.6, r)
        xs = np.linspace(evar(a, r).value, evar(b, r).value, 201)
        dense = min(0.4 * klinf_value("upper", a, t, r) + 0.6 * klinf_value("lower", b, t, r)
                    for t in xs)
        assert v <= dense + 1e-9
        assert v == pytest.approx(dense, abs=1e-6)

    def test_one_sided_weight(self):
        # only the best arm is weighted: its projection vanishes at its own EVaR
        assert pairwise_g(B(0.2), B(0.8), 1.0, 0.0, 0.2)[0] == pytest.approx(0.0, abs=1e-12)


class TestCharacteristicTime:
    def test_two_arms(self):
        sol = characteristic_time(TWO, 0.2)
        assert sol.characteristic_time == pytest.approx(T2_GRID, rel=1e-3)
        assert sol.weights.sum() == pytest.approx(1.0, abs=1e-10)
        assert sol.characteristic_time == pytest.approx(
            min(c.g_value for c in sol.per_alternative), abs=1e-8)

    def test_three_arms(self):
        sol = characteristic_time(THREE, 0.3)
        assert sol.characteristic_time == pytest.approx(T3_GRID, rel=2e-3)
        e = [evar(d, 0.3).value for d in THREE]
        for c in sol.per_alternative:
            assert e[sol.best_arm] - 1e-12 <= c.x <= e[c.arm] + 1e-12

    def test_identical_arms(self):
        with pytest.raises(DegenerateInstanceError):
            characteristic_time([B(0.5), B(0.5)], 0.2)

    def test_mirror_ascent_agrees(self):
        lp = characteristic_time(THREE, 0.3)
        md = characteristic_time(THREE, 0.3, method="mirror", iterations=500)
        assert md.characteristic_time <= lp.characteristic_time + 1e-9
        assert md.characteristic_time == pytest.approx(lp.characteristic_time, rel=1e-2)

    def test_generic_laws(self):
        sol = characteristic_time(MIXED, 0.3)
        assert sol.characteristic_time > 0
        assert sol.upper_bound - sol.characteristic_time <= 1e-8

    def test_optimality_certificate(self, rng):
        sol = characteristic_time(THREE, 0.3)
        for t in rng.dirichlet(np.ones(3), size=200):
            assert phi_value(THREE, 0.3, t)[0] <= sol.characteristic_time + 1e-4

    def test_concavity(self, rng):
        for _ in range(30):
            t, u = rng.dirichlet(np.ones(3), size=2)
            pt, pu = phi_value(THREE, 0.3, t)[0], phi_value(THREE, 0.3, u)[0]
            for lam in (0.25, 0.5, 0.75):
                mid = phi_value(THREE, 0.3, lam * t + (1 - lam) * u)[0]
                assert mid >= lam * pt + (1 - lam) * pu - 1e-6

    def test_permutation(self):
        base = characteristic_time(THREE, 0.3)
        for perm in ([2, 0, 1], [1, 2, 0], [0, 2, 1]):
            other = characteristic_time([THREE[i] for i in perm], 0.3)
            np.testing.assert_array_equal(other.weights, base.weights[perm])
            assert other.characteristic_time == base.characteristic_time
            assert other.best_arm == perm.index(base.best_arm)

    def test_stability(self, rng):
        base = characteristic_time(TWO, 0.2).characteristic_time
        for _ in range(5):
            eps = rng.uniform(-5e-5, 5e-5, 2)
            pert = [B(0.2 + eps[0]), B(0.8 + eps[1])]
            assert abs(characteristic_time(pert, 0.2).characteristic_time - base) <= 0.05


class TestLowerBound:
    def test_quarter(self):
        assert sample_complexity_lower_bound(TWO, 0.2, 0.25) == 0.0

    def test_arithmetic(self):
        class Fixed:
            characteristic_time = 0.5
        v = sample_complexity_lower_bound(TWO, 0.2, 0.025, solution=Fixed())
        assert v == pytest.approx(2 * math.log(10))
        assert v == pytest.approx(4.60517, abs=1e-5)

    def test_composition(self):
        v = sample_complexity_lower_bound(TWO, 0.2, 0.01)
        assert v == pytest.approx(math.log(25) / T2_GRID, rel=1e-3)

    def test_degenerate_is_infinite(self):
        assert sample_complexity_lower_bound([B(0.5), B(0.5)], 0.2, 0.1) == math.inf
