import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evarbai.measures import (
    DiscreteDistribution,
    RiskLevel,
    esscher_tilt,
    kl_divergence,
    log_mgf,
    tilted_mean,
    tilted_variance,
)

from conftest import random_law


@st.composite
def laws(draw, max_atoms=4):
    n = draw(st.integers(1, max_atoms))
    locs = draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    w = draw(st.lists(st.floats(0.01, 1), min_size=n, max_size=n))
    w = np.array(w) / sum(w)
    return DiscreteDistribution(locs, w)


class TestConstruction:
    def test_merges_close_atoms(self):
        d = DiscreteDistribution([0.5, 0.5 + 1e-13, 1.0], [0.25, 0.25, 0.5])
        assert d.size == 2
        assert d.mass_at(0.5) == pytest.approx(0.5)

    def test_drops_tiny_masses(self):
        d = DiscreteDistribution([0.0, 1.0], [1.0, 1e-16])
        assert d.is_point_mass and d.x_max == 0.0

    @pytest.mark.parametrize("locs,masses,msg", [
        ([1.5], [1.0], "lie in"),
        ([0.2], [-1.0], "nonnegative|sum"),
        ([0.2, 0.3], [0.5, 0.6], "sum to"),
        ([], [], "at least one"),
    ])
    def test_rejects_bad_input(self, locs, masses, msg):
        with pytest.raises(ValueError, match=msg):
            DiscreteDistribution(locs, masses)

    def test_literal_round_trip(self):
        d = DiscreteDistribution.from_pairs([[0.0, 0.5], [1.0, 0.5]])
        assert d == DiscreteDistribution.bernoulli(0.5)
        assert DiscreteDistribution.from_pairs(d.to_pairs()) == d

    def test_from_samples_is_exact_histogram(self):
        d = DiscreteDistribution.from_samples([0.1, 0.1, 0.7, 0.1])
        assert d.to_pairs() == [[0.1, 0.75], [0.7, 0.25]]

    def test_hash_consistent_with_eq(self):
        a = DiscreteDistribution([1.0, 0.0], [0.3, 0.7])
        b = DiscreteDistribution.bernoulli(0.3)
        assert a == b and hash(a) == hash(b)

    def test_immutable(self):
        d = DiscreteDistribution.bernoulli(0.3)
        with pytest.raises(ValueError):
            d.masses[0] = 0.5


class TestRiskLevel:
    def test_rho(self):
        assert RiskLevel(0.5).rho == pytest.approx(math.log(2), abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.2])
    def test_range(self, alpha):
        with pytest.raises(ValueError, match="alpha"):
            RiskLevel(alpha)


class TestPrimitives:
    def test_log_mgf_examples(self):
        assert log_mgf(DiscreteDistribution.point_mass(0.3), 2.0) == pytest.approx(0.6, abs=1e-15)
        assert log_mgf(DiscreteDistribution.bernoulli(0.7), 0.0) == 0.0
        assert log_mgf(DiscreteDistribution.bernoulli(0.5), 1.0) == pytest.approx(0.620115, abs=1e-6)

    def test_tilted_moments_examples(self):
        fair = DiscreteDistribution.bernoulli(0.5)
        assert tilted_mean(DiscreteDistribution.point_mass(0.4), 3.0) == pytest.approx(0.4)
        assert tilted_mean(fair, 0.0) == pytest.approx(0.5)
        assert tilted_mean(fair, 1.0) == pytest.approx(0.731059, abs=1e-6)
        assert tilted_variance(DiscreteDistribution.point_mass(0.4), 2.0) == 0.0
        assert tilted_variance(fair, 0.0) == pytest.approx(0.25)
        assert tilted_variance(fair, 1.0) == pytest.approx(0.196612, abs=1e-6)

    def test_kl_examples(self):
        p = DiscreteDistribution.bernoulli(0.5)
        assert kl_divergence(p, p) == 0.0
        assert kl_divergence(DiscreteDistribution.point_mass(1.0),
                             DiscreteDistribution.point_mass(0.0)) == math.inf
        expected = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)
        assert kl_divergence(p, DiscreteDistribution.bernoulli(0.25)) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.143841, abs=1e-6)

    def test_log_mgf_convex_nondecreasing(self, rng):
        z = np.linspace(-5, 20, 400)
        for _ in range(20):
            d = random_law(rng)
            v = np.array([log_mgf(d, x) for x in z])
            assert np.all(np.diff(v[z >= 0]) >= -1e-12)
            assert np.all(np.diff(v, 2) >= -1e-9)

    def test_tilted_mean_is_derivative(self, rng):
        h = 1e-5
        for _ in range(20):
            d = random_law(rng)
            for z in (0.0, 0.7, 4.0):
                fd = (log_mgf(d, z + h) - log_mgf(d, z - h)) / (2 * h)
                assert tilted_mean(d, z) == pytest.approx(fd, abs=1e-6)

    def test_large_z_is_stable(self):
        d = DiscreteDistribution.bernoulli(1e-3)
        assert log_mgf(d, 1e5) == pytest.approx(1e5 + math.log(1e-3))


class TestEsscher:
    def test_identity_and_zero(self, bern):
        d = bern(0.4)
        assert esscher_tilt(d, 0.0) == d
        pm = DiscreteDistribution.point_mass(0.6)
        assert esscher_tilt(pm, 3.0) == pm
        assert kl_divergence(pm, esscher_tilt(pm, 3.0)) == 0.0

    def test_rejects_negative(self, bern):
        with pytest.raises(ValueError):
            esscher_tilt(bern(0.5), -1.0)

    @settings(max_examples=60, deadline=None)
    @given(laws(), st.sampled_from([0.0, 0.5, 1.0, 5.0]))
    def test_kl_identity_and_bound(self, d, t):
        kl = kl_divergence(d, esscher_tilt(d, t))
        assert kl == pytest.approx(log_mgf(d, -t) + t * d.mean, abs=1e-10)
        assert kl <= t + 1e-12


@settings(max_examples=60, deadline=None)
@given(laws(), laws())
def test_kl_nonnegative(p, q):
    assert kl_divergence(p, q) >= 0.0
    assert kl_divergence(p, p) == 0.0
