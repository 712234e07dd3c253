import numpy as np
import pytest

from evarbai.evar import evar
from evarbai.measures import DiscreteDistribution
from evarbai.oracle import DegenerateInstanceError
from evarbai.sim import (
    BanditInstance,
    BetaQuantizedArm,
    arm_from_spec,
    arm_streams,
    binomial_upper,
    delta_sweep,
    lower_bound_t_test,
    monte_carlo,
    run_trial,
    sample,
    trial_seed,
)

STANDARD = BanditInstance([{"bernoulli": 0.2}, {"bernoulli": 0.8}])


class TestSampling:
    def test_point_mass(self):
        inst = BanditInstance([{"discrete": [[0.3, 1.0]]}, {"bernoulli": 1.0}])
        rng0, rng1 = arm_streams(0, 2)
        assert all(sample(inst, 0, rng0) == 0.3 for _ in range(50))
        assert all(sample(inst, 1, rng1) == 1.0 for _ in range(50))

    def test_bernoulli_mean(self):
        inst = BanditInstance([{"bernoulli": 0.5}, {"bernoulli": 0.5}])
        (rng,) = arm_streams(11, 1)
        draws = [sample(inst, 0, rng) for _ in range(100_000)]
        assert abs(np.mean(draws) - 0.5) <= 0.006

    def test_discrete_frequencies(self):
        arm = arm_from_spec({"discrete": [[0.1, 0.2], [0.5, 0.5], [0.9, 0.3]]})
        (rng,) = arm_streams(3, 1)
        draws = np.array([arm.draw(rng) for _ in range(20_000)])
        for x, m in ((0.1, 0.2), (0.5, 0.5), (0.9, 0.3)):
            assert abs(np.mean(draws == x) - m) < 0.015

    def test_beta_quantized_on_grid(self):
        arm = BetaQuantizedArm(2.0, 5.0, 0.01)
        (rng,) = arm_streams(5, 1)
        draws = np.array([arm.draw(rng) for _ in range(2000)])
        assert np.all((draws >= 0) & (draws <= 1))
        assert np.allclose(draws * 100, np.round(draws * 100), atol=1e-9)
        law = arm.law()
        assert law.mean == pytest.approx(2 / 7, abs=1e-4)
        assert abs(draws.mean() - law.mean) < 0.02

    def test_streams_depend_on_arm_and_seed(self):
        a0, a1 = arm_streams(1, 2)
        b0, _ = arm_streams(1, 2)
        c0, _ = arm_streams(2, 2)
        x = a0.random(4)
        assert np.array_equal(x, b0.random(4))
        assert not np.array_equal(x, a1.random(4))
        assert not np.array_equal(x, c0.random(4))

    @pytest.mark.parametrize("spec,msg", [
        ({"poisson": 1}, "unknown arm"),
        ({"bernoulli": 1.5}, "outside"),
        ({"beta_quantized": {"a": 1, "b": 1, "grid": 0.3}}, "divide"),
        ({"beta_quantized": {"a": 1, "b": 1, "c": 1}}, "unknown"),
        ([1, 2], "one-key"),
    ])
    def test_bad_specs(self, spec, msg):
        with pytest.raises(ValueError, match=msg):
            arm_from_spec(spec)


class TestTrials:
    def test_record_consistency(self):
        rec = run_trial(STANDARD, 0.2, 0.1, seed=42)
        assert rec.correct == (rec.recommended == 0)
        assert sum(rec.counts) == rec.tau

    def test_single_trial_matches_run(self):
        summary, recs = monte_carlo(STANDARD, 0.2, 0.1, trials=1, base_seed=9)
        direct = run_trial(STANDARD, 0.2, 0.1, seed=trial_seed(9, 0))
        assert (recs[0].tau, recs[0].recommended, recs[0].counts) == (
            direct.tau, direct.recommended, direct.counts)
        assert summary.mean_tau == direct.tau

    def test_degenerate_rejected(self):
        inst = BanditInstance([{"bernoulli": 0.5}, {"bernoulli": 0.5}])
        with pytest.raises(DegenerateInstanceError):
            monte_carlo(inst, 0.2, 0.1, trials=2)

    def test_parallel_identical(self):
        a, _ = monte_carlo(STANDARD, 0.2, 0.1, trials=12, base_seed=4, parallelism=1)
        b, _ = monte_carlo(STANDARD, 0.2, 0.1, trials=12, base_seed=4, parallelism=3)
        assert a.csv_row() == b.csv_row()

    def test_sweep_shares_trajectories(self):
        sums, recs = delta_sweep(STANDARD, 0.2, [0.1, 0.01], trials=10, base_seed=1)
        for hi, lo in zip(recs[0], recs[1]):
            assert hi.tau <= lo.tau
        single, _ = monte_carlo(STANDARD, 0.2, 0.01, trials=10, base_seed=1)
        assert single.csv_row() == sums[1].csv_row()
        assert sums[0].ratio > 0 and np.isfinite(sums[0].ratio)

    def test_quantized_truth(self):
        inst = BanditInstance([{"beta_quantized": {"a": 2, "b": 5, "grid": 0.1}},
                               {"beta_quantized": {"a": 5, "b": 2, "grid": 0.1}}])
        e = inst.evars(0.2)
        assert e[0] == evar(inst.laws[0], 0.2).value < e[1]
        assert inst.best_arm(0.2) == 0


class TestStatistics:
    def test_binomial_upper(self):
        assert binomial_upper(0, 500) == pytest.approx(1 - 0.05 ** (1 / 500), rel=1e-9)
        assert binomial_upper(5, 5) == 1.0

    def test_t_test(self):
        assert lower_bound_t_test([10, 12, 14, 11], 5.0) > 0.5
        assert lower_bound_t_test([1, 2, 1, 2], 50.0) < 0.05
