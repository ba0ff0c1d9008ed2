from dataclasses import replace
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdi_glrt.arnoise import ArNoiseModel
from fdi_glrt.detection import glrt_white
from fdi_glrt.estimation import wls_estimate
from fdi_glrt.experiment import (
    H0, H1, AttackSpec, Scenario, ScoreRow, ScoreTable, auc_summary, mse_eval, perturb_states,
    robustness_study, roc, run_experiment, run_trial, simulate_observations,
)
from fdi_glrt.grid import MeasurementMatrix, decompose_attack


def pairwise_auc(h0, h1):
    """P(s1 > s0) + P(s1 == s0) / 2 by brute force."""
    wins = sum((b > a) + 0.5 * (b == a) for a, b in product(h0, h1))
    return wins / (len(h0) * len(h1))


@pytest.fixture
def small(rng):
    mm = MeasurementMatrix.from_H(rng.standard_normal((30, 5)))
    return Scenario(mm, ArNoiseModel((0.9,), 0.5), n=10, trials=20,
                    attack=AttackSpec("sparse", 1.0, 3), master_seed=3)


class TestTrials:
    def test_deterministic(self, small):
        assert run_trial(small, 4, H1) == run_trial(small, 4, H1)

    def test_hypotheses_differ(self, small):
        assert run_trial(small, 4, H0) != run_trial(small, 4, H1)

    def test_noiseless_null(self, small):
        # statistics are normalized by the noise variance, so shrinking it does
        # not shrink them; feed the noise-free block instead
        _, theta, a = simulate_observations(small, 0, H0)
        X = np.repeat((small.mm.H @ theta + a)[:, None], small.n, axis=1)
        for _, v in small.evaluate(X):
            assert v <= 1e-9

    def test_noiseless_sparse_attack(self, small):
        sc = replace(small, noise=ArNoiseModel.white(1e-24))
        X, _, a = simulate_observations(sc, 2, H1)
        assert np.count_nonzero(a) == 3
        t = glrt_white(sc.mm, X.mean(axis=1))[0].value
        dec = decompose_attack(sc.mm, a)
        assert t == pytest.approx(dec.theta_b @ dec.theta_b, rel=1e-8)

    def test_null_has_no_attack(self, small):
        _, _, a = simulate_observations(small, 1, H0)
        assert not a.any()

    def test_fixed_attack_shared(self, small):
        sc = replace(small, attack=replace(small.attack, fixed=True))
        a1 = simulate_observations(sc, 1, H1)[2]
        a2 = simulate_observations(sc, 7, H1)[2]
        np.testing.assert_array_equal(a1, a2)

    def test_unknown_hypothesis(self, small):
        with pytest.raises(ValueError):
            run_trial(small, 0, "H2")

    def test_ica_trial(self, small):
        sc = replace(small, attack=AttackSpec("ica", 1.0, sigma_y2=0.5))
        _, _, a = simulate_observations(sc, 0, H1)
        assert a.shape == (30,) and np.isfinite(a).all() and a.any()


class TestExperiment:
    def test_one_trial_one_detector(self, small):
        table = run_experiment(replace(small, trials=1, detectors=("ar",)))
        assert len(table) == 2 and [r.hypothesis for r in table.rows] == [H0, H1]

    def test_reproducible(self, small):
        assert run_experiment(small).to_csv() == run_experiment(small).to_csv()

    def test_thread_count_irrelevant(self, small):
        assert run_experiment(small, threads=1).to_csv() == run_experiment(small, threads=4).to_csv()

    def test_seed_matters(self, small):
        assert run_experiment(small) != run_experiment(replace(small, master_seed=4))

    def test_csv_round_trip(self, small):
        table = run_experiment(small)
        assert ScoreTable.from_csv(table.to_csv()) == table

    @pytest.mark.parametrize("text", [
        "a,b,c,d\n",
        "trial,detector,hypothesis,statistic\n0,ar,H3,1.0\n",
        "trial,detector,hypothesis,statistic\n0,ar,H0\n",
        "trial,detector,hypothesis,statistic\n0,ar,H0,nan\n",
        "trial,detector,hypothesis,statistic\nx,ar,H0,1\n",
    ])
    def test_bad_csv(self, text):
        with pytest.raises(ValueError):
            ScoreTable.from_csv(text)

    @pytest.mark.slow
    def test_null_vs_null_auc(self, rng):
        mm = MeasurementMatrix.from_H(rng.standard_normal((40, 8)))
        sc = Scenario(mm, ArNoiseModel.white(1.0), n=5, trials=1000, master_seed=2)
        for d, auc in auc_summary(run_experiment(sc)).items():
            assert abs(auc - 0.5) <= 0.05, d


class TestRoc:
    def test_perfect(self):
        assert roc([1, 2], [3, 4]).auc == 1.0

    def test_identical(self):
        assert roc([1, 2, 3], [1, 2, 3]).auc == 0.5

    def test_interleaved(self):
        assert roc([1, 3], [2, 4]).auc == 0.75

    def test_endpoints(self):
        c = roc([1, 3], [2, 4])
        assert (c.pfa[0], c.pd[0]) == (1.0, 1.0) and (c.pfa[-1], c.pd[-1]) == (0.0, 0.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            roc([], [1.0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 8), min_size=1, max_size=15),
           st.lists(st.integers(0, 8), min_size=1, max_size=15))
    def test_pairwise_oracle_and_monotone(self, h0, h1):
        c = roc(h0, h1)
        assert c.auc == pytest.approx(pairwise_auc(h0, h1), abs=1e-12)
        assert np.all(np.diff(c.pfa) <= 0) and np.all(np.diff(c.pd) <= 0)

    def test_summary_per_detector(self):
        rows = [ScoreRow(0, "g", H0, 1.0), ScoreRow(0, "g", H1, 2.0),
                ScoreRow(0, "ar", H0, 2.0), ScoreRow(0, "ar", H1, 1.0)]
        assert auc_summary(ScoreTable(rows)) == {"g": 1.0, "ar": 0.0}


class TestMse:
    def test_exact_fit(self, mm10x4, rng):
        theta = rng.standard_normal(4)
        X = np.repeat((mm10x4.H @ theta)[:, None], 5, axis=1)
        assert mse_eval(X, mm10x4, theta) == pytest.approx(0, abs=1e-12)

    def test_single_residual(self):
        H = np.array([[1.0], [0.0], [0.0]])
        X = np.array([[2.0], [0.0], [3.0]])
        assert mse_eval(X, H, np.array([2.0])) == 3.0

    def test_column_loop(self, mm10x4, rng):
        X = rng.standard_normal((10, 6))
        est = wls_estimate(mm10x4, 1.0, X.mean(axis=1))
        loop = np.mean([np.linalg.norm(X[:, n] - mm10x4.H @ est.theta_hat) for n in range(6)])
        assert mse_eval(X, mm10x4, est) == pytest.approx(loop, rel=1e-12)
        loop2 = np.mean([np.sum((X[:, n] - mm10x4.H @ est.theta_hat) ** 2) for n in range(6)])
        assert mse_eval(X, mm10x4, est, squared=True) == pytest.approx(loop2, rel=1e-12)

    def test_shape_mismatch(self, mm10x4):
        with pytest.raises(ValueError):
            mse_eval(np.ones((9, 2)), mm10x4, np.ones(4))


class TestPerturb:
    def test_rho_zero(self, rng):
        theta = rng.standard_normal(6)
        np.testing.assert_array_equal(perturb_states(theta, 0.0, rng), theta)

    def test_band(self, rng):
        theta = np.ones(60)
        r = perturb_states(theta, 0.05, rng)
        assert np.all((r >= 0.95) & (r <= 1.05))

    def test_mean(self, rng):
        draws = np.array([perturb_states(np.full(3, 2.0), 0.05, rng) for _ in range(10_000)])
        # uniform on [1.9, 2.1]: sd 0.2/sqrt(12)
        se = 0.2 / np.sqrt(12) / np.sqrt(10_000)
        assert np.all(np.abs(draws.mean(axis=0) - 2.0) <= 4 * se)

    def test_negative(self, rng):
        with pytest.raises(ValueError):
            perturb_states(np.ones(2), -0.1, rng)


def test_robustness_small(small):
    res = robustness_study(replace(small, trials=30), 0.05)
    assert res.max_auc_change <= 0.05
    assert res.mse_relative_change <= 0.10


def test_scenario_validation(small):
    with pytest.raises(ValueError):
        replace(small, detectors=("bogus",))
    with pytest.raises(ValueError):
        replace(small, noise=(ArNoiseModel.white(1.0),) * 3)
    with pytest.raises(ValueError):
        replace(small, attack=AttackSpec("sparse", 1.0, 31))
