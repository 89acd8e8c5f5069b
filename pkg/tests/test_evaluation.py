import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import enumerated_mw_pvalue
from scipy import stats

from permreg import (
    DegenerateDataError,
    InvalidInputError,
    ScenarioConfig,
    generate_scenario,
    mann_whitney,
    predict,
    r2_score,
    ridge_cv_baseline,
    run_benchmark,
)
from permreg.evaluation import exact_u_pvalue


class TestR2:
    def test_perfect(self, rng):
        y = rng.standard_normal(10)
        assert r2_score(y, y) == 1.0

    def test_mean_prediction(self, rng):
        y = rng.standard_normal(10)
        assert r2_score(y, np.full(10, y.mean())) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        assert r2_score([0.0, 2.0], [1.0, 1.0]) == 0.0

    def test_unsquared(self):
        # residual RMS is half the spread: 1 - 1/2, not 1 - 1/4
        y = np.array([-1.0, 1.0])
        assert r2_score(y, 0.5 * y) == pytest.approx(0.5)
        assert r2_score(y, 0.5 * y, conventional=True) == pytest.approx(0.75)

    def test_constant_truth(self):
        with pytest.raises(DegenerateDataError):
            r2_score(np.ones(5), np.zeros(5))

    @settings(max_examples=50)
    @given(st.integers(0, 10**6), st.floats(0.01, 100), st.floats(-100, 100))
    def test_affine_invariant(self, seed, scale, shift):
        r = np.random.default_rng(seed)
        y, yhat = r.standard_normal(20), r.standard_normal(20)
        assert r2_score(scale * y + shift, scale * yhat + shift) == pytest.approx(
            r2_score(y, yhat), rel=1e-9, abs=1e-9)


class TestMannWhitney:
    def test_identical_samples(self):
        a = [1.0, 2.0, 3.0, 4.0, 5.0]
        res = mann_whitney(a, a)
        assert res.statistic == 12.5 and res.pvalue >= 0.9

    def test_separated_samples(self):
        res = mann_whitney([1.0, 2.0, 3.0], [10.0, 11.0, 12.0])
        assert res.statistic == 0.0 and res.method == "exact"
        assert res.pvalue == pytest.approx(0.1)
        assert enumerated_mw_pvalue(np.array([1.0, 2, 3]), np.array([10.0, 11, 12])) == \
            pytest.approx(0.1)

    def test_exact_agrees_with_enumeration(self, rng):
        for _ in range(150):
            n1, n2 = rng.integers(1, 7, size=2)
            a, b = rng.standard_normal(n1), rng.standard_normal(n2)
            assert mann_whitney(a, b, "exact").pvalue == pytest.approx(
                enumerated_mw_pvalue(a, b), abs=1e-12)

    def test_asymptotic_agrees_with_scipy(self, rng):
        for _ in range(50):
            a = np.round(rng.standard_normal(rng.integers(2, 30)), 1)
            b = np.round(rng.standard_normal(rng.integers(2, 30)) + 0.3, 1)
            ref = stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
            ours = mann_whitney(a, b, "asymptotic")
            assert ours.statistic == ref.statistic
            assert ours.pvalue == pytest.approx(ref.pvalue, rel=1e-9)

    def test_normal_approximation_at_size_eight(self, rng):
        for _ in range(100):
            a, b = rng.standard_normal(8), rng.standard_normal(8) + rng.uniform(0, 2)
            assert abs(mann_whitney(a, b, "asymptotic").pvalue
                       - mann_whitney(a, b, "exact").pvalue) <= 0.03

    @settings(max_examples=60)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=12),
           st.lists(st.floats(-10, 10), min_size=1, max_size=12))
    def test_symmetry(self, a, b):
        ab, ba = mann_whitney(a, b), mann_whitney(b, a)
        assert ab.statistic + ba.statistic == pytest.approx(len(a) * len(b))
        assert ab.pvalue == pytest.approx(ba.pvalue, rel=1e-12)
        assert 0.0 <= ab.pvalue <= 1.0

    def test_ties_use_normal_approximation(self):
        assert mann_whitney([1.0, 1.0, 2.0], [1.0, 3.0]).method == "asymptotic"
        with pytest.raises(InvalidInputError):
            mann_whitney([1.0, 1.0], [1.0], "exact")

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            mann_whitney([], [1.0])

    def test_exact_distribution_sums_to_one(self):
        # the two-sided p-value of the central U is 1
        assert exact_u_pvalue(12, 4, 6) == 1.0


@pytest.fixture(scope="module")
def data():
    return generate_scenario(ScenarioConfig("B", seed=8))


class TestRidgeCV:
    def test_singleton_grid(self, data):
        lam, _, _, _ = ridge_cv_baseline(data[0], lambda_grid=[3.3])
        assert lam == 3.3

    def test_noiseless_recovery(self):
        tr, _, _ = generate_scenario(ScenarioConfig("B", sigma=0.0, seed=1))
        grid = np.logspace(-4, 4, 25)
        lam, beta, _, meta = ridge_cv_baseline(tr, lambda_grid=grid)
        assert lam == grid[0]
        assert r2_score(tr.Y, predict(beta, tr.X, meta)) >= 0.999

    def test_duplicate_grid(self, data):
        a = ridge_cv_baseline(data[0], lambda_grid=[0.1, 1.0, 10.0], seed=2)
        b = ridge_cv_baseline(data[0], lambda_grid=[10.0, 0.1, 1.0, 1.0, 0.1], seed=2)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1], b[1])

    @pytest.mark.parametrize("kw", [{"k": 1}, {"lambda_grid": []}, {"lambda_grid": [-1.0]}])
    def test_invalid(self, data, kw):
        with pytest.raises(InvalidInputError):
            ridge_cv_baseline(data[0], **kw)


class TestBenchmark:
    def test_minimal(self):
        rep = run_benchmark(["bkk", "ridgecv"], ScenarioConfig("A"), M=2, seed=0)
        assert rep.methods == ["bkk", "ridgecv"]
        assert all(len(rep.scores[m]) == 2 for m in rep.methods)
        d = json.loads(rep.to_json())
        assert set(d) >= {"dataset", "M", "methods", "scores", "mw", "timing"}
        assert list(d["mw"]) == ["bkk|ridgecv"]
        assert len(d["timing"]["runtimes"][0]) == 2
        lines = rep.to_csv().strip().splitlines()
        assert len(lines) == 1 + 2 * 2

    def test_rejects_single_repetition(self):
        with pytest.raises(InvalidInputError):
            run_benchmark(["bkk"], ScenarioConfig("A"), M=1)

    def test_unknown_method(self):
        with pytest.raises(InvalidInputError):
            run_benchmark(["lasso"], ScenarioConfig("A"), M=2)

    def test_same_seeds_same_scores(self):
        a = run_benchmark(["sbkk"], ScenarioConfig("B"), M=6, seed=3)
        b = run_benchmark(["sbkk"], ScenarioConfig("B"), M=6, seed=3)
        assert a.scores == b.scores
        assert mann_whitney(a.scores["sbkk"], b.scores["sbkk"]).pvalue >= 0.9
        assert a.to_json(include_timing=False) == b.to_json(include_timing=False)

    def test_dataset_source(self, rng):
        from permreg import Dataset
        X = rng.standard_normal((60, 4))
        D = Dataset(X, X @ np.ones(4) + rng.standard_normal(60), name="toy")
        rep = run_benchmark(["bkk", "ols"], D, M=3, seed=1, conventional_r2=True)
        assert rep.dataset == "toy"
        assert len(rep.scores_conventional["ols"]) == 3
        assert "r2_conventional" in rep.to_csv().splitlines()[0]

    def test_parallel_matches_serial(self):
        a = run_benchmark(["bkk"], ScenarioConfig("C"), M=4, seed=2)
        b = run_benchmark(["bkk"], ScenarioConfig("C"), M=4, seed=2, jobs=2)
        assert a.to_json(include_timing=False) == b.to_json(include_timing=False)
