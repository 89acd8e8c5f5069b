import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permreg import CSVParseError, Dataset, InvalidInputError, ScenarioConfig, generate_scenario
from permreg import load_csv, split
from permreg.data import ar1_covariance, save_csv


class TestScenarios:
    def test_defaults(self):
        cfg = ScenarioConfig("b")
        assert (cfg.scenario, cfg.n_train, cfg.n_test, cfg.p, cfg.sigma) == ("B", 100, 1000, 80, 10)
        assert cfg.resolved_rho == 0.0 and ScenarioConfig("C").resolved_rho == 0.9

    def test_shapes(self):
        tr, te, beta = generate_scenario(ScenarioConfig("A", seed=1))
        assert tr.X.shape == (100, 80) and te.X.shape == (1000, 80)
        np.testing.assert_array_equal(beta, 1.0)

    @pytest.mark.parametrize("sc", ["B", "C"])
    def test_sparse_truth(self, sc):
        _, _, beta = generate_scenario(ScenarioConfig(sc))
        assert np.count_nonzero(beta) == 10 and set(beta[beta != 0]) == {10.0}

    def test_independent_features_in_b(self):
        tr, _, _ = generate_scenario(ScenarioConfig("B", n_train=2000, n_test=2, seed=4))
        C = np.corrcoef(tr.X, rowvar=False)
        off = C[~np.eye(80, dtype=bool)]
        assert np.max(np.abs(off)) <= 0.15

    def test_noiseless(self):
        tr, te, beta = generate_scenario(ScenarioConfig("B", sigma=0.0, seed=2))
        np.testing.assert_array_equal(tr.Y, tr.X @ beta)

    def test_reproducible(self):
        a = generate_scenario(ScenarioConfig("C", seed=9))
        b = generate_scenario(ScenarioConfig("C", seed=9))
        assert a[0].X.tobytes() == b[0].X.tobytes() and a[1].Y.tobytes() == b[1].Y.tobytes()

    def test_train_and_test_streams_differ(self):
        tr, te, _ = generate_scenario(ScenarioConfig("A", n_train=50, n_test=50, seed=0))
        assert not np.allclose(tr.X, te.X)

    def test_covariance_small_p(self):
        tr, _, _ = generate_scenario(ScenarioConfig("A", n_train=5000, n_test=2, p=5, seed=0))
        S = np.cov(tr.X, rowvar=False, bias=True)
        assert np.linalg.norm(S - ar1_covariance(5, 0.9)) <= 0.1

    def test_covariance_entries_full_p(self):
        tr, _, _ = generate_scenario(ScenarioConfig("C", n_train=5000, n_test=2, seed=0))
        S = np.cov(tr.X, rowvar=False, bias=True)
        assert np.max(np.abs(S - ar1_covariance(80, 0.9))) <= 0.1

    def test_wide(self):
        tr, _, beta = generate_scenario(ScenarioConfig("B", n_train=50, wide=True))
        assert tr.n < tr.p == 200 and beta.size == 200

    @pytest.mark.parametrize("kw", [{"scenario": "D"}, {"sparsity": 81, "scenario": "B"},
                                    {"rho": 1.0}, {"sigma": -1.0}, {"n_train": 1}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidInputError):
            ScenarioConfig(**kw)


def write(path, text):
    path.write_text(text)
    return path


class TestCSV:
    def test_toy(self, tmp_path):
        D = load_csv(write(tmp_path / "t.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n"), "y")
        assert D.X.shape == (3, 2) and D.Y.tolist() == [3, 6, 9]
        assert list(D.feature_names) == ["a", "b"]

    def test_target_in_middle(self, tmp_path):
        D = load_csv(write(tmp_path / "t.csv", "a,y,b\n1,2,3\n4,5,6\n"), "y")
        assert D.X.tolist() == [[1, 3], [4, 6]] and D.Y.tolist() == [2, 5]

    def test_non_numeric_cell(self, tmp_path):
        rows = "\n".join(f"{i},{i},{i}" for i in range(4))
        path = write(tmp_path / "t.csv", f"a,b,y\n{rows}\n5,oops,5\n")
        with pytest.raises(CSVParseError) as info:
            load_csv(path, "y")
        assert (info.value.row, info.value.column) == (5, "b")
        assert "row 5" in str(info.value)

    def test_semicolon(self, tmp_path):
        a = load_csv(write(tmp_path / "c.csv", "a,b,y\n1.5,2,3\n4,5e-1,6\n"), "y")
        b = load_csv(write(tmp_path / "s.csv", "a;b;y\n1.5;2;3\n4;5e-1;6\n"), "y", ";")
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.Y, b.Y)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.csv"):
            load_csv(tmp_path / "nope.csv", "y")

    def test_missing_column(self, tmp_path):
        with pytest.raises(CSVParseError, match="target"):
            load_csv(write(tmp_path / "t.csv", "a,b\n1,2\n"), "y")

    def test_rows_with_missing_values_dropped(self, tmp_path):
        D = load_csv(write(tmp_path / "t.csv", "a,y\n1,2\n,3\n4,\n5,6\n"), "y")
        assert D.n == 2 and D.n_dropped == 2

    def test_round_trip(self, tmp_path, rng):
        D = Dataset(rng.standard_normal((5, 3)), rng.standard_normal(5))
        save_csv(D, tmp_path / "r.csv")
        back = load_csv(tmp_path / "r.csv", "y")
        np.testing.assert_array_equal(back.X, D.X)
        np.testing.assert_array_equal(back.Y, D.Y)


class TestSplit:
    def data(self, n):
        return Dataset(np.arange(2.0 * n).reshape(n, 2), np.arange(float(n)))

    def test_sizes(self):
        tr, te = split(self.data(10), 0.2, seed=1)
        assert (tr.n, te.n) == (8, 2)
        assert sorted(tr.Y.tolist() + te.Y.tolist()) == list(range(10))

    def test_reproducible(self):
        a = split(self.data(30), 0.2, seed=5)
        b = split(self.data(30), 0.2, seed=5)
        assert a[1].Y.tolist() == b[1].Y.tolist()

    def test_half(self):
        tr, te = split(self.data(4), 0.5, seed=0)
        assert (tr.n, te.n) == (2, 2)

    def test_too_small(self):
        with pytest.raises(InvalidInputError):
            split(self.data(5), 0.1, seed=0)

    @settings(max_examples=60)
    @given(st.integers(4, 300), st.floats(0.05, 0.95), st.integers(0, 10**6))
    def test_partition(self, n, frac, seed):
        n_test = round(n * frac)
        if n_test < 2 or n - n_test < 2:
            return
        tr, te = split(self.data(n), frac, seed)
        assert te.n == n_test
        assert set(tr.Y.tolist()).isdisjoint(te.Y.tolist())
        assert tr.n + te.n == n
