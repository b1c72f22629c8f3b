import json
import math

import numpy as np
import pytest

from riskad.data import (
    DataError,
    LabeledDataset,
    ScaleMode,
    SplitProtocol,
    fit_scaler,
    gaussian_bayes_auc,
    load_csv,
    make_ad_setup,
    make_trial_split,
    save_csv,
    save_split_indices,
    scale_features,
    synth_gaussian,
)
from riskad.exceptions import ConfigError


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_two_rows(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,2,0\n3,4,1\n"))
        np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(ds.labels, [1, -1])

    def test_header_skipped(self, tmp_path):
        ds = load_csv(write(tmp_path, "a,b,label\n1,2,0\n3,4,1\n"))
        assert ds.n == 2 and ds.d == 2

    def test_pm1_encoding(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,2,1\n3,4,-1\n"))
        np.testing.assert_array_equal(ds.labels, [1, -1])

    def test_label_column(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,5,6\n0,7,8\n"), label_column=0)
        np.testing.assert_array_equal(ds.labels, [-1, 1])
        np.testing.assert_array_equal(ds.features, [[5, 6], [7, 8]])

    def test_nan_reports_line(self, tmp_path):
        with pytest.raises(DataError, match=":3:"):
            load_csv(write(tmp_path, "1,2,0\n3,4,1\n5,nan,0\n"))

    def test_non_numeric_reports_line(self, tmp_path):
        with pytest.raises(DataError, match=":2:"):
            load_csv(write(tmp_path, "1,2,0\n3,x,1\n"))

    def test_ragged(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "1,2,0\n3,1\n"))

    def test_bad_label_value(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "1,2,0\n3,4,2\n"))

    def test_missing_label_column(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "1,2,0\n"), label_column=5)

    def test_roundtrip(self, tmp_path):
        ds = synth_gaussian(50, 3, 0.2, 2.0, seed=0)
        save_csv(ds, tmp_path / "s.csv")
        back = load_csv(tmp_path / "s.csv")
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)

    def test_nan_in_memory_rejected(self):
        with pytest.raises(DataError):
            LabeledDataset(np.array([[np.nan]]), np.array([1]))


@pytest.fixture(scope="module")
def ds1000():
    return synth_gaussian(1000, 2, 0.1, 3.0, seed=0)


class TestSplit:
    def test_sizes(self, ds1000):
        sp = make_trial_split(ds1000, SplitProtocol(), 0)
        idx = sp.indices
        assert len(idx["test"]) == 300
        assert len(idx["P"]) + len(idx["N"]) == 35
        assert len(idx["U"]) == 665
        assert len(sp.P) + len(sp.N) + len(sp.U) == 700

    @pytest.mark.parametrize("trial", range(5))
    def test_disjoint_cover(self, ds1000, trial):
        idx = make_trial_split(ds1000, SplitProtocol(), trial).indices
        sets = [set(v.tolist()) for v in idx.values()]
        assert sum(len(s) for s in sets) == len(set().union(*sets)) == ds1000.n

    def test_deterministic(self, ds1000):
        a = make_trial_split(ds1000, SplitProtocol(seed=4), 2).index_record()
        b = make_trial_split(ds1000, SplitProtocol(seed=4), 2).index_record()
        c = make_trial_split(ds1000, SplitProtocol(seed=4), 3).index_record()
        assert a == b and a != c

    def test_labels_follow_sources(self, ds1000):
        sp = make_trial_split(ds1000, SplitProtocol(), 1)
        y = ds1000.labels
        assert np.all(y[sp.indices["P"]] == 1) and np.all(y[sp.indices["N"]] == -1)
        np.testing.assert_array_equal(sp.oracle_u_labels(), y[sp.indices["U"]])

    def test_u_pollution_within_3_sigma(self, ds1000):
        fracs = [np.mean(make_trial_split(ds1000, SplitProtocol(), k).oracle_u_labels() == -1)
                 for k in range(30)]
        n_u, p = 665, ds1000.pi_n
        sigma = math.sqrt(p * (1 - p) / n_u)
        assert all(abs(f - p) <= 3 * sigma for f in fracs)

    def test_full_labeled_leaves_u_empty(self, ds1000):
        sp = make_trial_split(ds1000, SplitProtocol(labeled_fraction=1.0), 0)
        assert len(sp.U) == 0

    def test_pure_dataset_rejected(self):
        ds = LabeledDataset(np.zeros((10, 1)), np.ones(10, int))
        with pytest.raises(DataError):
            make_trial_split(ds, SplitProtocol(), 0)

    def test_too_few_anomalies_errors(self):
        y = np.ones(200, int)
        y[0] = -1
        ds = LabeledDataset(np.zeros((200, 1)), y)
        with pytest.raises(DataError):
            make_trial_split(ds, SplitProtocol(labeled_fraction=0.01), 0, max_attempts=5)

    def test_protocol_validation(self):
        with pytest.raises(ConfigError):
            SplitProtocol(train_ratio=1.0)
        with pytest.raises(ConfigError):
            SplitProtocol(labeled_fraction=0.0)

    def test_index_export(self, ds1000, tmp_path):
        sp = make_trial_split(ds1000, SplitProtocol(), 0)
        save_split_indices(sp, tmp_path / "i.json")
        rec = json.loads((tmp_path / "i.json").read_text())
        assert set(rec) == {"P", "N", "U", "test"} and len(rec["U"]) == 665


class TestAdSetup:
    def _multiclass(self):
        rng = np.random.default_rng(0)
        classes = np.repeat(np.arange(10), 100)
        return rng.normal(size=(1000, 4)), classes

    def test_eleven_anomalies(self):
        x, c = self._multiclass()
        ds = make_ad_setup(x, c, 3, 0.1, seed=1)
        assert np.sum(ds.labels == 1) == 100 and np.sum(ds.labels == -1) == 11

    def test_zero_target(self):
        x, c = self._multiclass()
        ds = make_ad_setup(x, c, 3, 0.0, seed=1)
        assert np.all(ds.labels == 1) and ds.n == 100

    def test_deterministic(self):
        x, c = self._multiclass()
        a, b = make_ad_setup(x, c, 3, 0.2, seed=5), make_ad_setup(x, c, 3, 0.2, seed=5)
        np.testing.assert_array_equal(a.features, b.features)

    def test_pool_too_small(self):
        x, c = self._multiclass()
        with pytest.raises(DataError):
            make_ad_setup(x, c, 3, 0.95, seed=1)

    def test_missing_class(self):
        x, c = self._multiclass()
        with pytest.raises(DataError):
            make_ad_setup(x, c, 42, 0.1, seed=1)


class TestSynthetic:
    def test_counts(self):
        ds = synth_gaussian(1000, 2, 0.1, 3.0, seed=0)
        assert np.sum(ds.labels == 1) == 900 and np.sum(ds.labels == -1) == 100

    @pytest.mark.parametrize(
        "sep,expected",
        # independent high-precision values of Phi(sep / sqrt 2)
        [(0.0, 0.5), (6.0, 0.9999889547515007), (4.0, 0.9976611325094764)],
    )
    def test_bayes_auc(self, sep, expected):
        assert gaussian_bayes_auc(sep) == pytest.approx(expected, abs=1e-15)
        assert synth_gaussian(20, 2, 0.5, sep, 0).bayes_auc == pytest.approx(expected, abs=1e-15)

    def test_bad_pi(self):
        with pytest.raises(ConfigError):
            synth_gaussian(10, 2, 0.0, 1.0, 0)


class TestScaling:
    def test_three_four_five(self):
        out, sc = scale_features(np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(out, [[0.6, 0.8]])
        assert sc.divisor == 5.0

    def test_linf(self):
        out, _ = scale_features(np.array([[3.0, -4.0]]), "unit_max_linf")
        np.testing.assert_allclose(out, [[0.75, -1.0]])

    def test_already_unit(self):
        x = np.array([[0.6, 0.8], [0.1, 0.0]])
        out, _ = scale_features(x)
        np.testing.assert_array_equal(out, x)

    def test_none_is_identity(self):
        x = np.array([[3.0, 4.0]])
        out, sc = scale_features(x, "none")
        np.testing.assert_array_equal(out, x)
        assert sc.mode is ScaleMode.NONE

    def test_all_zero_warns(self):
        with pytest.warns(UserWarning):
            sc = fit_scaler(np.zeros((3, 2)))
        assert sc.degenerate and sc.divisor == 1.0

    def test_split_uses_negatives(self, ds1000):
        sp = make_trial_split(ds1000, SplitProtocol(), 0)
        scaled, sc = scale_features(sp)
        assert np.linalg.norm(scaled.N, axis=1).max() == pytest.approx(1.0)
        np.testing.assert_allclose(scaled.test_x * sc.divisor, sp.test_x)
        _, sc_all = scale_features(sp, reference="train")
        assert sc_all.divisor >= sc.divisor
