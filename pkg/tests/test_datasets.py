import numpy as np
import pytest

from labelwave import engine
from labelwave.datasets import (
    MixtureConfig,
    NoisyDataset,
    SplitSpec,
    gen_gaussian_mixture,
    holdout_size,
    load_csv,
    make_train_test,
    save_csv,
    split,
)
from labelwave.engine import TrainConfig
from labelwave.errors import ConfigError, DataError, ParseError
from labelwave.noise import NoiseSpec, load_noisy_labels


def fit_linear(train, epochs, seed=0):
    cfg = TrainConfig(learning_rate=0.05, batch_size=64, arch="linear", seed=seed)
    p = engine.init_params(train.dim, train.num_classes, "linear", seed)
    v = p.zeros_like()
    for e in range(epochs):
        res = engine.train_epoch(p, v, train, cfg, e, record=False)
        p, v = res.params, res.velocity
    return p


class TestMixture:
    @pytest.mark.parametrize("n, C", [(100, 10), (103, 10), (7, 3)])
    def test_balanced(self, n, C):
        ds = gen_gaussian_mixture(C, n, 4, seed=1)
        counts = np.bincount(ds.observed_labels, minlength=C)
        assert counts.max() - counts.min() <= 1

    def test_clean_truth(self):
        ds = gen_gaussian_mixture(3, 30, 2)
        assert ds.clean_mask.all()

    def test_zero_separation_is_chance(self):
        train, test = make_train_test(MixtureConfig(separation=0.0, n_train=2000, n_test=2000, seed=3))
        p = fit_linear(train, 10)
        acc = 1 - engine.evaluate(p, test, "true")
        assert abs(acc - 0.1) < 0.04

    def test_wide_separation_linear_over_99(self):
        train, test = make_train_test(MixtureConfig(separation=10.0, n_train=2000, n_test=2000, seed=3))
        p = fit_linear(train, 30)
        assert 1 - engine.evaluate(p, test, "true") > 0.99

    def test_deterministic_and_seed_sensitive(self):
        a = make_train_test(MixtureConfig(n_train=50, n_test=20, seed=4))
        b = make_train_test(MixtureConfig(n_train=50, n_test=20, seed=4))
        c = make_train_test(MixtureConfig(n_train=50, n_test=20, seed=5))
        np.testing.assert_array_equal(a[0].features, b[0].features)
        np.testing.assert_array_equal(a[1].features, b[1].features)
        assert not np.array_equal(a[0].features, c[0].features)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            gen_gaussian_mixture(1, 10, 3)


class TestNoisyDataset:
    def test_with_noise_masks_match_report(self):
        ds = gen_gaussian_mixture(5, 500, 3, seed=2)
        noisy, rep = ds.with_noise(NoiseSpec("symmetric", 0.3, 2))
        assert (~noisy.clean_mask).sum() == rep.n_flipped
        assert (~noisy.clean_mask).mean() == rep.realized_rate
        np.testing.assert_array_equal(noisy.true_labels, ds.observed_labels)

    def test_noise_twice_keeps_truth(self):
        ds = gen_gaussian_mixture(5, 100, 3, seed=2)
        once, _ = ds.with_noise(NoiseSpec("symmetric", 0.3, 2))
        twice, _ = once.with_noise(NoiseSpec("symmetric", 0.3, 2))
        np.testing.assert_array_equal(twice.true_labels, ds.true_labels)
        np.testing.assert_array_equal(twice.observed_labels, once.observed_labels)

    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            NoisyDataset(np.array([[np.nan, 1.0]]), np.array([0]), 2)

    def test_rejects_label_out_of_range(self):
        with pytest.raises(ConfigError):
            NoisyDataset(np.ones((2, 2)), np.array([0, 2]), 2)


class TestSplit:
    def test_zero_fraction(self):
        ds = gen_gaussian_mixture(3, 30, 2)
        tr, ho = split(ds, SplitSpec(0.0, 1))
        assert len(ho) == 0
        np.testing.assert_array_equal(tr.features, ds.features)

    def test_800_200_disjoint(self):
        ds = gen_gaussian_mixture(10, 1000, 3, seed=8)
        tr, ho = split(ds, SplitSpec(0.2, 8))
        assert (len(tr), len(ho)) == (800, 200)
        assert not set(tr.indices) & set(ho.indices)
        assert sorted(set(tr.indices) | set(ho.indices)) == list(range(1000))
        np.testing.assert_array_equal(ho.features, ds.features[ho.indices])
        assert ho.split == "holdout"

    def test_deterministic(self):
        ds = gen_gaussian_mixture(10, 100, 3)
        a, b = split(ds, SplitSpec(0.3, 2)), split(ds, SplitSpec(0.3, 2))
        np.testing.assert_array_equal(a[1].indices, b[1].indices)

    def test_holdout_keeps_noisy_labels(self):
        ds, _ = gen_gaussian_mixture(4, 400, 3, seed=1).with_noise(NoiseSpec("symmetric", 0.5, 1))
        _, ho = split(ds, SplitSpec(0.25, 0))
        np.testing.assert_array_equal(ho.observed_labels, ds.observed_labels[ho.indices])
        assert (~ho.clean_mask).any()

    def test_rounding(self):
        assert holdout_size(10, 0.25) == 3
        assert holdout_size(1000, 0.2) == 200

    def test_bad_fraction(self):
        with pytest.raises(ConfigError):
            SplitSpec(1.0)


TOY = "a,b,label\n1.0,10.0,cat\n2.0,10.0,dog\n3.0,40.0,cat\n"


class TestCsv:
    def test_toy_fixture(self, tmp_path):
        p = tmp_path / "train.csv"
        p.write_text(TOY)
        ds = load_csv(p)
        std_a, std_b = np.std([1.0, 2.0, 3.0]), np.std([10.0, 10.0, 40.0])
        expected = np.array([[-1 / std_a, -10 / std_b], [0.0, -10 / std_b], [1 / std_a, 20 / std_b]])
        np.testing.assert_allclose(ds.features, expected, atol=1e-12)
        assert ds.observed_labels.tolist() == [0, 1, 0]
        assert ds.label_mapping == {"cat": 0, "dog": 1}

    def test_standardized_means(self, tmp_path):
        ds = gen_gaussian_mixture(3, 200, 4, seed=0)
        ds = NoisyDataset(ds.features * 5 + 100, ds.observed_labels, 3, true_labels=ds.true_labels)
        p = tmp_path / "g.csv"
        save_csv(ds, p)
        back = load_csv(p)
        assert np.abs(back.features.mean(axis=0)).max() < 1e-9
        np.testing.assert_allclose(back.features.std(axis=0), 1.0)

    def test_test_split_uses_train_statistics(self, tmp_path):
        (tmp_path / "train.csv").write_text(TOY)
        (tmp_path / "test.csv").write_text("a,b,label\n2.0,20.0,dog\n")
        tr = load_csv(tmp_path / "train.csv")
        te = load_csv(tmp_path / "test.csv", reference=tr)
        mean, std = tr.standardization
        np.testing.assert_allclose(te.features[0], (np.array([2.0, 20.0]) - mean) / std)
        assert te.observed_labels.tolist() == [1]
        assert te.split == "test"

    def test_unknown_label_names_value(self, tmp_path):
        (tmp_path / "train.csv").write_text(TOY)
        (tmp_path / "test.csv").write_text("a,b,label\n2.0,20.0,bird\n")
        tr = load_csv(tmp_path / "train.csv")
        with pytest.raises(ConfigError, match="bird"):
            load_csv(tmp_path / "test.csv", reference=tr)

    def test_non_numeric_cell_position(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,label\n1.0,2.0,x\n1.0,zz,y\n")
        with pytest.raises(ParseError) as info:
            load_csv(p)
        assert (info.value.line, info.value.column) == (3, 2)

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,label\n1.0,2.0\n")
        with pytest.raises(ParseError) as info:
            load_csv(p)
        assert info.value.line == 2

    def test_missing_label_column(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigError, match="label"):
            load_csv(p)

    def test_export_with_truth_sidecar(self, tmp_path):
        ds, _ = gen_gaussian_mixture(3, 30, 2, seed=5).with_noise(NoiseSpec("symmetric", 0.4, 5))
        save_csv(ds, tmp_path / "d.csv", true_labels_path=tmp_path / "truth.txt")
        back = load_csv(tmp_path / "d.csv")
        assert back.observed_labels.tolist() == ds.observed_labels.tolist()
        assert load_noisy_labels(tmp_path / "truth.txt").tolist() == ds.true_labels.tolist()
