import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sween.datasets import Dataset, gen_gaussian_mixture, gen_rings, load_dataset, save_dataset, split

import oracles


class TestGaussianMixture:
    def test_bayes_linear_rule_is_near_perfect(self):
        # closed-form error Phi(-separation / (2 std)) = Phi(-4) ~ 3.2e-5
        ds = gen_gaussian_mixture(2, 2, 1000, 4.0, 0.5, seed=7)
        centers = np.array([ds.features[ds.labels == c].mean(axis=0) for c in range(2)])
        w = centers[1] - centers[0]
        b = -float(w @ (centers[0] + centers[1]) / 2.0)
        pred = (ds.features @ w + b > 0).astype(int)
        assert np.mean(pred == ds.labels) >= 0.99

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            gen_gaussian_mixture(2, 1, 100, 4.0, 0.5, seed=0)

    @pytest.mark.parametrize("sep,std", [(0.0, 0.5), (-1.0, 0.5), (4.0, 0.0), (4.0, -0.1)])
    def test_nonpositive_geometry_rejected(self, sep, std):
        with pytest.raises(ValueError):
            gen_gaussian_mixture(2, 2, 100, sep, std, seed=0)

    def test_deterministic(self):
        a = gen_gaussian_mixture(3, 4, 200, 3.0, 0.4, seed=11)
        b = gen_gaussian_mixture(3, 4, 200, 3.0, 0.4, seed=11)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_center_separation_and_bounds(self):
        for m in (2, 3, 5):
            ds = gen_gaussian_mixture(2, m, 50 * m, 2.5, 0.3, seed=1)
            ds.validate()
            assert ds.num_classes == m
            assert len(np.unique(ds.labels)) == m


class TestRings:
    def test_linearly_inseparable(self):
        ds = gen_rings(600, [1.0, 3.0], 0.1, seed=1)
        assert oracles.best_linear_accuracy_2d(ds.features, ds.labels) <= 0.75

    def test_zero_noise_exact_circles(self):
        ds = gen_rings(100, [1.0, 2.0], 0.0, seed=3)
        norms = np.linalg.norm(ds.features, axis=1)
        expected = np.asarray([1.0, 2.0])[ds.labels]
        assert np.allclose(norms, expected, atol=1e-12)

    def test_deterministic(self):
        a = gen_rings(300, [1.0, 3.0], 0.1, seed=9)
        b = gen_rings(300, [1.0, 3.0], 0.1, seed=9)
        assert np.array_equal(a.features, b.features)

    def test_nonincreasing_radii_rejected(self):
        with pytest.raises(ValueError):
            gen_rings(100, [3.0, 1.0], 0.1, seed=0)
        with pytest.raises(ValueError):
            gen_rings(100, [1.0, 1.0], 0.1, seed=0)


class TestSplit:
    def test_exact_sizes_rounding_free(self):
        ds = gen_gaussian_mixture(2, 2, 1000, 4.0, 0.5, seed=0)
        tr, we, te = split(ds, (0.7, 0.1, 0.2), seed=5)
        assert (len(tr), len(we), len(te)) == (700, 100, 200)

    def test_degenerate_split(self):
        ds = gen_gaussian_mixture(2, 2, 100, 4.0, 0.5, seed=0)
        tr, we, te = split(ds, (1.0, 0.0, 0.0), seed=5)
        assert len(tr) == 100 and len(we) == 0 and len(te) == 0

    def test_bad_fractions_rejected(self):
        ds = gen_gaussian_mixture(2, 2, 100, 4.0, 0.5, seed=0)
        with pytest.raises(ValueError):
            split(ds, (0.5, 0.2, 0.2), seed=0)
        with pytest.raises(ValueError):
            split(ds, (-0.1, 0.6, 0.5), seed=0)

    @given(st.integers(min_value=0, max_value=2**31), st.integers(min_value=4, max_value=257))
    @settings(max_examples=30, deadline=None)
    def test_partition_property(self, seed, n):
        ds = gen_gaussian_mixture(2, 4, max(n, 4), 4.0, 0.5, seed=1)
        tr, we, te = split(ds, (0.6, 0.15, 0.25), seed=seed)
        total = len(tr) + len(we) + len(te)
        assert total == len(ds)
        merged = np.concatenate([tr.features, we.features, te.features])
        assert np.array_equal(np.sort(merged, axis=0), np.sort(ds.features, axis=0))

    def test_stratified_where_counts_allow(self):
        ds = gen_gaussian_mixture(2, 4, 400, 4.0, 0.5, seed=0)
        tr, we, te = split(ds, (0.5, 0.25, 0.25), seed=8)
        for part in (tr, we, te):
            counts = np.bincount(part.labels, minlength=4)
            assert counts.min() == counts.max()


class TestGeometry:
    def test_diameter_formula(self):
        for b, d in [(1.0, 2), (2.5, 3), (0.5, 7)]:
            ds = Dataset(np.zeros((1, d)), np.zeros(1, dtype=np.int64), 2,
                         np.full(d, -b), np.full(d, b))
            assert ds.diameter == pytest.approx(2.0 * b * math.sqrt(d), abs=1e-12)


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        ds = gen_rings(120, [1.0, 3.0], 0.1, seed=2)
        path = save_dataset(ds, tmp_path / "rings.csv")
        assert (tmp_path / "rings.meta.json").exists()
        back = load_dataset(path)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        assert back.num_classes == ds.num_classes
        assert back.diameter == pytest.approx(ds.diameter, abs=1e-12)

    def test_identical_bytes_per_seed(self, tmp_path):
        for name in ("a", "b"):
            save_dataset(gen_gaussian_mixture(2, 3, 90, 3.0, 0.4, seed=4),
                         tmp_path / f"{name}.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_empty_split_roundtrip(self, tmp_path):
        ds = gen_gaussian_mixture(2, 2, 50, 4.0, 0.5, seed=0)
        _, empty, _ = split(ds, (1.0, 0.0, 0.0), seed=0)
        back = load_dataset(save_dataset(empty, tmp_path / "empty.csv"))
        assert len(back) == 0
        assert back.dim == ds.dim and back.num_classes == ds.num_classes
