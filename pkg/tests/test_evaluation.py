import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from grabit.data import Dataset
from grabit.evaluation import (RocCurve, SingleClassError, TemporalCvConfig, aggregate_roc, auroc,
                               delong_components, delong_test, impute_median, interpolate_roc, lower_median,
                               roc_auroc, temporal_cv)
from oracles import delong_components_quadratic, pairwise_auc


class TestRoc:
    def test_perfect(self):
        assert roc_auroc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]).auroc == 1.0

    def test_all_tied(self):
        assert roc_auroc(np.ones(7), [1, 0, 0, 1, 0, 0, 0]).auroc == 0.5

    def test_three_of_four_pairs(self):
        assert roc_auroc([0.9, 0.8, 0.2, 0.1], [1, 0, 1, 0]).auroc == 0.75

    def test_single_class(self):
        with pytest.raises(SingleClassError):
            roc_auroc([0.1, 0.2], [1, 1])

    def test_non_binary_labels(self):
        with pytest.raises(ValueError):
            roc_auroc([0.1, 0.2], [0, 2])

    @given(n=st.integers(2, 50), seed=st.integers(0, 10**6), levels=st.integers(1, 8))
    def test_concordance_and_curve_invariants(self, n, seed, levels):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        s = rng.integers(0, levels, n) / levels   # plenty of ties
        c = roc_auroc(s, y)
        assert c.auroc == pytest.approx(pairwise_auc(s, y), abs=1e-15)
        assert (c.fpr[0], c.tpr[0], c.fpr[-1], c.tpr[-1]) == (0, 0, 1, 1)
        assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
        assert abs(np.trapezoid(c.tpr, c.fpr) - c.auroc) < 1e-12

    @given(seed=st.integers(0, 10**6))
    def test_monotone_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        y = np.r_[0, 1, rng.integers(0, 2, 40)]
        s = rng.normal(size=42).round(1)
        assert auroc(s, y) == auroc(np.exp(3 * s) + 7, y)


class TestDelong:
    def test_components_match_quadratic_oracle(self):
        rng = np.random.default_rng(11)
        y = np.r_[np.ones(10), np.zeros(20)]
        s = rng.normal(size=30).round(1) + y * 0.5
        a, v10, v01 = delong_components(s, y)
        ra, r10, r01 = delong_components_quadratic(s, y)
        assert a == pytest.approx(ra, rel=1e-12)
        np.testing.assert_allclose(v10, r10, rtol=1e-10)
        np.testing.assert_allclose(v01, r01, rtol=1e-10)

    def test_variance_matches_direct_formula(self):
        rng = np.random.default_rng(12)
        y = np.r_[np.ones(10), np.zeros(20)]
        a = rng.normal(size=30) + y
        b = a + rng.normal(size=30)
        _, x10, x01 = delong_components_quadratic(a, y)
        _, z10, z01 = delong_components_quadratic(b, y)
        s10 = np.cov(np.vstack([x10, z10]))
        s01 = np.cov(np.vstack([x01, z01]))
        c = np.array([1.0, -1.0])
        var = c @ s10 @ c / 10 + c @ s01 @ c / 20
        r = delong_test(a, b, y)
        assert r.variance == pytest.approx(var, rel=1e-10)
        z = (x10.mean() - z10.mean()) / np.sqrt(var)
        assert r.p_value == pytest.approx(2 * stats.norm.sf(abs(z)), rel=1e-9)

    def test_identical_scores(self):
        rng = np.random.default_rng(0)
        s, y = rng.normal(size=40), np.r_[np.ones(15), np.zeros(25)]
        r = delong_test(s, s, y)
        assert r.difference == 0 and r.p_value == 1.0

    def test_shifted_scores(self):
        rng = np.random.default_rng(1)
        s, y = rng.normal(size=40), np.r_[np.ones(15), np.zeros(25)]
        r = delong_test(s, s + 3.0, y)
        assert r.auroc_a == r.auroc_b and r.p_value == 1.0

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=30)
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        y = np.r_[1, 0, rng.integers(0, 2, 30)]
        a, b = rng.normal(size=32), rng.normal(size=32)
        r1, r2 = delong_test(a, b, y), delong_test(b, a, y)
        assert r1.difference == -r2.difference
        assert r1.p_value == pytest.approx(r2.p_value, rel=1e-12)

    def test_single_class(self):
        with pytest.raises(SingleClassError):
            delong_test([1.0, 2.0], [2.0, 1.0], [0, 0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            delong_test([1.0, 2.0], [2.0], [0, 1])


def curve(fpr, tpr, auc=0.0):
    return RocCurve(np.asarray(fpr, float), np.asarray(tpr, float), np.zeros(len(fpr)), auc)


class TestAggregate:
    def test_single_curve_collapses(self):
        c = roc_auroc([0.9, 0.7, 0.4, 0.3, 0.1], [1, 0, 1, 0, 0])
        band = aggregate_roc([c])
        assert len(band.grid) == 100 and band.grid[0] == 0 and band.grid[-1] == 1
        np.testing.assert_array_equal(band.lower_tpr, band.mean_tpr)
        np.testing.assert_array_equal(band.upper_tpr, band.mean_tpr)
        assert band.auroc_ci == (c.auroc, c.auroc) and band.mean_auroc == c.auroc

    def test_many_copies_collapse(self):
        c = roc_auroc([0.9, 0.7, 0.4, 0.3, 0.1], [1, 0, 1, 0, 0])
        band = aggregate_roc([c] * 100)
        np.testing.assert_allclose(band.lower_tpr, band.mean_tpr, atol=1e-15)
        np.testing.assert_allclose(band.upper_tpr, band.mean_tpr, atol=1e-15)

    def test_two_curves_hand_interpolation(self):
        a = curve([0, 0.5, 1], [0, 1, 1], 0.75)
        b = curve([0, 0.5, 1], [0, 0, 1], 0.25)
        band = aggregate_roc([a, b])
        g = band.grid
        ia = np.where(g <= 0.5, 2 * g, 1.0)
        ib = np.where(g <= 0.5, 0.0, 2 * g - 1)
        np.testing.assert_allclose(band.mean_tpr, (ia + ib) / 2, atol=1e-14)
        assert band.mean_auroc == 0.5

    def test_vertical_step_uses_upper_value(self):
        c = curve([0, 0, 1], [0, 1, 1])
        assert interpolate_roc(c, np.array([0.0]))[0] == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_roc([])

    def test_band_order_on_random_curves(self):
        rng = np.random.default_rng(3)
        curves = []
        for _ in range(50):
            y = np.r_[1, 0, rng.integers(0, 2, 60)]
            curves.append(roc_auroc(rng.normal(size=62) + y, y))
        b = aggregate_roc(curves)
        assert np.all(b.lower_tpr <= b.upper_tpr)
        assert np.all((b.lower_tpr >= 0) & (b.upper_tpr <= 1))
        assert b.auroc_ci[0] <= b.mean_auroc <= b.auroc_ci[1]


class TestMedian:
    def test_lower_median(self):
        assert lower_median(np.array([4.0, 1.0, 3.0, 2.0])) == 2.0
        assert lower_median(np.array([5.0, 1.0, 3.0])) == 3.0

    def test_impute(self):
        ref = np.array([[1.0, np.nan], [3.0, np.nan], [2.0, np.nan]])
        out = impute_median(np.array([[np.nan, np.nan], [7.0, 1.0]]), ref)
        np.testing.assert_array_equal(out, [[2.0, 0.0], [7.0, 1.0]])


def timed_data(n=300, seed=0, days=None):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.integers(0, 1000, n)).astype(float) if days is None else days
    X = rng.normal(size=(n, 2))
    F = X[:, 0] - X[:, 1]
    y = (F + rng.normal(size=n) > 1).astype(float)
    return Dataset(X, y, timestamps=t, latent=F)


class TestTemporalCv:
    def test_too_few_rows(self):
        d = timed_data(99)
        r = temporal_cv(d, lambda tr: (lambda X: X[:, 0]), TemporalCvConfig(100, 0.0))
        assert r.empty and r.roc is None and len(r.rows) == 0

    def test_constant_scores(self):
        r = temporal_cv(timed_data(), lambda tr: (lambda X: np.zeros(len(X))), TemporalCvConfig(20, 10.0))
        assert not r.empty and r.roc.auroc == 0.5

    def test_pass_through_oracle(self):
        d = timed_data()
        lookup = {tuple(x): f for x, f in zip(d.X, d.latent)}
        r = temporal_cv(d, lambda tr: (lambda X: np.array([lookup[tuple(x)] for x in X])),
                        TemporalCvConfig(50, 30.0))
        assert r.roc.auroc == auroc(d.latent[r.rows], d.y[r.rows])

    @pytest.mark.parametrize("lag", [0.0, 1.0, 61.0])
    def test_no_look_ahead(self, lag):
        base = timed_data(200, days=np.repeat(np.arange(100.0) * 3, 2))
        # row id as an extra feature so the factory can see which rows it got
        d = Dataset(np.column_stack([base.X, np.arange(200.0)]), base.y, timestamps=base.timestamps)
        seen = []

        def factory(train):
            ids = train.X[:, 2].astype(int)

            def score(X):
                for i in X[:, 2].astype(int):
                    seen.append((i, ids))
                return np.zeros(len(X))
            return score

        r = temporal_cv(d, factory, TemporalCvConfig(10, lag))
        assert len(seen) == len(r.rows) > 0
        for i, ids in seen:
            ti = d.timestamps[i]
            assert np.all(d.timestamps[ids] < ti)
            assert np.all(d.timestamps[ids] + lag <= ti)
            assert len(ids) >= 10
            # every mature row is used
            mature = np.flatnonzero((d.timestamps < ti) & (d.timestamps + lag <= ti))
            np.testing.assert_array_equal(np.sort(ids), mature)

    def test_imputation_uses_past_only(self):
        d = timed_data(150)
        d.X[120, 1] = np.nan
        d.X[140:, 1] = 1e6          # future rows must not move the median
        r = temporal_cv(d, lambda tr: (lambda X: X[:, 1]), TemporalCvConfig(20, 0.0))
        k = int(np.flatnonzero(r.rows == 120)[0])
        past = d.timestamps < d.timestamps[120]
        assert r.scores[k] == lower_median(d.X[past, 1][~np.isnan(d.X[past, 1])])

    def test_requires_timestamps(self):
        with pytest.raises(ValueError):
            temporal_cv(Dataset(np.zeros((3, 1)), np.zeros(3)), lambda tr: None)
