"""Ridge regression solver and its cross-validated wrapper."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from derivkit import ridge_cv_fit, ridge_fit
from derivkit.config import DictionaryConfig
from derivkit.ridge import _fold_slices


def _normal_equation_solve(X, L, alpha):
    """Independent dense oracle: (X'X + alpha I) A = X'L."""
    p = X.shape[1]
    return np.linalg.solve(X.T @ X + alpha * np.eye(p), X.T @ L)


class TestRidgeFit:
    def test_matches_normal_equations(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((40, 12))
        L = rng.standard_normal((40, 3))
        for alpha in (1e-4, 0.37, 50.0):
            A = ridge_fit(X, L, alpha)
            oracle = _normal_equation_solve(X, L, alpha)
            rel = np.linalg.norm(A - oracle) / np.linalg.norm(oracle)
            assert rel <= 1e-10

    def test_zero_alpha_is_least_squares(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 8))
        L = rng.standard_normal((30, 2))
        A = ridge_fit(X, L, 0.0)
        oracle, *_ = np.linalg.lstsq(X, L, rcond=None)
        np.testing.assert_allclose(A, oracle, atol=1e-10)

    def test_zero_alpha_underdetermined_raises(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((5, 9))
        L = rng.standard_normal((5, 2))
        with pytest.raises(ValueError):
            ridge_fit(X, L, 0.0)

    def test_rank_deficiency_flag(self):
        rng = np.random.default_rng(3)
        base = rng.standard_normal((30, 5))
        X = np.hstack([base, base[:, :1]])  # duplicated column
        L = rng.standard_normal((30, 2))
        _, info = ridge_fit(X, L, 0.0, return_info=True)
        assert info["rank_deficient"] is True
        _, info_ok = ridge_fit(rng.standard_normal((30, 6)), L, 0.0, return_info=True)
        assert info_ok["rank_deficient"] is False

    def test_rejects_negative_alpha(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            ridge_fit(rng.standard_normal((10, 3)), rng.standard_normal((10, 2)), -1.0)

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_shrinkage_monotone_in_alpha(self, seed):
        # the coefficient norm of a ridge solution never grows with alpha
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((20, 8))
        L = rng.standard_normal((20, 3))
        alphas = np.sort(rng.uniform(1e-4, 100.0, size=4))
        norms = [np.linalg.norm(ridge_fit(X, L, a)) for a in alphas]
        assert all(n1 >= n2 - 1e-12 for n1, n2 in zip(norms, norms[1:]))


class TestFoldSlices:
    def test_partition_covers_everything(self):
        slices = _fold_slices(10, 3)
        assert len(slices) == 3
        seen = np.concatenate([np.arange(10)[sl] for sl in slices])
        np.testing.assert_array_equal(np.sort(seen), np.arange(10))

    def test_sizes_balanced(self):
        sizes = [np.arange(11)[sl].size for sl in _fold_slices(11, 4)]
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == 11


class TestRidgeCvFit:
    def test_selected_alpha_frozen_instance(self):
        # regression pin: this seeded problem selects the eighth table
        # entry; value frozen from a reference run of this configuration
        rng = np.random.default_rng(1234)
        X = rng.standard_normal((60, 10))
        A_true = rng.standard_normal((10, 4))
        L = X @ A_true + 0.1 * rng.standard_normal((60, 4))
        alphas = np.asarray(DictionaryConfig().alphas)
        fit = ridge_cv_fit(X, L, alphas, folds=2)
        assert fit.alpha == pytest.approx(0.0379269019073225, rel=1e-12)
        assert fit.cv_scores.shape == (20,)
        assert np.all(np.isfinite(fit.cv_scores))
        assert int(np.argmin(fit.cv_scores)) == 7

    def test_final_fit_uses_selected_alpha(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((50, 8))
        L = rng.standard_normal((50, 3))
        alphas = np.array([1e-3, 1e-1, 10.0])
        fit = ridge_cv_fit(X, L, alphas, folds=2)
        refit = ridge_fit(X, L, fit.alpha)
        np.testing.assert_allclose(fit.A, refit, atol=1e-12)

    def test_noisier_labels_select_larger_alpha(self):
        # with heavier label noise the validation optimum moves toward
        # stronger regularization
        rng = np.random.default_rng(6)
        X = rng.standard_normal((80, 12))
        A_true = rng.standard_normal((12, 3))
        alphas = np.asarray(DictionaryConfig().alphas)
        clean = ridge_cv_fit(X, X @ A_true + 0.01 * rng.standard_normal((80, 3)), alphas)
        noisy = ridge_cv_fit(X, X @ A_true + 3.0 * rng.standard_normal((80, 3)), alphas)
        assert noisy.alpha > clean.alpha

    def test_underdetermined_fold_gets_infinite_score(self):
        # alpha = 0 cannot be scored on a fold that leaves fewer rows than
        # columns, so its validation score is infinite and it never wins
        rng = np.random.default_rng(7)
        X = rng.standard_normal((10, 8))
        L = rng.standard_normal((10, 2))
        alphas = np.array([0.0, 1.0])
        fit = ridge_cv_fit(X, L, alphas, folds=2)
        assert np.isinf(fit.cv_scores[0])
        assert fit.alpha == 1.0
