"""Multi-target ridge regression with deterministic contiguous-fold CV.

The solve goes through a singular value decomposition of the feature matrix
rather than the normal equations: with X = U diag(sv) V', the ridge solution
for every candidate alpha is V diag(sv / (sv**2 + alpha)) U' L, so one
factorization per training fold serves the whole alpha sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_matrix


def _svd_solve(U, sv, Vt, UtL, alpha: float):
    """Ridge coefficients from a precomputed SVD; alpha = 0 falls back to pseudoinverse."""
    if alpha == 0.0:
        cut = max(U.shape[0], Vt.shape[1]) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
        filt = np.where(sv > cut, 1.0, 0.0) / np.where(sv > cut, sv, 1.0)
        deficient = int(np.sum(sv > cut)) < sv.size
    else:
        filt = sv / (sv**2 + alpha)
        deficient = False
    return (Vt.T * filt) @ UtL, deficient


def ridge_fit(X, L, alpha: float, return_info: bool = False):
    """Solve min_A ||X A - L||_F^2 + alpha ||A||_F^2 without an intercept.

    Parameters
    ----------
    X : (m, p) array_like
        Feature rows.
    L : (m, t) array_like
        Targets, one row per feature row.
    alpha : float
        Nonnegative ridge weight.  alpha = 0 requires m >= p; if X is then
        rank deficient the minimum-norm solution is returned and flagged.
    return_info : bool
        When true, also return a dict with the rank-deficiency flag.
    """
    X = check_matrix(X, name="X")
    L = check_matrix(L, name="L")
    m, p = X.shape
    if L.shape[0] != m:
        raise ValueError("X and L must have the same number of rows")
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0.0 and m < p:
        raise ValueError("alpha = 0 needs at least as many rows as features")
    U, sv, Vt = np.linalg.svd(X, full_matrices=False)
    A, deficient = _svd_solve(U, sv, Vt, U.T @ L, alpha)
    if return_info:
        return A, {"rank_deficient": deficient}
    return A


@dataclass(frozen=True)
class RidgeFit:
    """Result of a cross-validated ridge solve.

    A           coefficient matrix refit on all rows at the selected alpha
    alpha       selected candidate
    alphas      candidates in the order supplied
    cv_scores   validation MSE per candidate (averaged over folds)
    rank_deficient  true when the final solve hit a rank-deficient alpha=0 case
    """

    A: np.ndarray
    alpha: float
    alphas: np.ndarray
    cv_scores: np.ndarray
    rank_deficient: bool


def _fold_slices(m: int, folds: int) -> list[slice]:
    """Contiguous row blocks of near-equal size, in order."""
    bounds = np.linspace(0, m, folds + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def ridge_cv_fit(X, L, alphas, folds: int = 2) -> RidgeFit:
    """Sweep ridge candidates with contiguous k-fold CV and refit the winner.

    The validation score of a candidate is the MSE over all held-out rows and
    target columns, averaged over fold rotations.  Ties go to the smaller
    alpha.  The refit on all rows uses the same solver as ridge_fit, so the
    returned matrix matches a direct ridge_fit call at the selected alpha.
    """
    X = check_matrix(X, name="X")
    L = check_matrix(L, name="L")
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if alphas.size == 0:
        raise ValueError("alphas must not be empty")
    if np.any(alphas < 0.0):
        raise ValueError("alphas must be nonnegative")
    m = X.shape[0]
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if m < folds:
        raise ValueError("need at least one row per fold")
    slices = _fold_slices(m, folds)
    scores = np.zeros(alphas.size)
    for val in slices:
        mask = np.ones(m, dtype=bool)
        mask[val] = False
        X_tr, L_tr = X[mask], L[mask]
        X_va, L_va = X[val], L[val]
        U, sv, Vt = np.linalg.svd(X_tr, full_matrices=False)
        UtL = U.T @ L_tr
        for i, alpha in enumerate(alphas):
            if alpha == 0.0 and X_tr.shape[0] < X_tr.shape[1]:
                scores[i] = np.inf
                continue
            A, _ = _svd_solve(U, sv, Vt, UtL, float(alpha))
            resid = X_va @ A - L_va
            scores[i] += np.mean(resid**2)
    scores /= len(slices)
    best = min(range(alphas.size), key=lambda i: (scores[i], alphas[i]))
    A, info = ridge_fit(X, L, float(alphas[best]), return_info=True)
    return RidgeFit(
        A=A,
        alpha=float(alphas[best]),
        alphas=alphas,
        cv_scores=scores,
        rank_deficient=info["rank_deficient"],
    )
