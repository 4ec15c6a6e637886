"""Sinusoidal pulsation grids, basis matrices and bandwidth-limited projections.

The working basis consists of a constant column plus sine/cosine pairs at
log-spaced pulsations (rad/sample).  Differentiating a basis column d times
multiplies its amplitude by ``w**d`` and shifts its phase by ``d*pi/2``,
which lets every derivative order share one coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_series

_HALF_PI = 0.5 * np.pi


def _nearest_sorted(sorted_values: np.ndarray, x):
    """Indices of the members of an ascending array closest to x (ties go lower)."""
    x = np.asarray(x, dtype=float)
    pos = np.searchsorted(sorted_values, x)
    pos = np.clip(pos, 1, sorted_values.size - 1)
    left = sorted_values[pos - 1]
    right = sorted_values[pos]
    idx = np.where((x - left) <= (right - x), pos - 1, pos)
    if idx.ndim == 0:
        return int(idx)
    return idx


@dataclass(frozen=True)
class PulsationGrid:
    """Strictly increasing pulsations (rad/sample), log-spaced up to 2*pi/n_per_period."""

    values: np.ndarray
    n_per_period: int

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a pulsation grid needs at least two values")
        if values[0] <= 0.0 or np.any(np.diff(values) <= 0.0):
            raise ValueError("grid pulsations must be positive and strictly increasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_grid(self) -> int:
        return int(self.values.size)

    @property
    def omega_max(self) -> float:
        return float(self.values[-1])

    def count_upto(self, cutoff: float) -> int:
        """Number of grid pulsations <= cutoff (inclusive when cutoff is a member)."""
        return int(np.searchsorted(self.values, cutoff, side="right"))

    def nearest_index(self, pulsation):
        return _nearest_sorted(self.values, pulsation)


@dataclass(frozen=True)
class DesignGrid:
    """Coarse pulsation ladder used to index trained maps; members of a parent grid."""

    values: np.ndarray
    grid_indices: np.ndarray

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=float)
        indices = np.ascontiguousarray(self.grid_indices, dtype=int)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a design grid needs at least two values")
        if values.shape != indices.shape:
            raise ValueError("design values and grid indices must align")
        if np.any(np.diff(values) <= 0.0):
            raise ValueError("design pulsations must be strictly increasing after snapping")
        values.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "grid_indices", indices)

    @property
    def n_r(self) -> int:
        return int(self.values.size)


def make_grid(n_per_period: int, n_grid: int) -> PulsationGrid:
    """Log-spaced grid of ``n_grid`` pulsations spanning [1e-3, 1] * 2*pi/n_per_period."""
    if n_per_period < 2:
        raise ValueError("n_per_period must be at least 2")
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    omega_max = 2.0 * np.pi / n_per_period
    values = np.logspace(-3.0, 0.0, n_grid) * omega_max
    return PulsationGrid(values=values, n_per_period=n_per_period)


def make_design_grid(grid: PulsationGrid, n_r: int) -> DesignGrid:
    """Linearly spaced ladder from the lowest grid pulsation to the highest.

    Each raw ladder value is snapped to the nearest grid member so that basis
    truncation by a design pulsation is an exact prefix of the grid.
    """
    if n_r < 2:
        raise ValueError("n_r must be at least 2")
    raw = np.linspace(grid.values[0], grid.omega_max, n_r)
    indices = np.atleast_1d(_nearest_sorted(grid.values, raw))
    return DesignGrid(values=grid.values[indices].copy(), grid_indices=indices)


@dataclass(frozen=True)
class BasisMatrix:
    """Sampled basis columns of one derivative order, truncated at a cutoff pulsation."""

    matrix: np.ndarray
    pulsations: np.ndarray
    order: int
    cutoff: float

    @property
    def n_columns(self) -> int:
        return int(self.matrix.shape[1])


def eval_basis(grid: PulsationGrid, n: int, cutoff: float, order: int) -> BasisMatrix:
    """Evaluate the order-th derivative of every basis column at t = 0..n-1.

    Columns are [const, sin(w1 t), cos(w1 t), sin(w2 t), ...] for grid
    pulsations w <= cutoff.  The derivative of order d of sin(w t) is
    ``w**d * sin(w t + d*pi/2)`` and likewise for cosine; the constant column
    differentiates to zero.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if order < 0:
        raise ValueError("order must be nonnegative")
    k = grid.count_upto(cutoff)
    if k == 0:
        raise ValueError("cutoff lies below the lowest grid pulsation")
    w = grid.values[:k]
    t = np.arange(n, dtype=float)
    phase = np.outer(t, w) + order * _HALF_PI
    amp = w**order
    matrix = np.empty((n, 2 * k + 1))
    matrix[:, 0] = 1.0 if order == 0 else 0.0
    matrix[:, 1::2] = np.sin(phase) * amp
    matrix[:, 2::2] = np.cos(phase) * amp
    return BasisMatrix(matrix=matrix, pulsations=w, order=order, cutoff=float(cutoff))


def _equalized(B: np.ndarray) -> np.ndarray:
    """Scale columns to unit 2-norm; zero columns are left untouched."""
    norms = np.linalg.norm(B, axis=0)
    norms = np.where(norms == 0.0, 1.0, norms)
    return B / norms


def project(grid: PulsationGrid, s, cutoff: float) -> np.ndarray:
    """Least-squares projection of ``s`` onto the basis truncated at ``cutoff``.

    Computed from a rank-revealing orthogonal factorization of the
    column-equalized basis; the truncated basis is severely ill-conditioned at
    low cutoffs, so small singular directions are discarded instead of
    inverted.
    """
    s = check_series(s, name="s")
    B = _equalized(eval_basis(grid, s.size, cutoff, 0).matrix)
    U, sv, _ = np.linalg.svd(B, full_matrices=False)
    keep = sv > max(B.shape) * np.finfo(float).eps * sv[0]
    U = U[:, keep]
    return U @ (U.T @ s)


# Deflated block directions below this 2-norm are roundoff, not new content;
# basis columns enter with unit norm so the threshold is absolute.
_BLOCK_RANK_TOL = 1e-10


def residual_curve(grid: PulsationGrid, s, design: DesignGrid) -> np.ndarray:
    """Projection residual norms of ``s`` for every design cutoff.

    The design cutoffs nest, so the orthonormal basis is grown one pulsation
    block at a time (with reorthogonalization) and the residual is deflated
    incrementally.  Entry j equals ``norm(s - project(grid, s, design[j]))``
    and the curve is nonincreasing by construction.
    """
    s = check_series(s, name="s")
    n = s.size
    B = _equalized(eval_basis(grid, n, design.values[-1], 0).matrix)
    # number of basis columns retained by each design cutoff
    stops = 1 + 2 * (design.grid_indices + 1)
    Q = np.empty((n, min(B.shape[1], n)))
    q_n = 0
    r = s.copy()
    errors = np.empty(design.n_r)
    start = 0
    for j, stop in enumerate(stops):
        stop = min(int(stop), B.shape[1])
        if stop > start:
            C = B[:, start:stop].copy()
            for _ in range(2):
                if q_n:
                    C -= Q[:, :q_n] @ (Q[:, :q_n].T @ C)
            Uc, sv, _ = np.linalg.svd(C, full_matrices=False)
            k = int(np.sum(sv > _BLOCK_RANK_TOL))
            if k:
                Uk = Uc[:, :k]
                if q_n:
                    Uk = Uk - Q[:, :q_n] @ (Q[:, :q_n].T @ Uk)
                    Uk, _ = np.linalg.qr(Uk)
                take = min(k, Q.shape[1] - q_n)
                Q[:, q_n : q_n + take] = Uk[:, :take]
                r = r - Uk @ (Uk.T @ r)
                q_n += take
            start = stop
        errors[j] = np.linalg.norm(r)
    return errors
