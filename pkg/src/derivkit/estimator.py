"""Derivative estimation: bandwidth selection, noise calibration, sliding maps.

Estimating the d-th derivative of a series runs three stages: pick the
bandwidth index whose projection residual reaches the curve's floor, pick the
noise index by filtering with a zero-order map and measuring the removed
component, then slide the selected trained map along the series and average
the overlapping window estimates per instant.  The per-instant standard
deviation of those overlapping estimates is the confidence width.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .basis import DesignGrid, PulsationGrid, residual_curve
from .dictionary import CompressedMap, ModelDictionary, load_dictionary
from .validation import check_series

# Fraction of the residual drop that must remain before a bandwidth counts as
# having reached the curve's floor.
DEFAULT_THRESHOLD = 0.1
# Noise level assumed by the calibration pilot when no prior is supplied.
PILOT_NOISE = 0.05


def window_counts(n: int, n_w: int) -> np.ndarray:
    """Number of sliding windows covering each instant of a length-n series.

    Entry m (0-based) counts the pairs (i, k) with i + k = m over valid
    window starts i and offsets k in 0..n_w-1.  The count ramps up to n_w,
    plateaus, and ramps down to 1 at both ends.
    """
    if n_w < 1 or n < n_w:
        raise ValueError("need 1 <= n_w <= n")
    m = np.arange(1, n + 1)
    return np.minimum.reduce([m, np.full(n, n_w), np.full(n, n - n_w + 1), n - m + 1])


def sliding_estimate(s, cmap: CompressedMap):
    """Apply a windowed map along ``s`` and pool the overlapping estimates.

    Returns (values, sigma): per-instant mean and population standard
    deviation of the window estimates covering that instant.  Instants
    covered by a single window get sigma = 0.
    """
    n_w = cmap.n_w
    s = check_series(s, min_length=n_w, name="s")
    n = s.size
    W = sliding_window_view(s, n_w)
    E = cmap.apply_windows(W)
    idx = (np.arange(n - n_w + 1)[:, None] + np.arange(n_w)[None, :]).ravel()
    counts = window_counts(n, n_w)
    values = np.bincount(idx, weights=E.ravel(), minlength=n) / counts
    dev = E.ravel() - values[idx]
    sigma = np.sqrt(np.bincount(idx, weights=dev**2, minlength=n) / counts)
    return values, sigma


def select_bandwidth(s, grid: PulsationGrid, design: DesignGrid, threshold: float = DEFAULT_THRESHOLD) -> int:
    """Smallest design index whose residual is within ``threshold`` of the floor.

    The drop is measured against the first design pulsation's residual; a
    flat curve (constant series, or one already inside the narrowest band)
    selects index 1.  Returns a 1-based index into the design ladder.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")
    checked = check_series(s, min_length=1, name="s")
    errors = residual_curve(grid, checked, design)
    drop = errors[0] - errors[-1]
    # A drop this far below the series scale is numerical noise on a flat
    # curve (constant series, or content inside the narrowest band already).
    if drop <= 1e-9 * np.linalg.norm(checked):
        return 1
    within = (errors - errors[-1]) <= threshold * drop
    return int(np.argmax(within)) + 1


def _noise_index(levels: np.ndarray, value: float) -> int:
    """1-based index of the noise level closest to ``value`` (ties go higher)."""
    diffs = np.abs(levels - value)
    return int(levels.size - np.argmin(diffs[::-1]))


def estimate_noise(
    s,
    dictionary: ModelDictionary,
    j_star: int,
    prior_noise: float | None = None,
    passes: int = 1,
):
    """Estimate the noise level of ``s`` given its selected bandwidth index.

    Filters the series with the zero-order map at a pilot noise index (the
    table entry nearest ``prior_noise``, or nearest 0.05 when no prior is
    given), takes the standard deviation of the removed component as the
    noise estimate, and maps it back to the nearest table entry.  With
    ``passes=2`` the filter step is repeated once at the refined index.

    Returns (sigma_star, ell_star) with ell_star 1-based.
    """
    if passes < 1:
        raise ValueError("passes must be at least 1")
    levels = dictionary.noise_levels
    pilot = PILOT_NOISE if prior_noise is None else float(prior_noise)
    ell = _noise_index(levels, pilot)
    sigma_star = float("nan")
    for _ in range(passes):
        filtered, _ = sliding_estimate(s, dictionary.get(j_star, ell, 0))
        sigma_star = float(np.std(np.asarray(s, dtype=float) - filtered))
        ell = _noise_index(levels, sigma_star)
    return sigma_star, ell


@dataclass(frozen=True)
class DerivativeEstimate:
    """Per-instant derivative values with confidence widths.

    values      estimated d-th derivative in caller units (scaled by tau**-d)
    sigma       per-instant standard deviation of the window estimates,
                scaled like values; zero where only one window contributes
    d, tau      requested order and sampling period
    j_star      selected 1-based bandwidth index
    ell_star    selected 1-based noise index
    sigma_star  measured noise standard deviation (sample units)
    """

    values: np.ndarray
    sigma: np.ndarray
    d: int
    tau: float
    j_star: int
    ell_star: int
    sigma_star: float

    def __post_init__(self) -> None:
        if self.values.shape != self.sigma.shape:
            raise ValueError("values and sigma must align")
        if np.any(self.sigma < 0.0):
            raise ValueError("sigma must be nonnegative")


def est_deriv(
    s,
    d: int,
    tau: float = 1.0,
    *,
    dictionary: ModelDictionary,
    noise_level: float | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    noise_passes: int = 1,
) -> DerivativeEstimate:
    """Estimate the d-th derivative of a uniformly sampled series.

    Parameters
    ----------
    s : array_like
        Samples taken every ``tau`` time units; length at least the
        dictionary window size.
    d : int
        Derivative order, up to the dictionary's trained maximum.
    tau : float
        Sampling period; estimates are scaled by ``tau**-d``.
    dictionary : ModelDictionary
        Trained maps to draw from.
    noise_level : float, optional
        Prior noise standard deviation used to seed the calibration pilot.
    threshold : float
        Residual-drop fraction for bandwidth selection.
    noise_passes : int
        Number of noise calibration passes (1 by default).
    """
    s = check_series(s, min_length=dictionary.n_w, name="s")
    if not 0 <= d <= dictionary.d_max:
        raise ValueError(f"d must lie in 0..{dictionary.d_max}")
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    j_star = select_bandwidth(s, dictionary.grid, dictionary.design, threshold)
    sigma_star, ell_star = estimate_noise(s, dictionary, j_star, noise_level, noise_passes)
    values, sigma = sliding_estimate(s, dictionary.get(j_star, ell_star, d))
    scale = tau ** (-d)
    return DerivativeEstimate(
        values=values * scale,
        sigma=sigma * scale,
        d=d,
        tau=float(tau),
        j_star=j_star,
        ell_star=ell_star,
        sigma_star=sigma_star,
    )


class DerivativeEstimator(BaseEstimator):
    """Scikit-learn style wrapper around the derivative estimation pipeline.

    ``fit`` selects the bandwidth and noise indices on a series; ``predict``
    applies the selected maps, optionally returning the confidence widths.
    The heavy lifting lives in the module functions; this class exists so the
    algorithm composes with estimator-based tooling (get_params/set_params,
    cloning).

    Parameters
    ----------
    dictionary : ModelDictionary, str or Path
        Trained dictionary or a path to one (loaded on fit).
    d : int
        Derivative order to predict.
    tau : float
        Sampling period.
    noise_level : float, optional
        Prior for the noise calibration pilot.
    threshold : float
        Residual-drop fraction for bandwidth selection.
    noise_passes : int
        Noise calibration passes.

    Attributes
    ----------
    dictionary_ : ModelDictionary
        Resolved dictionary.
    j_star_, ell_star_ : int
        Selected 1-based bandwidth and noise indices.
    sigma_star_ : float
        Measured noise standard deviation.
    """

    def __init__(
        self,
        dictionary=None,
        d: int = 1,
        tau: float = 1.0,
        noise_level: float | None = None,
        threshold: float = DEFAULT_THRESHOLD,
        noise_passes: int = 1,
    ):
        self.dictionary = dictionary
        self.d = d
        self.tau = tau
        self.noise_level = noise_level
        self.threshold = threshold
        self.noise_passes = noise_passes

    def _resolve_dictionary(self) -> ModelDictionary:
        if isinstance(self.dictionary, ModelDictionary):
            return self.dictionary
        if isinstance(self.dictionary, (str, Path)):
            return load_dictionary(self.dictionary)
        raise ValueError("dictionary must be a ModelDictionary or a path to one")

    def fit(self, s, y=None) -> "DerivativeEstimator":
        dictionary = self._resolve_dictionary()
        if not 0 <= self.d <= dictionary.d_max:
            raise ValueError(f"d must lie in 0..{dictionary.d_max}")
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")
        s = check_series(s, min_length=dictionary.n_w, name="s")
        self.dictionary_ = dictionary
        self.j_star_ = select_bandwidth(s, dictionary.grid, dictionary.design, self.threshold)
        self.sigma_star_, self.ell_star_ = estimate_noise(
            s, dictionary, self.j_star_, self.noise_level, self.noise_passes
        )
        return self

    def predict(self, s, return_std: bool = False):
        if not hasattr(self, "dictionary_"):
            raise NotFittedError("call fit before predict")
        s = check_series(s, min_length=self.dictionary_.n_w, name="s")
        cmap = self.dictionary_.get(self.j_star_, self.ell_star_, self.d)
        values, sigma = sliding_estimate(s, cmap)
        scale = self.tau ** (-self.d)
        if return_std:
            return values * scale, sigma * scale
        return values * scale

    def fit_predict(self, s, return_std: bool = False):
        return self.fit(s).predict(s, return_std=return_std)
