"""Build-time configuration shared by training, estimation and benchmarking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import DesignGrid, PulsationGrid, make_design_grid, make_grid

# Ridge candidates spanning seven decades; CV picks one per trained map.
DEFAULT_ALPHAS: tuple[float, ...] = tuple(float(a) for a in np.logspace(-4.0, 3.0, 20))


@dataclass(frozen=True)
class DictionaryConfig:
    """Hyperparameters that fully determine a trained map dictionary.

    n_per_period    samples per period of the fastest basis sinusoid
    n_grid          dense pulsation grid size
    n_r             design-ladder size (bandwidth index range)
    q               noise-table size (noise index range)
    n_w             window length of the trained maps
    d_max           highest derivative order trained
    n_samples       training rows per (bandwidth, noise) pair
    folds           contiguous CV folds for the ridge sweep
    tol             relative Frobenius tolerance of map compression
    noise_step      spacing of the noise table, which starts at 0
    alphas          ridge candidates swept by CV
    """

    n_per_period: int = 5
    n_grid: int = 200
    n_r: int = 21
    q: int = 21
    n_w: int = 50
    d_max: int = 4
    n_samples: int = 500
    folds: int = 2
    tol: float = 1e-3
    noise_step: float = 0.01
    alphas: tuple[float, ...] = field(default=DEFAULT_ALPHAS)

    def __post_init__(self) -> None:
        if self.n_w < 2:
            raise ValueError("n_w must be at least 2")
        if self.d_max < 0:
            raise ValueError("d_max must be nonnegative")
        if self.q < 1:
            raise ValueError("q must be positive")
        if self.n_samples < 2 * self.n_w:
            raise ValueError("n_samples must be at least 2 * n_w")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if not 0.0 < self.tol < 1.0:
            raise ValueError("tol must lie in (0, 1)")
        if self.noise_step <= 0.0:
            raise ValueError("noise_step must be positive")
        if len(self.alphas) == 0:
            raise ValueError("alphas must not be empty")

    def grid(self) -> PulsationGrid:
        return make_grid(self.n_per_period, self.n_grid)

    def design(self) -> DesignGrid:
        return make_design_grid(self.grid(), self.n_r)

    def noise_levels(self) -> np.ndarray:
        """Noise table: q equally spaced standard deviations starting at 0."""
        return self.noise_step * np.arange(self.q, dtype=float)

    @classmethod
    def tiny(cls) -> "DictionaryConfig":
        """Small configuration for fast tests: 8 dictionary entries."""
        return cls(n_grid=40, n_r=2, q=2, n_w=8, d_max=1, n_samples=32)
