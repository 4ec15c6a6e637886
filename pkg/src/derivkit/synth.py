"""Seeded generation of band-limited training sets and benchmark cases.

All randomness flows through a counter-based Philox generator keyed by a
seed plus an explicit stream tuple, so regenerating any training set or
benchmark case never depends on call order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import eval_basis
from .config import DictionaryConfig

_MAX_REDRAWS = 16


def stream_rng(seed, *stream: int) -> np.random.Generator:
    """Philox generator on the (seed, stream...) split of the seed tree."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class TrainingSet:
    """Windowed training rows for one (bandwidth index, noise index) pair.

    features    (n_samples, n_w) noisy normalized windows
    labels      map from derivative order to the (n_samples, n_w) noise-free
                order-d windows sharing the features' coefficient draws;
                labels[0] is the noise-free version of features
    j, ell      1-based bandwidth and noise indices
    seed        master seed of the stream the rows were drawn from
    """

    features: np.ndarray
    labels: dict
    j: int
    ell: int
    seed: int


def _draw_windows(rng, bases, length: int, n_signals: int, scales=None):
    """Draw basis coefficients and return per-order windows, inf-norm normalized.

    ``scales``, when given, multiplies the standard-normal coefficients
    column-by-column, shaping the expected power spectrum of the draws.
    Returns a dict order -> (n_signals, length) array.  Signals whose
    zero-order window is identically zero are redrawn; this has probability
    zero but keeps the normalization well defined.
    """
    n_cols = bases[0].matrix.shape[1]

    def draw(count):
        raw = rng.standard_normal((n_cols, count))
        return raw if scales is None else raw * scales[:, None]

    coeff = draw(n_signals)
    base0 = bases[0].matrix @ coeff
    norms = np.max(np.abs(base0), axis=0)
    for _ in range(_MAX_REDRAWS):
        bad = norms == 0.0
        if not bad.any():
            break
        coeff[:, bad] = draw(int(bad.sum()))
        base0 = bases[0].matrix @ coeff
        norms = np.max(np.abs(base0), axis=0)
    else:
        raise RuntimeError("could not draw a nonzero window")
    out = {0: (base0 / norms).T}
    for d, basis in enumerate(bases[1:], start=1):
        out[d] = ((basis.matrix @ coeff) / norms).T
    return out


def _flat_band_scales(pulsations, cutoff: float) -> np.ndarray:
    """Coefficient scales giving a flat power spectral density over [0, cutoff].

    Each retained pulsation owns the linear-frequency cell between the
    midpoints toward its neighbours (the constant column owns the cell at 0);
    coefficient variance equals the cell width, split evenly between the sine
    and cosine columns.  Energy beyond any pulsation w is then proportional to
    cutoff - w, so the series behaves like band-limited white signal content
    rather than content uniform per (log-spaced) basis column.
    """
    p = np.asarray(pulsations, dtype=float)
    pts = np.concatenate([[0.0], p])
    bounds = np.concatenate([(pts[:-1] + pts[1:]) / 2.0, [float(cutoff)]])
    cells = np.diff(np.concatenate([[0.0], bounds]))
    var = np.empty(1 + 2 * p.size)
    var[0] = cells[0]
    var[1::2] = cells[1:] / 2.0
    var[2::2] = cells[1:] / 2.0
    return np.sqrt(var)


def make_training_set(config: DictionaryConfig, j: int, ell: int, seed: int) -> TrainingSet:
    """Build the training rows for design pulsation ``j`` and noise level ``ell``.

    Each row is a random in-band window normalized to unit inf-norm; the
    features add white noise at the table level for ``ell`` while every label
    order stays noise free.
    """
    if not 1 <= j <= config.n_r:
        raise ValueError(f"j must lie in 1..{config.n_r}")
    if not 1 <= ell <= config.q:
        raise ValueError(f"ell must lie in 1..{config.q}")
    grid = config.grid()
    design = config.design()
    cutoff = design.values[j - 1]
    nu = float(config.noise_levels()[ell - 1])
    rng = stream_rng(seed, j, ell)
    bases = [eval_basis(grid, config.n_w, cutoff, d) for d in range(config.d_max + 1)]
    labels = _draw_windows(rng, bases, config.n_w, config.n_samples)
    noise = rng.standard_normal((config.n_samples, config.n_w))
    features = labels[0] + nu * noise
    return TrainingSet(features=features, labels=labels, j=j, ell=ell, seed=seed)


@dataclass(frozen=True)
class BenchmarkCase:
    """One synthetic evaluation series with exact derivatives.

    noisy               observed series (clean[0] plus white noise)
    clean               map from derivative order to the exact order-d series
    bandwidth_fraction  cutoff as a fraction of the top grid pulsation
    noise_level         noise standard deviation
    seed                seed (or seed tuple) of the generating stream
    """

    noisy: np.ndarray
    clean: dict
    bandwidth_fraction: float
    noise_level: float
    seed: object

    @property
    def n(self) -> int:
        return int(self.noisy.size)


def make_benchmark_case(
    bandwidth_fraction: float,
    noise_level: float,
    n: int,
    d_max: int,
    seed,
    config: DictionaryConfig | None = None,
) -> BenchmarkCase:
    """Generate a random in-band series of length ``n`` with exact derivatives.

    The cutoff is ``bandwidth_fraction`` times the top grid pulsation, snapped
    to the nearest grid member; derivatives come from the closed-form basis
    derivative columns, so they are exact rather than numerical.  Coefficient
    variances follow a flat power spectral density over [0, cutoff] (see
    ``_flat_band_scales``), so the series carries energy uniformly across its
    band the way a white band-limited signal does.
    """
    config = config or DictionaryConfig()
    if not 0.0 < bandwidth_fraction <= 1.0:
        raise ValueError("bandwidth_fraction must lie in (0, 1]")
    if noise_level < 0.0:
        raise ValueError("noise_level must be nonnegative")
    grid = config.grid()
    if n < 1:
        raise ValueError("n must be positive")
    cutoff = float(grid.values[grid.nearest_index(bandwidth_fraction * grid.omega_max)])
    rng = stream_rng(seed)
    bases = [eval_basis(grid, n, cutoff, d) for d in range(d_max + 1)]
    scales = _flat_band_scales(bases[0].pulsations, cutoff)
    windows = _draw_windows(rng, bases, n, 1, scales=scales)
    clean = {d: windows[d][0] for d in range(d_max + 1)}
    noisy = clean[0] + noise_level * rng.standard_normal(n)
    return BenchmarkCase(
        noisy=noisy,
        clean=clean,
        bandwidth_fraction=float(bandwidth_fraction),
        noise_level=float(noise_level),
        seed=seed,
    )
