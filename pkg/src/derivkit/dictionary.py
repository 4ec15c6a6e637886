"""Trained map dictionary: compression, training loop and binary persistence.

A dictionary holds one compressed linear map per (bandwidth index, noise
index, derivative order) triple.  Maps are stored through the thin SVD of the
coefficient matrix A; applying a map to a window y computes A' y through the
factors, never through the dense matrix.

File format (little endian, version 1):

    magic "DRVK" | u16 version
    u16 n_w, n_per_period, n_grid, n_r, q, d_max, folds
    u32 n_samples | u64 seed | f64 tol
    u16 n_alphas | f64[n_alphas] alphas
    f64[q] noise table | f64[n_r] design pulsations
    records sorted by (j, ell, d):
        u16 j, ell, d, rank | f64[n_w*rank] U | f64[rank] S | f64[n_w*rank] V
        u32 crc32 of the record bytes
    u32 crc32 of everything before the trailer
"""

from __future__ import annotations

import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .basis import DesignGrid, PulsationGrid, _nearest_sorted
from .config import DictionaryConfig
from .ridge import ridge_cv_fit
from .synth import make_training_set
from .validation import worker_count

_MAGIC = b"DRVK"
_VERSION = 1
# Singular values this far below the largest carry no information at f64.
_SV_FLOOR = 1e-12


class DictionaryFileError(Exception):
    """Base class for dictionary file problems."""


class BadMagicError(DictionaryFileError):
    """The file does not start with the dictionary magic bytes."""


class BadVersionError(DictionaryFileError):
    """The file declares an unsupported format version."""


class TruncatedFileError(DictionaryFileError):
    """The file ends before the declared content does."""


class ChecksumError(DictionaryFileError):
    """A stored checksum does not match the data."""


class FormatError(DictionaryFileError):
    """The file structure is internally inconsistent."""


class TrainingError(Exception):
    """A ridge fit failed during dictionary training."""


class DictKey(NamedTuple):
    """Dictionary key: 1-based bandwidth and noise indices, 0-based order."""

    j: int
    ell: int
    d: int


@dataclass(frozen=True)
class CompressedMap:
    """Thin-SVD factors of one trained map A, stored for fast transposed apply.

    With A = U diag(S) V', applying the map to a window y computes
    A' y = V (S * (U' y)).  S is positive and nonincreasing.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    rel_err: float

    def __post_init__(self) -> None:
        U = np.ascontiguousarray(self.U, dtype=float)
        S = np.ascontiguousarray(self.S, dtype=float)
        V = np.ascontiguousarray(self.V, dtype=float)
        if U.ndim != 2 or V.ndim != 2 or S.ndim != 1:
            raise ValueError("U, V must be matrices and S a vector")
        r = S.size
        if U.shape[1] != r or V.shape[1] != r or U.shape[0] != V.shape[0]:
            raise ValueError("factor shapes are inconsistent")
        if r == 0 or np.any(S <= 0.0) or np.any(np.diff(S) > 0.0):
            raise ValueError("S must be positive and nonincreasing")
        for a in (U, S, V):
            a.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "V", V)

    @property
    def n_w(self) -> int:
        return int(self.U.shape[0])

    @property
    def rank(self) -> int:
        return int(self.S.size)

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Map one window: A' y through the factors."""
        return self.V @ (self.S * (self.U.T @ y))

    def apply_windows(self, W: np.ndarray) -> np.ndarray:
        """Map stacked windows (rows of W) in one pass."""
        return ((W @ self.U) * self.S) @ self.V.T


def compress(A: np.ndarray, tol: float) -> CompressedMap:
    """Truncate the SVD of A at the smallest rank meeting the tolerance.

    The retained rank r is minimal with tail energy
    ``sqrt(sum of discarded sv**2) <= tol * ||A||_F``; singular values below
    1e-12 of the largest are dropped regardless.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    A = np.asarray(A, dtype=float)
    U, sv, Vt = np.linalg.svd(A, full_matrices=False)
    total2 = float(np.sum(sv**2))
    if total2 == 0.0:
        raise ValueError("cannot compress an all-zero map")
    tail2 = np.concatenate([np.cumsum((sv**2)[::-1])[::-1], [0.0]])
    r = int(np.argmax(tail2 <= tol**2 * total2))
    r = max(1, min(r, int(np.sum(sv > _SV_FLOOR * sv[0]))))
    rel_err = float(np.sqrt(tail2[r] / total2))
    return CompressedMap(U=U[:, :r].copy(), S=sv[:r].copy(), V=Vt[:r].T.copy(), rel_err=rel_err)


@dataclass
class ModelDictionary:
    """Complete set of compressed maps plus the grids they were trained on."""

    config: DictionaryConfig
    seed: int
    entries: dict
    grid: PulsationGrid = field(init=False)
    design: DesignGrid = field(init=False)
    noise_levels: np.ndarray = field(init=False)
    selected_alphas: dict | None = None

    def __post_init__(self) -> None:
        self.grid = self.config.grid()
        self.design = self.config.design()
        levels = self.config.noise_levels()
        levels.setflags(write=False)
        self.noise_levels = levels
        expected = {
            DictKey(j, ell, d)
            for j in range(1, self.config.n_r + 1)
            for ell in range(1, self.config.q + 1)
            for d in range(self.config.d_max + 1)
        }
        if set(self.entries) != expected:
            missing = sorted(expected - set(self.entries))[:3]
            extra = sorted(set(self.entries) - expected)[:3]
            raise ValueError(f"entry keys incomplete (missing {missing}, extra {extra})")

    @property
    def n_w(self) -> int:
        return self.config.n_w

    @property
    def d_max(self) -> int:
        return self.config.d_max

    def get(self, j: int, ell: int, d: int) -> CompressedMap:
        if not 1 <= j <= self.config.n_r:
            raise KeyError(f"bandwidth index {j} outside 1..{self.config.n_r}")
        if not 1 <= ell <= self.config.q:
            raise KeyError(f"noise index {ell} outside 1..{self.config.q}")
        if not 0 <= d <= self.config.d_max:
            raise KeyError(f"order {d} outside 0..{self.config.d_max}")
        return self.entries[DictKey(j, ell, d)]


def _fit_pair(config: DictionaryConfig, seed: int, j: int, ell: int):
    """Train and compress all orders for one (j, ell) pair."""
    ts = make_training_set(config, j, ell, seed)
    maps = {}
    alphas = {}
    for d in range(config.d_max + 1):
        key = DictKey(j, ell, d)
        try:
            fit = ridge_cv_fit(ts.features, ts.labels[d], config.alphas, config.folds)
            maps[key] = compress(fit.A, config.tol)
        except Exception as exc:
            raise TrainingError(f"fit failed for {key}") from exc
        alphas[key] = fit.alpha
    return maps, alphas


def train_dictionary(
    config: DictionaryConfig, seed: int, workers: int | None = None
) -> ModelDictionary:
    """Train every (bandwidth, noise, order) map and compress the results.

    Pairs are trained independently (optionally in parallel) and merged in
    sorted key order, so the result depends only on config and seed.
    """
    pairs = [(j, ell) for j in range(1, config.n_r + 1) for ell in range(1, config.q + 1)]
    entries: dict = {}
    alphas: dict = {}
    n_workers = min(worker_count(workers), len(pairs))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda p: _fit_pair(config, seed, *p), pairs))
    else:
        results = [_fit_pair(config, seed, *p) for p in pairs]
    for maps, sel in results:
        entries.update(maps)
        alphas.update(sel)
    entries = {k: entries[k] for k in sorted(entries)}
    return ModelDictionary(config=config, seed=seed, entries=entries, selected_alphas=alphas)


def _f64(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def save_dictionary(dictionary: ModelDictionary, path) -> None:
    """Write the dictionary in the versioned binary format described above."""
    cfg = dictionary.config
    out = bytearray()
    out += struct.pack("<4sH", _MAGIC, _VERSION)
    out += struct.pack(
        "<7H", cfg.n_w, cfg.n_per_period, cfg.n_grid, cfg.n_r, cfg.q, cfg.d_max, cfg.folds
    )
    out += struct.pack("<IQd", cfg.n_samples, dictionary.seed, cfg.tol)
    out += struct.pack("<H", len(cfg.alphas))
    out += _f64(np.asarray(cfg.alphas))
    out += _f64(dictionary.noise_levels)
    out += _f64(dictionary.design.values)
    for key in sorted(dictionary.entries):
        cmap = dictionary.entries[key]
        record = struct.pack("<4H", key.j, key.ell, key.d, cmap.rank)
        record += _f64(cmap.U) + _f64(cmap.S) + _f64(cmap.V)
        out += record
        out += struct.pack("<I", zlib.crc32(record))
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    Path(path).write_bytes(bytes(out))


class _Cursor:
    """Sequential reader that converts overruns into truncation errors."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFileError(
                f"needed {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(float)


def load_dictionary(path) -> ModelDictionary:
    """Read and verify a dictionary file, raising a specific error per defect."""
    data = Path(path).read_bytes()
    cur = _Cursor(data)
    magic, version = cur.unpack("<4sH")
    if magic != _MAGIC:
        raise BadMagicError(f"expected magic {_MAGIC!r}, found {magic!r}")
    if version != _VERSION:
        raise BadVersionError(f"unsupported format version {version}")
    n_w, n_per_period, n_grid, n_r, q, d_max, folds = cur.unpack("<7H")
    n_samples, seed, tol = cur.unpack("<IQd")
    (n_alphas,) = cur.unpack("<H")
    alphas = tuple(float(a) for a in cur.floats(n_alphas))
    noise_levels = cur.floats(q)
    design_values = cur.floats(n_r)
    try:
        config = DictionaryConfig(
            n_per_period=n_per_period,
            n_grid=n_grid,
            n_r=n_r,
            q=q,
            n_w=n_w,
            d_max=d_max,
            n_samples=n_samples,
            folds=folds,
            tol=tol,
            alphas=alphas,
        )
    except ValueError as exc:
        raise FormatError(f"stored configuration is invalid: {exc}") from exc
    entries = {}
    for _ in range(n_r * q * (d_max + 1)):
        record_start = cur.pos
        j, ell, d, rank = cur.unpack("<4H")
        U = cur.floats(n_w * rank).reshape(n_w, rank)
        S = cur.floats(rank)
        V = cur.floats(n_w * rank).reshape(n_w, rank)
        record = data[record_start : cur.pos]
        (crc,) = cur.unpack("<I")
        if crc != zlib.crc32(record):
            raise ChecksumError(f"record checksum mismatch for key ({j}, {ell}, {d})")
        try:
            entries[DictKey(j, ell, d)] = CompressedMap(U=U, S=S, V=V, rel_err=float("nan"))
        except ValueError as exc:
            raise FormatError(f"invalid factors for key ({j}, {ell}, {d}): {exc}") from exc
    (file_crc,) = cur.unpack("<I")
    if cur.pos != len(data):
        raise FormatError(f"{len(data) - cur.pos} unexpected trailing bytes")
    if file_crc != zlib.crc32(data[: -4]):
        raise ChecksumError("file checksum mismatch")
    dictionary = ModelDictionary(config=config, seed=seed, entries=entries)
    stored = np.asarray(design_values)
    if stored.shape != dictionary.design.values.shape or not np.array_equal(
        stored, dictionary.design.values
    ):
        # Regenerated grids disagree with the stored ladder (foreign platform):
        # trust the stored pulsations and re-anchor them on the grid.
        indices = np.atleast_1d(_nearest_sorted(dictionary.grid.values, stored))
        dictionary.design = DesignGrid(values=stored, grid_indices=indices)
    stored_noise = np.asarray(noise_levels)
    if not np.array_equal(stored_noise, dictionary.noise_levels):
        stored_noise.setflags(write=False)
        dictionary.noise_levels = stored_noise
    return dictionary
