"""Shared fixtures: one tiny dictionary and one full dictionary per session.

The tiny dictionary (8 maps, window 8) trains in milliseconds and serves the
structural tests.  The full dictionary (2205 maps, window 50) is trained once,
saved to disk, and reused by the estimator, benchmark and acceptance tests;
its training wall time is recorded so the acceptance budget can include it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import pytest

from derivkit import load_dictionary, save_dictionary, train_dictionary
from derivkit.config import DictionaryConfig

FULL_SEED = 0
TINY_SEED = 123


@dataclass(frozen=True)
class TrainedArtifacts:
    """Full trained dictionary, its on-disk path and its training wall time."""

    dictionary: object
    path: Path
    train_seconds: float


@pytest.fixture(scope="session")
def tiny_config() -> DictionaryConfig:
    return DictionaryConfig.tiny()


@pytest.fixture(scope="session")
def tiny_dictionary(tiny_config):
    return train_dictionary(tiny_config, TINY_SEED)


@pytest.fixture(scope="session")
def trained(tmp_path_factory) -> TrainedArtifacts:
    """Train the production-size dictionary once and persist it."""
    path = tmp_path_factory.mktemp("dictionary") / "full.dict"
    start = time.perf_counter()
    dictionary = train_dictionary(DictionaryConfig(), FULL_SEED)
    elapsed = time.perf_counter() - start
    save_dictionary(dictionary, path)
    return TrainedArtifacts(dictionary=dictionary, path=path, train_seconds=elapsed)


@pytest.fixture(scope="session")
def full_dictionary(trained):
    """The full dictionary as read back from its file."""
    return load_dictionary(trained.path)
