"""Benchmark error metric and confidence-interval coverage tables."""

from __future__ import annotations

import numpy as np

from .validation import check_series

# Coverage thresholds as multiples of the per-instant confidence width.
COVERAGE_THRESHOLDS = (("sigma/2", 0.5), ("sigma", 1.0), ("2sigma", 2.0), ("3sigma", 3.0))


class DegenerateTruthError(ValueError):
    """The reference signal's median magnitude is zero, so the error is undefined."""


def eval_error(est, truth) -> float:
    """Robust relative error: 95th percentile of |est - truth| over the median of |truth|.

    Percentiles use linear interpolation between order statistics.
    """
    est = check_series(est, name="est")
    truth = check_series(truth, name="truth")
    if est.shape != truth.shape:
        raise ValueError("est and truth must have the same length")
    denom = float(np.percentile(np.abs(truth), 50.0))
    if denom == 0.0:
        raise DegenerateTruthError("median of |truth| is zero")
    return float(np.percentile(np.abs(est - truth), 95.0) / denom)


def coverage_table(pooled: dict) -> dict:
    """Fraction of instants whose error stays inside c * sigma, per order.

    ``pooled`` maps a derivative order to a pair (abs_errors, sigmas) of
    equally long arrays pooled over all instants of all cases.  Returns
    {order: {threshold label: ratio}} with ratios nondecreasing across the
    thresholds by construction.
    """
    table: dict = {}
    for d, (errors, sigmas) in pooled.items():
        errors = np.abs(np.asarray(errors, dtype=float))
        sigmas = np.asarray(sigmas, dtype=float)
        if errors.shape != sigmas.shape or errors.ndim != 1:
            raise ValueError("errors and sigmas must be aligned vectors")
        if errors.size == 0:
            raise ValueError("coverage needs at least one instant")
        table[d] = {
            label: float(np.mean(errors <= mult * sigmas))
            for label, mult in COVERAGE_THRESHOLDS
        }
    return table
