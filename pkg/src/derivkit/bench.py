"""Benchmark harness: case grid, method sweep, JSON report and CSV tables."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import best_tuned_all_orders
from .config import DictionaryConfig
from .dictionary import ModelDictionary, load_dictionary
from .estimator import estimate_noise, select_bandwidth, sliding_estimate
from .metrics import COVERAGE_THRESHOLDS, coverage_table, eval_error
from .synth import BenchmarkCase, make_benchmark_case
from .validation import worker_count

SCHEMA_VERSION = 1
# Signal bandwidths as fractions of the top grid pulsation.
BANDWIDTH_FRACTIONS = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
# Noise standard deviations of the benchmark series.
NOISE_LEVELS = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.1)
BASELINE_METHODS = ("kalman", "spectral", "savgol", "aostd")
ALL_METHODS = ("proposed",) + BASELINE_METHODS
ERROR_PERCENTILES = (50, 75, 90, 95)
CASE_LENGTH = 2000


def build_benchmark(
    seed: int,
    scale: str = "full",
    n: int = CASE_LENGTH,
    d_max: int = 4,
    config: DictionaryConfig | None = None,
) -> list:
    """Generate the benchmark cases: every bandwidth x noise pair, seeded.

    ``scale="mini"`` keeps every fourth pair along the (bandwidth + noise)
    diagonal, so all noise levels and both bandwidth extremes stay covered.
    """
    if scale not in ("full", "mini"):
        raise ValueError("scale must be 'full' or 'mini'")
    cases = []
    for wi, frac in enumerate(BANDWIDTH_FRACTIONS):
        for li, nu in enumerate(NOISE_LEVELS):
            if scale == "mini" and (wi + li) % 4 != 0:
                continue
            cases.append(
                make_benchmark_case(frac, nu, n, d_max, seed=(seed, wi, li), config=config)
            )
    return cases


def _proposed_case(dictionary: ModelDictionary, case: BenchmarkCase, orders) -> dict:
    """Run the trained-dictionary estimator on one case for every order."""
    s = case.noisy
    j_star = select_bandwidth(s, dictionary.grid, dictionary.design)
    sigma_star, ell_star = estimate_noise(s, dictionary, j_star)
    result = {
        "j_star": j_star,
        "ell_star": ell_star,
        "sigma_star": sigma_star,
        "errors": {},
    }
    pooled = {}
    for d in orders:
        values, sigma = sliding_estimate(s, dictionary.get(j_star, ell_star, d))
        result["errors"][str(d)] = eval_error(values, case.clean[d])
        pooled[d] = (np.abs(values - case.clean[d]), sigma)
    return result, pooled


def _evaluate_case(dictionary: ModelDictionary, case: BenchmarkCase, index: int, methods, orders):
    record = {
        "index": index,
        "bandwidth_fraction": case.bandwidth_fraction,
        "noise_level": case.noise_level,
        "seed": list(case.seed) if isinstance(case.seed, tuple) else case.seed,
    }
    pooled = None
    try:
        if "proposed" in methods:
            record["proposed"], pooled = _proposed_case(dictionary, case, orders)
        for method in methods:
            if method == "proposed":
                continue
            tuned = best_tuned_all_orders(method, case, orders)
            record[method] = {
                str(d): {"error": err, "params": _params_dict(params)}
                for d, (params, err) in tuned.items()
            }
    except Exception as exc:  # a failed case is reported, never fatal
        record["failed"] = f"{type(exc).__name__}: {exc}"
        pooled = None
    return record, pooled


def _params_dict(params) -> dict:
    out = {}
    for name, value in vars(params).items():
        if isinstance(value, tuple):
            out[name] = list(value)
        else:
            out[name] = value
    return out


def evaluate_benchmark(
    dictionary: ModelDictionary,
    cases,
    methods=ALL_METHODS,
    workers: int | None = None,
) -> dict:
    """Score every method on every case and aggregate the results.

    Cases run independently (optionally across threads); the reduction is
    ordered by case index so the report content never depends on scheduling.
    """
    methods = tuple(methods)
    unknown = set(methods) - set(ALL_METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    orders = list(range(1, dictionary.d_max + 1))
    n_workers = min(worker_count(workers), max(1, len(cases)))
    jobs = [(case, i) for i, case in enumerate(cases)]
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            outputs = list(
                pool.map(lambda ci: _evaluate_case(dictionary, ci[0], ci[1], methods, orders), jobs)
            )
    else:
        outputs = [_evaluate_case(dictionary, case, i, methods, orders) for case, i in jobs]
    records = [rec for rec, _ in outputs]
    pooled_all = {d: ([], []) for d in orders}
    for _, pooled in outputs:
        if pooled is None:
            continue
        for d in orders:
            pooled_all[d][0].append(pooled[d][0])
            pooled_all[d][1].append(pooled[d][1])
    aggregates = {"error_percentiles": {}, "error_vs_noise": {}}
    for method in methods:
        per_d_errors = {d: [] for d in orders}
        per_noise: dict = {d: {} for d in orders}
        for record in records:
            if "failed" in record or method not in record:
                continue
            block = record[method]
            errors = block["errors"] if method == "proposed" else None
            for d in orders:
                if method == "proposed":
                    err = errors[str(d)]
                else:
                    err = block[str(d)]["error"]
                per_d_errors[d].append(err)
                per_noise[d].setdefault(str(record["noise_level"]), []).append(err)
        aggregates["error_percentiles"][method] = {
            str(d): {
                str(p): float(np.percentile(per_d_errors[d], p)) for p in ERROR_PERCENTILES
            }
            for d in orders
            if per_d_errors[d]
        }
        aggregates["error_vs_noise"][method] = {
            str(d): {
                nu: float(np.median(errs)) for nu, errs in sorted(per_noise[d].items())
            }
            for d in orders
            if per_noise[d]
        }
    if "proposed" in methods:
        pooled_concat = {
            d: (np.concatenate(e), np.concatenate(sg))
            for d, (e, sg) in pooled_all.items()
            if e
        }
        coverage = coverage_table(pooled_concat)
        aggregates["coverage"] = {
            str(d): table for d, table in sorted(coverage.items())
        }
        aggregates["coverage_instants"] = {
            str(d): int(pooled_concat[d][0].size) for d in pooled_concat
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "methods": list(methods),
        "n_cases": len(cases),
        "dictionary": {
            "n_w": dictionary.config.n_w,
            "n_r": dictionary.config.n_r,
            "q": dictionary.config.q,
            "d_max": dictionary.config.d_max,
            "n_samples": dictionary.config.n_samples,
            "tol": dictionary.config.tol,
            "seed": dictionary.seed,
        },
        "cases": records,
        "aggregates": aggregates,
    }


class ErrorReport:
    """JSON-backed benchmark report with lossless round-tripping."""

    def __init__(self, data: dict):
        if "schema_version" not in data:
            raise ValueError("not a benchmark report")
        if data["schema_version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data['schema_version']}")
        self.data = data

    @classmethod
    def from_path(cls, path) -> "ErrorReport":
        return cls(json.loads(Path(path).read_text()))

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_json())

    def percentile_rows(self) -> list:
        """Rows (method, d, p50, p75, p90, p95) from the aggregate curves."""
        rows = []
        table = self.data["aggregates"]["error_percentiles"]
        for method in self.data["methods"]:
            if method not in table:
                continue
            for d in sorted(table[method], key=int):
                entry = table[method][d]
                rows.append(
                    [method, int(d)] + [entry[str(p)] for p in ERROR_PERCENTILES]
                )
        return rows

    def noise_rows(self) -> list:
        """Rows (method, d, noise_level, median_error)."""
        rows = []
        table = self.data["aggregates"]["error_vs_noise"]
        for method in self.data["methods"]:
            if method not in table:
                continue
            for d in sorted(table[method], key=int):
                for nu, err in table[method][d].items():
                    rows.append([method, int(d), float(nu), err])
        return rows

    def coverage_rows(self) -> list:
        """Rows (d, threshold, ratio); requires a run that included 'proposed'."""
        coverage = self.data["aggregates"].get("coverage")
        if coverage is None:
            raise ValueError("report has no coverage table (run included no 'proposed')")
        rows = []
        for d in sorted(coverage, key=int):
            for label, _ in COVERAGE_THRESHOLDS:
                rows.append([int(d), label, coverage[d][label]])
        return rows


def _write_csv(path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(c) if isinstance(c, float) else str(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_percentiles_csv(report: ErrorReport, path) -> None:
    header = ["method", "d"] + [f"p{p}" for p in ERROR_PERCENTILES]
    _write_csv(path, header, report.percentile_rows())


def write_noise_csv(report: ErrorReport, path) -> None:
    _write_csv(path, ["method", "d", "noise_level", "median_error"], report.noise_rows())


def write_coverage_csv(report: ErrorReport, path) -> None:
    _write_csv(path, ["d", "threshold", "ratio"], report.coverage_rows())


def run_bench(
    dict_path,
    scale: str = "mini",
    methods=ALL_METHODS,
    seed: int = 7,
    out_path=None,
    workers: int | None = None,
) -> ErrorReport:
    """Load a dictionary, run the benchmark and write the report artifacts.

    Writes the JSON report to ``out_path`` plus two plot-ready CSVs next to
    it (percentile curves and error-versus-noise curves).  Rerunning with
    the same inputs produces byte-identical files.
    """
    dictionary = (
        dict_path if isinstance(dict_path, ModelDictionary) else load_dictionary(dict_path)
    )
    cases = build_benchmark(seed, scale, d_max=dictionary.d_max)
    data = evaluate_benchmark(dictionary, cases, methods, workers)
    data["scale"] = scale
    data["seed"] = seed
    report = ErrorReport(data)
    if out_path is not None:
        out_path = Path(out_path)
        report.write(out_path)
        stem = out_path.with_suffix("")
        write_percentiles_csv(report, Path(f"{stem}_percentiles.csv"))
        write_noise_csv(report, Path(f"{stem}_noise.csv"))
    return report
