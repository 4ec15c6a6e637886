"""Command line interface: train, estimate, bench and report subcommands.

Exit codes: 0 success, 2 argument error, 3 I/O or file-format error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import (
    ALL_METHODS,
    ErrorReport,
    run_bench,
    write_coverage_csv,
    write_percentiles_csv,
)
from .config import DictionaryConfig
from .dictionary import (
    DictionaryFileError,
    TrainingError,
    load_dictionary,
    save_dictionary,
    train_dictionary,
)
from .estimator import est_deriv
from .metrics import DegenerateTruthError
from .baselines import NoValidSettingError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="derivkit",
        description="Derivative reconstruction from noisy series with trained windowed maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a map dictionary and write it to disk")
    p_train.add_argument("--out", required=True, help="output dictionary file")
    p_train.add_argument("--n-samples", type=int, default=None, help="training rows per pair")
    p_train.add_argument("--tol", type=float, default=None, help="compression tolerance")
    p_train.add_argument("--seed", type=int, default=0, help="master seed")
    p_train.add_argument(
        "--mini", action="store_true", help="train the small test configuration instead"
    )
    p_train.add_argument("--workers", type=int, default=None, help="worker cap")

    p_est = sub.add_parser("estimate", help="estimate a derivative of a series from CSV")
    p_est.add_argument("--dict", required=True, dest="dict_path", help="dictionary file")
    p_est.add_argument("--in", required=True, dest="in_path", help="input CSV (header + one value per row)")
    p_est.add_argument("--d", required=True, type=int, help="derivative order")
    p_est.add_argument("--tau", required=True, type=float, help="sampling period")
    p_est.add_argument("--noise-level", type=float, default=None, help="noise prior")
    p_est.add_argument("--out", required=True, help="output CSV (index,value,sigma)")

    p_bench = sub.add_parser("bench", help="run the benchmark and write a JSON report")
    p_bench.add_argument("--dict", required=True, dest="dict_path", help="dictionary file")
    p_bench.add_argument("--scale", choices=("full", "mini"), default="mini")
    p_bench.add_argument(
        "--methods",
        default=",".join(ALL_METHODS),
        help="comma-separated subset of: " + ",".join(ALL_METHODS),
    )
    p_bench.add_argument("--seed", type=int, default=7)
    p_bench.add_argument("--out", required=True, help="output report JSON")
    p_bench.add_argument("--workers", type=int, default=None, help="worker cap")

    p_rep = sub.add_parser("report", help="extract a CSV table from a report")
    p_rep.add_argument("--in", required=True, dest="in_path", help="report JSON")
    p_rep.add_argument("--table", required=True, choices=("coverage", "percentiles"))
    p_rep.add_argument("--csv", required=True, help="output CSV path")

    return parser


def _cmd_train(args) -> int:
    config = DictionaryConfig.tiny() if args.mini else DictionaryConfig()
    overrides = {}
    if args.n_samples is not None:
        overrides["n_samples"] = args.n_samples
    if args.tol is not None:
        overrides["tol"] = args.tol
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    if args.seed < 0:
        raise ValueError("seed must be nonnegative")
    dictionary = train_dictionary(config, args.seed, workers=args.workers)
    save_dictionary(dictionary, args.out)
    size = Path(args.out).stat().st_size
    print(f"wrote {args.out} ({size / 1e6:.2f} MB, {len(dictionary.entries)} maps)")
    return EXIT_OK


def _read_series_csv(path) -> np.ndarray:
    lines = Path(path).read_text().strip().splitlines()
    if len(lines) < 2:
        raise DictionaryFileError(f"{path}: expected a header line plus one value per row")
    try:
        return np.array([float(line.strip().split(",")[0]) for line in lines[1:]])
    except ValueError as exc:
        raise DictionaryFileError(f"{path}: could not parse series values: {exc}") from exc


def _cmd_estimate(args) -> int:
    dictionary = load_dictionary(args.dict_path)
    s = _read_series_csv(args.in_path)
    est = est_deriv(
        s, args.d, args.tau, dictionary=dictionary, noise_level=args.noise_level
    )
    lines = ["index,value,sigma"]
    for i, (v, sg) in enumerate(zip(est.values, est.sigma)):
        lines.append(f"{i},{float(v)!r},{float(sg)!r}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(
        f"wrote {args.out} (n={est.values.size}, j*={est.j_star}, "
        f"l*={est.ell_star}, sigma*={est.sigma_star:.4g})"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    unknown = set(methods) - set(ALL_METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    if not methods:
        raise ValueError("at least one method is required")
    report = run_bench(
        args.dict_path,
        scale=args.scale,
        methods=methods,
        seed=args.seed,
        out_path=args.out,
        workers=args.workers,
    )
    print(f"wrote {args.out} ({report.data['n_cases']} cases)")
    return EXIT_OK


def _cmd_report(args) -> int:
    report = ErrorReport.from_path(args.in_path)
    if args.table == "coverage":
        write_coverage_csv(report, args.csv)
    else:
        write_percentiles_csv(report, args.csv)
    print(f"wrote {args.csv}")
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "estimate": _cmd_estimate,
    "bench": _cmd_bench,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (
        DegenerateTruthError,
        NoValidSettingError,
        TrainingError,
        np.linalg.LinAlgError,
        FloatingPointError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DictionaryFileError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
