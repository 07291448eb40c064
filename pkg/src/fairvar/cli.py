"""Command-line entry point: ``fairvar {analyze,simulate-bias,simulate-coverage,simulate-replicates,scenarios}``."""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from typing import Iterator, Sequence, TextIO

from .bootstrap import BootstrapConfig
from .groups import BaseMetric
from .metametrics import ALL_KINDS, MetaMetricKind
from .reporting import (
    AGGREGATED,
    RECORDS,
    AnalysisRequest,
    emit_report,
    render_report,
    run_analysis,
    write_table,
)
from .simulation import BiasSweepConfig, bias_sweep, coverage_study, replicate_study, standard_scenarios

log = logging.getLogger("fairvar")


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _level(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _bootstrap_args(p: argparse.ArgumentParser, default_b: int = 500) -> None:
    p.add_argument("--bootstrap-b", type=int, default=default_b, help="bootstrap resamples (default %(default)s)")
    p.add_argument("--level", type=_level, default=0.95, help="interval confidence level (default %(default)s)")
    p.add_argument("--seed", type=_seed, default=0, help="64-bit unsigned master seed (default %(default)s)")


def _output_args(p: argparse.ArgumentParser, default_format: str) -> None:
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--output-format", choices=("json", "csv"), default=default_format)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairvar",
        description="Bias-corrected between-group performance disparities with bootstrap intervals.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="measure disparities in a predictions file")
    a.add_argument("--input", "-i", required=True)
    a.add_argument("--format", choices=(RECORDS, AGGREGATED), default=RECORDS)
    a.add_argument(
        "--group-by",
        action="append",
        default=[],
        help="group column; comma-join columns for intersectional groups; repeatable",
    )
    a.add_argument(
        "--metric",
        action="append",
        default=[],
        help="base metric: accuracy, fpr, tpr, sr; repeatable",
    )
    a.add_argument(
        "--meta-metric",
        action="append",
        default=[],
        help="max_min_diff, max_min_ratio, max_abs_diff, mean_abs_dev, variance, gei:ALPHA; repeatable (default: all)",
    )
    _bootstrap_args(a)
    _output_args(a, "json")

    b = sub.add_parser("simulate-bias", help="Monte-Carlo bias of every meta-metric over a (K, l) grid")
    defaults = BiasSweepConfig()
    b.add_argument("--total-n", type=int, default=defaults.total_n)
    b.add_argument("--k-grid", type=_int_list, default=defaults.k_grid, help="comma-separated group counts")
    b.add_argument("--lower-bounds", type=_float_list, default=defaults.lower_bounds, help="comma-separated l values")
    b.add_argument("--replicates", type=int, default=defaults.replicates)
    b.add_argument("--seed", type=_seed, default=0)
    _output_args(b, "csv")

    c = sub.add_parser("simulate-coverage", help="bootstrap interval coverage in the four standard scenarios")
    c.add_argument("--replicates", type=int, default=1000)
    c.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on this)")
    _bootstrap_args(c)
    _output_args(c, "csv")

    r = sub.add_parser("simulate-replicates", help="uncorrected vs corrected estimates over independent draws")
    r.add_argument("--replicates", type=int, default=1000)
    r.add_argument("--seed", type=_seed, default=0)
    _output_args(r, "csv")

    s = sub.add_parser("scenarios", help="print the four standard simulation scenarios")
    s.add_argument("--detail", action="store_true", help="include per-group mu and n")
    _output_args(s, "csv")
    return parser


@contextmanager
def _sink(path: str | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _analyze(args: argparse.Namespace) -> None:
    if args.format == AGGREGATED:
        groupings: tuple[tuple[str, ...], ...] = (("group",),)
    else:
        if not args.group_by:
            raise ValueError("analyze needs at least one --group-by for record input")
        groupings = tuple(tuple(c.strip() for c in g.split(",") if c.strip()) for g in args.group_by)
    if not args.metric:
        raise ValueError("analyze needs at least one --metric")
    metrics = tuple(BaseMetric.parse(m) for m in args.metric)
    kinds = tuple(MetaMetricKind.parse(m) for m in args.meta_metric) or ALL_KINDS
    request = AnalysisRequest(
        input_path=args.input,
        input_format=args.format,
        groupings=groupings,
        metrics=metrics,
        meta_metrics=kinds,
        bootstrap=BootstrapConfig(args.bootstrap_b, args.level, args.seed),
        output_path=args.output,
        output_format=args.output_format,
    )
    report = run_analysis(request)
    if request.output_path:
        emit_report(report, request.output_path, request.output_format)
        log.info("wrote %s", request.output_path)
    else:
        sys.stdout.write(render_report(report, request.output_format))


def _simulate_bias(args: argparse.Namespace) -> None:
    config = BiasSweepConfig(
        total_n=args.total_n,
        k_grid=tuple(args.k_grid),
        lower_bounds=tuple(args.lower_bounds),
        replicates=args.replicates,
        seed=args.seed,
    )
    rows = [
        {
            "metric": c.metric,
            "k": c.k,
            "lower": c.lower,
            "n_per_group": c.n_per_group,
            "true_value": c.true_value,
            "mean_bias": c.mean_bias,
            "mc_se": c.mc_se,
            "analytic_bias": c.analytic_bias,
            "undefined": c.undefined,
        }
        for c in bias_sweep(config)
    ]
    with _sink(args.output) as fh:
        write_table(rows, fh, args.output_format)


def _simulate_coverage(args: argparse.Namespace) -> None:
    config = BootstrapConfig(args.bootstrap_b, args.level, args.seed)
    report = coverage_study(replicates=args.replicates, config=config, workers=args.workers)
    with _sink(args.output) as fh:
        write_table(report.table(), fh, args.output_format)


def _simulate_replicates(args: argparse.Namespace) -> None:
    rows = [s.row() for s in replicate_study(replicates=args.replicates, seed=args.seed)]
    with _sink(args.output) as fh:
        write_table(rows, fh, args.output_format)


def _scenarios(args: argparse.Namespace) -> None:
    rows = []
    for s in standard_scenarios():
        row = {
            "scenario": s.name,
            "k": s.k,
            "min_n": min(s.n),
            "max_n": max(s.n),
            "total_n": sum(s.n),
            "min_mu": min(s.mu),
            "max_mu": max(s.mu),
            "true_variance": s.true_variance,
        }
        if args.detail:
            row["mu"] = " ".join(repr(m) for m in s.mu)
            row["n"] = " ".join(str(n) for n in s.n)
        rows.append(row)
    with _sink(args.output) as fh:
        write_table(rows, fh, args.output_format)


COMMANDS = {
    "analyze": _analyze,
    "simulate-bias": _simulate_bias,
    "simulate-coverage": _simulate_coverage,
    "simulate-replicates": _simulate_replicates,
    "scenarios": _scenarios,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"fairvar: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
