"""File ingestion, the analysis pipeline, and report serialisation."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_statistics
from .estimators import DOUBLE_CORRECTED, UNCORRECTED, VarianceEstimate, corrected_variance
from .groups import (
    BaseMetric,
    ClassificationRecord,
    GroupMetricVector,
    GroupOutcome,
    aggregate,
    plug_in_variance,
)
from .metametrics import ALL_KINDS, MetaMetricKind, UndefinedMetaMetricError, meta_metric

RECORDS = "records"
AGGREGATED = "aggregated"
KEY_SEPARATOR = "|"
CSV_COLUMNS = ("base_metric", "grouping", "statistic", "value", "lower", "upper")


class DataError(ValueError):
    """A malformed input file; ``line`` is 1-based and counts the header."""

    def __init__(self, message: str, path: str | os.PathLike | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.line = line


class AnalysisError(ValueError):
    def __init__(self, metric: str, grouping: str, cause: BaseException):
        super().__init__(f"[{metric} by {grouping}] {cause}")
        self.metric = metric
        self.grouping = grouping


# -- loading -------------------------------------------------------------------


def _read_rows(path: str | os.PathLike) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise DataError("no data", path)
        rows = []
        for row in reader:
            if None in row:
                raise DataError("too many fields", path, reader.line_num)
            rows.append(row)
    if not rows:
        raise DataError("no data", path)
    return [h.strip() for h in header], rows


def _binary(value: str | None, column: str, path, line: int) -> int:
    text = (value or "").strip()
    if text not in ("0", "1"):
        raise DataError(f"{column} must be 0 or 1, got {value!r}", path, line)
    return int(text)


def _count(value: str | None, column: str, path, line: int) -> int:
    try:
        return int((value or "").strip())
    except ValueError:
        raise DataError(f"{column} must be an integer, got {value!r}", path, line) from None


def load_records(path: str | os.PathLike, format: str = RECORDS) -> list:
    """Load a CSV file as classification records or as pre-aggregated counts.

    ``records`` files need ``label`` and ``prediction`` columns (0/1); every
    other column is kept as a categorical attribute. ``aggregated`` files need
    ``group``, ``n`` and ``z`` columns and yield :class:`GroupOutcome` objects.
    """
    header, rows = _read_rows(path)
    if format == RECORDS:
        missing = {"label", "prediction"} - set(header)
        if missing:
            raise DataError(f"missing required column(s) {sorted(missing)}", path, 1)
        records = []
        for i, row in enumerate(rows):
            line = i + 2
            row = {k.strip(): v for k, v in row.items()}
            label = _binary(row.pop("label"), "label", path, line)
            pred = _binary(row.pop("prediction"), "prediction", path, line)
            records.append(ClassificationRecord(label, pred, attributes=row))
        return records
    if format == AGGREGATED:
        missing = {"group", "n", "z"} - set(header)
        if missing:
            raise DataError(f"missing required column(s) {sorted(missing)}", path, 1)
        outcomes = []
        seen = set()
        for i, row in enumerate(rows):
            line = i + 2
            row = {k.strip(): v for k, v in row.items()}
            key = (row["group"] or "").strip()
            n = _count(row["n"], "n", path, line)
            z = _count(row["z"], "z", path, line)
            if n < 1:
                raise DataError(f"n must be >= 1, got {n}", path, line)
            if not 0 <= z <= n:
                raise DataError(f"z must satisfy 0 <= z <= n, got z={z}, n={n}", path, line)
            if key in seen:
                raise DataError(f"duplicate group {key!r}", path, line)
            seen.add(key)
            outcomes.append(GroupOutcome((key,), n, z))
        return outcomes
    raise ValueError(f"unknown input format {format!r} (expected {RECORDS!r} or {AGGREGATED!r})")


# -- analysis ------------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisRequest:
    input_path: str
    input_format: str = RECORDS
    groupings: tuple[tuple[str, ...], ...] = ()
    metrics: tuple[BaseMetric, ...] = ()
    meta_metrics: tuple[MetaMetricKind, ...] = ALL_KINDS
    bootstrap: BootstrapConfig = BootstrapConfig()
    output_path: str | None = None
    output_format: str = "json"

    def __post_init__(self) -> None:
        if not self.metrics:
            raise ValueError("at least one base metric is required")
        if self.input_format == RECORDS and not self.groupings:
            raise ValueError("at least one grouping is required for record input")
        if self.input_format == AGGREGATED and len(self.metrics) != 1:
            raise ValueError("aggregated input carries exactly one base metric")
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass(frozen=True)
class MetaMetricEntry:
    kind: MetaMetricKind
    value: float | None
    k: int
    note: str | None = None


@dataclass(frozen=True)
class AnalysisCell:
    metric: str
    grouping: str
    groups: GroupMetricVector
    meta_metrics: tuple[MetaMetricEntry, ...]
    variance: VarianceEstimate
    bootstrap: dict[str, BootstrapResult] = field(repr=False)


@dataclass(frozen=True)
class DisparityReport:
    cells: tuple[AnalysisCell, ...]
    bootstrap: BootstrapConfig

    def cell(self, metric: str, grouping: str) -> AnalysisCell:
        for c in self.cells:
            if c.metric == metric and c.grouping == grouping:
                return c
        raise KeyError((metric, grouping))


def analyze_groups(
    groups: GroupMetricVector,
    metric: str,
    grouping: str,
    meta_metrics: Sequence[MetaMetricKind] = ALL_KINDS,
    config: BootstrapConfig = BootstrapConfig(),
) -> AnalysisCell:
    """Meta-metrics, variance estimates and bootstrap intervals for one vector."""
    try:
        groups.require_groups()
        entries = []
        for kind in meta_metrics:
            try:
                res = meta_metric(groups.y, kind)
                entries.append(MetaMetricEntry(kind, res.value, res.k))
            except UndefinedMetaMetricError as exc:
                entries.append(MetaMetricEntry(kind, None, groups.k, str(exc)))
        variance = corrected_variance(groups)
        boot = bootstrap_statistics(groups, [UNCORRECTED, DOUBLE_CORRECTED], config)
    except AnalysisError:
        raise
    except (ValueError, RuntimeError) as exc:
        raise AnalysisError(metric, grouping, exc) from exc
    return AnalysisCell(metric, grouping, groups, tuple(entries), variance, boot)


def run_analysis(request: AnalysisRequest) -> DisparityReport:
    """Load the request's input and analyse every (base metric, grouping) pair.

    Every pair is bootstrapped with the same seed, so the result for a pair
    does not depend on which other pairs were requested.
    """
    data = load_records(request.input_path, request.input_format)
    cells = []
    if request.input_format == AGGREGATED:
        metric = request.metrics[0]
        label = metric.value if isinstance(metric, BaseMetric) else str(metric)
        groups = GroupMetricVector(tuple(sorted(data, key=lambda g: g.group_key)), metric=None)
        cells.append(analyze_groups(groups, label, "group", request.meta_metrics, request.bootstrap))
    else:
        for metric in request.metrics:
            for columns in request.groupings:
                grouping = ",".join(columns)
                try:
                    groups = aggregate(data, metric, columns)
                except ValueError as exc:
                    raise AnalysisError(metric.value, grouping, exc) from exc
                cells.append(
                    analyze_groups(groups, metric.value, grouping, request.meta_metrics, request.bootstrap)
                )
    return DisparityReport(tuple(cells), request.bootstrap)


# -- output --------------------------------------------------------------------


def _interval(res: BootstrapResult, b: int) -> dict[str, Any]:
    return {
        "point_estimate": res.point_estimate,
        "lower": res.lower,
        "upper": res.upper,
        "level": res.level,
        "b": b,
    }


def report_to_dict(report: DisparityReport) -> dict[str, Any]:
    cfg = report.bootstrap
    results = []
    for cell in report.cells:
        v = cell.variance
        results.append(
            {
                "base_metric": cell.metric,
                "grouping": cell.grouping,
                "k": cell.groups.k,
                "groups": [
                    {
                        "key": list(g.group_key),
                        "n": g.n,
                        "z": g.z,
                        "rate": g.y,
                        "plug_in_variance": plug_in_variance(g),
                    }
                    for g in cell.groups.groups
                ],
                "excluded": [{"key": list(k), "reason": r} for k, r in cell.groups.excluded],
                "meta_metrics": [
                    {"name": e.kind.label, "value": e.value, "k": e.k, "note": e.note}
                    for e in cell.meta_metrics
                ],
                "variance": {
                    "uncorrected": v.uncorrected,
                    "corrected": v.corrected,
                    "corrected_raw": v.corrected_raw,
                    "correction_term": v.correction_term,
                    "truncated": v.truncated,
                },
                "bootstrap": {name: _interval(res, cfg.b) for name, res in cell.bootstrap.items()},
            }
        )
    return {
        "bootstrap": {"b": cfg.b, "level": cfg.level, "seed": cfg.seed},
        "results": results,
    }


def _num(x: float | int | None) -> str:
    if x is None:
        return ""
    # repr round-trips every float exactly
    return repr(float(x)) if isinstance(x, float) else str(x)


def report_rows(report: DisparityReport) -> list[tuple[str, ...]]:
    rows = []
    for cell in report.cells:
        base = (cell.metric, cell.grouping)
        rows.append(base + ("groups", _num(cell.groups.k), "", ""))
        rows.append(base + ("excluded_groups", _num(len(cell.groups.excluded)), "", ""))
        for e in cell.meta_metrics:
            rows.append(base + (e.kind.label, _num(e.value), "", ""))
        unc = cell.bootstrap[UNCORRECTED.name]
        dbl = cell.bootstrap[DOUBLE_CORRECTED.name]
        v = cell.variance
        rows.append(base + ("uncorrected_variance", _num(v.uncorrected), _num(unc.lower), _num(unc.upper)))
        rows.append(base + ("corrected_variance", _num(v.corrected), "", ""))
        rows.append(base + ("correction_term", _num(v.correction_term), "", ""))
        rows.append(
            base + ("double_corrected_variance", _num(dbl.point_estimate), _num(dbl.lower), _num(dbl.upper))
        )
    return rows


def render_report(report: DisparityReport, format: str = "json") -> str:
    if format == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(report_rows(report))
        return buf.getvalue()
    raise ValueError(f"unknown output format {format!r}")


def emit_report(report: DisparityReport, path: str | os.PathLike, format: str = "json") -> Path:
    """Write ``report`` as JSON (nested) or CSV (long format). I/O errors propagate."""
    text = render_report(report, format)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def write_table(rows: Sequence[dict], fh, format: str = "csv") -> None:
    """Write a list of flat dicts as CSV or a JSON array."""
    if format == "json":
        json.dump(list(rows), fh, indent=2)
        fh.write("\n")
        return
    if not rows:
        return
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _num(v) if isinstance(v, float) or v is None else v for k, v in row.items()})
