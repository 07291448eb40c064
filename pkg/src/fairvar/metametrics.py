"""Between-group disparity summaries ("meta-metrics") over a vector of rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class UndefinedMetaMetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetaMetricKind:
    """A meta-metric identifier.

    ``alpha`` is only used by the generalized entropy index, for which
    ``alpha`` must not be 0 or 1.
    """

    name: str
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.name not in _NAMES:
            raise ValueError(f"unknown meta-metric {self.name!r} (expected one of {', '.join(_NAMES)})")
        if self.name == "generalized_entropy":
            if self.alpha is None:
                raise ValueError("generalized_entropy needs alpha")
            if self.alpha in (0, 1):
                raise ValueError("generalized_entropy is only defined here for alpha not in {0, 1}")
        elif self.alpha is not None:
            raise ValueError(f"{self.name} takes no alpha")

    @property
    def label(self) -> str:
        if self.name == "generalized_entropy":
            return f"generalized_entropy(alpha={self.alpha:g})"
        return self.name

    @classmethod
    def parse(cls, text: str) -> "MetaMetricKind":
        """Parse ``"variance"``, ``"mad"``, ``"gei:2"``, ``"generalized_entropy:0.5"``..."""
        name, _, arg = text.strip().lower().partition(":")
        name = _ALIASES.get(name, name)
        if name == "generalized_entropy":
            return cls(name, float(arg) if arg else 2.0)
        if arg:
            raise ValueError(f"{name} takes no parameter")
        return cls(name)


_NAMES = (
    "max_min_diff",
    "max_min_ratio",
    "max_abs_diff",
    "mean_abs_dev",
    "variance",
    "generalized_entropy",
)
_ALIASES = {
    "diff": "max_min_diff",
    "ratio": "max_min_ratio",
    "mad": "mean_abs_dev",
    "var": "variance",
    "gei": "generalized_entropy",
}

MAX_MIN_DIFF = MetaMetricKind("max_min_diff")
MAX_MIN_RATIO = MetaMetricKind("max_min_ratio")
MAX_ABS_DIFF = MetaMetricKind("max_abs_diff")
MEAN_ABS_DEV = MetaMetricKind("mean_abs_dev")
VARIANCE = MetaMetricKind("variance")


def generalized_entropy(alpha: float) -> MetaMetricKind:
    return MetaMetricKind("generalized_entropy", alpha)


ALL_KINDS = (
    MAX_MIN_DIFF,
    MAX_MIN_RATIO,
    MAX_ABS_DIFF,
    MEAN_ABS_DEV,
    VARIANCE,
    generalized_entropy(2.0),
)


@dataclass(frozen=True)
class MetaMetricResult:
    kind: MetaMetricKind
    value: float
    k: int


def row_mean(y: np.ndarray) -> np.ndarray:
    """Mean over the last axis (kept), exact for constant rows."""
    mean = y.mean(axis=-1, keepdims=True)
    constant = (y == y[..., :1]).all(axis=-1, keepdims=True)
    return np.where(constant, y[..., :1], mean)


def meta_metric_batch(y: np.ndarray, kind: MetaMetricKind) -> np.ndarray:
    """Evaluate ``kind`` along the last axis of ``y``.

    Rows where the ratio or entropy index is undefined (a zero rate or a
    zero mean) come back as NaN; use :func:`meta_metric` for checked,
    single-vector evaluation.
    """
    y = np.asarray(y, dtype=float)
    k = y.shape[-1]
    if kind.name == "max_min_diff":
        return y.max(axis=-1) - y.min(axis=-1)
    mean = row_mean(y)
    if kind.name == "variance":
        return ((y - mean) ** 2).sum(axis=-1) / (k - 1)
    if kind.name == "max_abs_diff":
        return np.abs(y - mean).max(axis=-1)
    if kind.name == "mean_abs_dev":
        return np.abs(y - mean).mean(axis=-1)

    undefined = (y <= 0).any(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind.name == "max_min_ratio":
            out = y.max(axis=-1) / y.min(axis=-1)
        else:
            a = kind.alpha
            out = ((y / mean) ** a - 1.0).sum(axis=-1) / (k * a * (a - 1.0))
    return np.where(undefined, np.nan, out)


def meta_metric(y: Sequence[float] | np.ndarray, kind: MetaMetricKind) -> MetaMetricResult:
    """Summarise between-group variability of the rates ``y``.

    Parameters
    ----------
    y : sequence of float
        Observed per-group rates, at least two.
    kind : MetaMetricKind
        Which summary to compute. ``variance`` uses the ``K - 1`` divisor.

    Raises
    ------
    UndefinedMetaMetricError
        For the ratio or entropy index when any rate is zero (or negative).
    ValueError
        When fewer than two rates are given.
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise ValueError("y must be one-dimensional")
    if arr.size < 2:
        raise ValueError(f"need at least 2 groups, got {arr.size}")
    if kind.name in ("max_min_ratio", "generalized_entropy"):
        if (arr < 0).any():
            raise UndefinedMetaMetricError(f"{kind.label} is undefined for negative rates")
        if (arr == 0).any():
            raise UndefinedMetaMetricError(f"{kind.label} is undefined for zero rate")
    return MetaMetricResult(kind, float(meta_metric_batch(arr, kind)), int(arr.size))
