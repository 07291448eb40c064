"""Per-group base metrics.

Turns labelled classification records into per-group (n, z) counts for a
chosen base metric, and provides the binomial plug-in sampling variance.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

MISSING = "<missing>"

GroupKey = tuple[str, ...]


class InsufficientGroupsError(ValueError):
    """Fewer than two groups are usable for a between-group comparison."""


class BaseMetric(str, enum.Enum):
    ACCURACY = "accuracy"
    FALSE_POSITIVE_RATE = "fpr"
    TRUE_POSITIVE_RATE = "tpr"
    SELECTION_RATE = "sr"

    @classmethod
    def parse(cls, name: str) -> "BaseMetric":
        aliases = {
            "acc": cls.ACCURACY,
            "false_positive_rate": cls.FALSE_POSITIVE_RATE,
            "true_positive_rate": cls.TRUE_POSITIVE_RATE,
            "selection_rate": cls.SELECTION_RATE,
        }
        key = name.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown base metric {name!r} (expected one of {valid})") from None

    def counts(self, label: int, prediction: int) -> tuple[int, int]:
        """Contribution of one record to (denominator, numerator)."""
        if self is BaseMetric.ACCURACY:
            return 1, int(label == prediction)
        if self is BaseMetric.SELECTION_RATE:
            return 1, prediction
        if self is BaseMetric.FALSE_POSITIVE_RATE:
            return (1, prediction) if label == 0 else (0, 0)
        return (1, prediction) if label == 1 else (0, 0)


@dataclass(frozen=True)
class ClassificationRecord:
    """One scored individual.

    ``attributes`` holds the raw categorical columns; ``group_key`` is filled
    in by :func:`intersect_groups` (or directly by the caller).
    """

    label: int
    prediction: int
    group_key: GroupKey = ()
    attributes: Mapping[str, str | None] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.prediction not in (0, 1):
            raise ValueError(f"prediction must be 0 or 1, got {self.prediction!r}")


@dataclass(frozen=True)
class GroupOutcome:
    group_key: GroupKey
    n: int
    z: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"group {self.group_key!r}: n must be >= 1, got {self.n}")
        if not 0 <= self.z <= self.n:
            raise ValueError(f"group {self.group_key!r}: need 0 <= z <= n, got z={self.z}, n={self.n}")

    @property
    def y(self) -> float:
        return self.z / self.n


@dataclass(frozen=True)
class GroupMetricVector:
    """Ordered per-group outcomes for one base metric.

    ``excluded`` lists groups that had no eligible observations for the
    metric, as ``(group_key, reason)`` pairs.
    """

    groups: tuple[GroupOutcome, ...]
    metric: BaseMetric | None = None
    excluded: tuple[tuple[GroupKey, str], ...] = ()

    def __post_init__(self) -> None:
        keys = [g.group_key for g in self.groups]
        if len(set(keys)) != len(keys):
            raise ValueError("group keys must be unique")

    @classmethod
    def from_counts(
        cls,
        n: Sequence[int],
        z: Sequence[int],
        keys: Sequence[GroupKey] | None = None,
        metric: BaseMetric | None = None,
    ) -> "GroupMetricVector":
        if len(n) != len(z):
            raise ValueError("n and z must have the same length")
        if keys is None:
            keys = [(str(i),) for i in range(len(n))]
        return cls(
            tuple(GroupOutcome(tuple(k), int(nk), int(zk)) for k, nk, zk in zip(keys, n, z)),
            metric=metric,
        )

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def keys(self) -> list[GroupKey]:
        return [g.group_key for g in self.groups]

    @property
    def n(self) -> np.ndarray:
        return np.array([g.n for g in self.groups], dtype=np.int64)

    @property
    def z(self) -> np.ndarray:
        return np.array([g.z for g in self.groups], dtype=np.int64)

    @property
    def y(self) -> np.ndarray:
        return self.z / self.n

    def require_groups(self, minimum: int = 2) -> None:
        if self.k < minimum:
            raise InsufficientGroupsError(
                f"insufficient groups: need at least {minimum}, have {self.k}"
            )


_EMPTY_REASON = {
    BaseMetric.ACCURACY: "no records",
    BaseMetric.SELECTION_RATE: "no records",
    BaseMetric.FALSE_POSITIVE_RATE: "no truly negative records (fpr undefined)",
    BaseMetric.TRUE_POSITIVE_RATE: "no truly positive records (tpr undefined)",
}


def plug_in_variance(outcome: GroupOutcome) -> float:
    """Plug-in sampling variance ``y(1-y)/n`` of a binomial proportion."""
    y = outcome.y
    return y * (1.0 - y) / outcome.n


def _normalise(value: object) -> str:
    if value is None:
        return MISSING
    text = str(value)
    return text if text.strip() else MISSING


def intersect_groups(
    records: Iterable[ClassificationRecord], columns: Sequence[str]
) -> list[ClassificationRecord]:
    """Assign each record the composite key formed by ``columns``.

    Missing or blank attribute values become their own ``"<missing>"`` level.
    """
    if not columns:
        raise ValueError("at least one group column is required")
    out = []
    for i, rec in enumerate(records):
        try:
            key = tuple(_normalise(rec.attributes[c]) for c in columns)
        except KeyError as exc:
            raise ValueError(f"unknown group column {exc.args[0]!r} (record {i})") from None
        out.append(
            ClassificationRecord(rec.label, rec.prediction, key, rec.attributes)
        )
    return out


def group_counts(
    records: Sequence[ClassificationRecord],
    metric: BaseMetric,
    group_columns: Sequence[str] | None = None,
) -> GroupMetricVector:
    """Per-group counts for ``metric`` without the two-group requirement."""
    if not records:
        raise ValueError("no records to aggregate")
    metric = BaseMetric(metric)
    if group_columns:
        records = intersect_groups(records, group_columns)

    totals: dict[GroupKey, list[int]] = defaultdict(lambda: [0, 0])
    for rec in records:
        if not rec.group_key:
            raise ValueError("record has an empty group key")
        dn, dz = metric.counts(rec.label, rec.prediction)
        acc = totals[rec.group_key]
        acc[0] += dn
        acc[1] += dz

    groups = []
    excluded = []
    for key in sorted(totals):
        n, z = totals[key]
        if n == 0:
            excluded.append((key, _EMPTY_REASON[metric]))
        else:
            groups.append(GroupOutcome(key, n, z))
    return GroupMetricVector(tuple(groups), metric=metric, excluded=tuple(excluded))


def aggregate(
    records: Sequence[ClassificationRecord],
    metric: BaseMetric,
    group_columns: Sequence[str] | None = None,
) -> GroupMetricVector:
    """Count trials and successes of ``metric`` within each group.

    Groups are ordered by key. A group with a zero denominator for the metric
    (e.g. no true negatives when computing FPR) is reported in ``excluded``.

    Raises
    ------
    InsufficientGroupsError
        If fewer than two groups have a nonzero denominator.
    """
    vector = group_counts(records, metric, group_columns)
    vector.require_groups()
    return vector
