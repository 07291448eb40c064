"""Within-group percentile bootstrap for statistics of a GroupMetricVector.

Each group's size is held fixed. Resampling ``n`` binary outcomes with
replacement from a group with success rate ``y`` yields a success count
distributed ``Binomial(n, y)``, so a resample is drawn as one binomial
variate per group.

Resample ``b`` always uses the RNG substream seeded by ``(seed, b)``, so the
resample matrix does not depend on how (or in which order) resamples are
evaluated.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .groups import GroupMetricVector, GroupOutcome

BatchFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class BootstrapStatisticError(RuntimeError):
    def __init__(self, statistic: str, index: int, cause: BaseException):
        super().__init__(f"statistic {statistic!r} failed on bootstrap resample {index}: {cause}")
        self.statistic = statistic
        self.index = index


@dataclass(frozen=True)
class Statistic:
    """A named scalar statistic of a :class:`GroupMetricVector`.

    ``batch`` is an optional vectorised form taking a ``(B, K)`` array of
    rates and the ``(K,)`` group sizes and returning ``B`` values. It must
    agree with ``func`` row by row.
    """

    name: str
    func: Callable[[GroupMetricVector], float]
    batch: BatchFn | None = None

    def __call__(self, groups: GroupMetricVector) -> float:
        return self.func(groups)


@dataclass(frozen=True)
class BootstrapConfig:
    b: int = 500
    level: float = 0.95
    seed: int = 0

    def __post_init__(self) -> None:
        if self.b < 2:
            raise ValueError(f"need at least 2 bootstrap resamples, got b={self.b}")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class BootstrapResult:
    statistic_name: str
    samples: np.ndarray = field(repr=False)
    lower: float
    upper: float
    point_estimate: float
    level: float

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def resample_group(outcome: GroupOutcome, rng: np.random.Generator) -> GroupOutcome:
    """Resample one group's outcomes with replacement, keeping its size."""
    return GroupOutcome(outcome.group_key, outcome.n, int(rng.binomial(outcome.n, outcome.y)))


def percentile_interval(samples: Iterable[float], level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed percentile interval.

    Quantiles interpolate linearly between order statistics: quantile ``q``
    of ``b`` sorted values sits at 1-based position ``1 + (b - 1) q``.
    """
    if not isinstance(samples, np.ndarray):
        samples = list(samples)
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("no samples")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(arr, [tail, 1.0 - tail], method="linear")
    return float(lo), float(hi)


def resample_counts(groups: GroupMetricVector, b: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw the ``(b, K)`` matrix of resampled success counts."""
    n = groups.n
    y = groups.y
    out = np.empty((b, n.size), dtype=np.int64)

    def fill(rows: range) -> None:
        for i in rows:
            out[i] = np.random.default_rng([seed, i]).binomial(n, y)

    if workers <= 1:
        fill(range(b))
    else:
        chunks = [range(start, b, workers) for start in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, chunks))
    return out


def _evaluate(statistic: Statistic, groups: GroupMetricVector, counts: np.ndarray) -> np.ndarray:
    n = groups.n
    if statistic.batch is not None:
        return np.asarray(statistic.batch(counts / n, n), dtype=float)
    keys = groups.keys
    values = np.empty(counts.shape[0])
    for i, row in enumerate(counts):
        resample = GroupMetricVector.from_counts(n, row, keys, groups.metric)
        try:
            values[i] = statistic.func(resample)
        except Exception as exc:
            raise BootstrapStatisticError(statistic.name, i, exc) from exc
    return values


def bootstrap_statistics(
    groups: GroupMetricVector,
    statistics: Sequence[Statistic | Callable[[GroupMetricVector], float]],
    config: BootstrapConfig = BootstrapConfig(),
    workers: int = 1,
) -> dict[str, BootstrapResult]:
    """Bootstrap several statistics on one shared set of resamples."""
    groups.require_groups()
    counts = resample_counts(groups, config.b, config.seed, workers)
    results = {}
    for stat in statistics:
        if not isinstance(stat, Statistic):
            stat = Statistic(getattr(stat, "__name__", "statistic"), stat)
        samples = _evaluate(stat, groups, counts)
        lower, upper = percentile_interval(samples, config.level)
        results[stat.name] = BootstrapResult(
            statistic_name=stat.name,
            samples=samples,
            lower=lower,
            upper=upper,
            point_estimate=float(stat.func(groups)),
            level=config.level,
        )
    return results


def bootstrap_statistic(
    groups: GroupMetricVector,
    statistic: Statistic | Callable[[GroupMetricVector], float],
    config: BootstrapConfig = BootstrapConfig(),
    workers: int = 1,
) -> BootstrapResult:
    """Percentile bootstrap interval for ``statistic`` evaluated on ``groups``.

    Every group is resampled within itself ``config.b`` times; the interval
    is the ``(1 - level) / 2`` and ``1 - (1 - level) / 2`` empirical
    quantiles of the resampled statistic. Results are identical for any
    ``workers`` given the same seed.
    """
    (result,) = bootstrap_statistics(groups, [statistic], config, workers).values()
    return result
