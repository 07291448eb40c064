"""Between-group variance estimators.

The observed between-group variance of rates overstates the variance of the
true rates by the mean sampling variance of the groups. ``corrected``
subtracts the plug-in estimate of that term; ``double_corrected`` is meant
for bootstrap resamples, whose rates carry the original sampling noise plus
the noise added by resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bootstrap import Statistic
from .groups import GroupMetricVector, GroupOutcome
from .metametrics import VARIANCE, meta_metric_batch


@dataclass(frozen=True)
class VarianceEstimate:
    uncorrected: float
    corrected: float
    corrected_raw: float
    correction_term: float

    @property
    def truncated(self) -> bool:
        return self.corrected_raw < 0.0


def uncorrected_batch(y: np.ndarray, n: np.ndarray) -> np.ndarray:
    return meta_metric_batch(y, VARIANCE)


def plug_in_term_batch(y: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Mean over groups of ``y(1-y)/n``."""
    return (y * (1.0 - y) / n).mean(axis=-1)


def bootstrap_term_batch(y: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Mean over groups of ``2y(1-y)/n - y(1-y)/n**2``."""
    v = y * (1.0 - y)
    return (2.0 * v / n - v / n**2).mean(axis=-1)


def corrected_batch(y: np.ndarray, n: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, uncorrected_batch(y, n) - plug_in_term_batch(y, n))


def corrected_raw_batch(y: np.ndarray, n: np.ndarray) -> np.ndarray:
    return uncorrected_batch(y, n) - plug_in_term_batch(y, n)


def double_corrected_batch(y: np.ndarray, n: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, uncorrected_batch(y, n) - bootstrap_term_batch(y, n))


def corrected_variance(groups: GroupMetricVector) -> VarianceEstimate:
    """Between-group variance with the plug-in sampling-variance correction.

    ``corrected_raw = var(y) - mean(y(1-y)/n)`` with the ``K - 1`` divisor
    for ``var``; ``corrected`` floors it at zero.
    """
    groups.require_groups()
    y, n = groups.y, groups.n
    uncorrected = float(uncorrected_batch(y, n))
    term = float(plug_in_term_batch(y, n))
    raw = uncorrected - term
    return VarianceEstimate(
        uncorrected=uncorrected,
        corrected=max(0.0, raw),
        corrected_raw=raw,
        correction_term=term,
    )


def bootstrap_sample_variance(outcome: GroupOutcome) -> float:
    """Plug-in sampling variance of a bootstrap-resampled group rate.

    A resampled rate is binomial noise on top of an already noisy rate, so
    its variance is ``2 mu(1-mu)/n - mu(1-mu)/n**2``; the observed resampled
    rate stands in for ``mu``.
    """
    v = outcome.y * (1.0 - outcome.y)
    return 2.0 * v / outcome.n - v / outcome.n**2


def double_corrected_variance(bootstrap_groups: GroupMetricVector) -> float:
    """Truncated between-group variance of one bootstrap resample, corrected
    for both the original and the resampling noise."""
    bootstrap_groups.require_groups()
    y, n = bootstrap_groups.y, bootstrap_groups.n
    return float(double_corrected_batch(y, n))


UNCORRECTED = Statistic(
    "uncorrected_variance",
    lambda g: corrected_variance(g).uncorrected,
    uncorrected_batch,
)
CORRECTED = Statistic(
    "corrected_variance",
    lambda g: corrected_variance(g).corrected,
    corrected_batch,
)
DOUBLE_CORRECTED = Statistic(
    "double_corrected_variance",
    double_corrected_variance,
    double_corrected_batch,
)

ESTIMATORS = {
    "uncorrected": UNCORRECTED,
    "corrected": CORRECTED,
    "double_corrected": DOUBLE_CORRECTED,
}
