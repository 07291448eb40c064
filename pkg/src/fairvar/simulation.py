"""Monte-Carlo experiments on the binomial group-rate model.

Group ``k`` has true rate ``mu[k]`` and ``n[k]`` trials; an observed rate is
``Binomial(n[k], mu[k]) / n[k]``. Every replicate draws from its own RNG
substream keyed by the master seed and the replicate index, so results do
not depend on worker count or scheduling.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_statistics
from .estimators import ESTIMATORS, corrected_raw_batch, uncorrected_batch
from .groups import GroupMetricVector
from .metametrics import ALL_KINDS, MetaMetricKind, meta_metric_batch

# substream tags
_DATA = 0
_BOOT = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    mu: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.mu) != len(self.n):
            raise ValueError("mu and n must have the same length")
        if len(self.mu) < 2:
            raise ValueError("a scenario needs at least 2 groups")
        if any(not 0.0 <= m <= 1.0 for m in self.mu):
            raise ValueError("every mu must lie in [0, 1]")
        if any(nk < 1 for nk in self.n):
            raise ValueError("every group size must be >= 1")

    @property
    def k(self) -> int:
        return len(self.mu)

    @property
    def true_variance(self) -> float:
        # exact rational arithmetic: a constant mu gives exactly 0
        return float(statistics.variance(self.mu))

    @property
    def mean_sampling_variance(self) -> float:
        """Expected excess of the observed variance over ``true_variance``."""
        mu = np.asarray(self.mu)
        return float((mu * (1.0 - mu) / np.asarray(self.n)).mean())

    def groups(self, z: Sequence[int]) -> GroupMetricVector:
        return GroupMetricVector.from_counts(self.n, z)


def _spaced(lo: float, hi: float, k: int) -> list[float]:
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def standard_scenarios(k: int = 100, total_n: int = 5000) -> list[Scenario]:
    """The equal/unequal performance by equal/unequal group-size grid."""
    if k < 2:
        raise ValueError("k must be at least 2")
    equal_mu = tuple([0.8] * k)
    unequal_mu = tuple(_spaced(0.1, 0.9, k))
    equal_n = tuple([round(total_n / k)] * k)
    unequal_n = tuple(math.floor(x + 0.5) for x in _spaced(10.0, 90.0, k))
    return [
        Scenario("Equal Size; Equal Perf", equal_mu, equal_n),
        Scenario("Unequal Size; Equal Perf", equal_mu, unequal_n),
        Scenario("Equal Size; Unequal Perf", unequal_mu, equal_n),
        Scenario("Unequal Size; Unequal Perf", unequal_mu, unequal_n),
    ]


def draw_replicate(scenario: Scenario, rng: np.random.Generator) -> GroupMetricVector:
    z = rng.binomial(np.asarray(scenario.n), np.asarray(scenario.mu))
    return scenario.groups(z)


def _draw_matrix(scenario: Scenario, replicates: int, key: Sequence[int]) -> np.ndarray:
    n = np.asarray(scenario.n)
    mu = np.asarray(scenario.mu)
    z = np.empty((replicates, scenario.k), dtype=np.int64)
    for r in range(replicates):
        z[r] = np.random.default_rng([*key, r]).binomial(n, mu)
    return z / n


# -- replicate study ---------------------------------------------------------


@dataclass(frozen=True)
class ReplicateSummary:
    scenario: str
    true_variance: float
    mean_sampling_variance: float
    uncorrected: np.ndarray = field(repr=False)
    corrected_raw: np.ndarray = field(repr=False)

    @property
    def corrected(self) -> np.ndarray:
        return np.maximum(0.0, self.corrected_raw)

    @staticmethod
    def _mc(values: np.ndarray) -> tuple[float, float]:
        return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))

    def row(self) -> dict:
        unc_mean, unc_se = self._mc(self.uncorrected)
        raw_mean, raw_se = self._mc(self.corrected_raw)
        cor_mean, cor_se = self._mc(self.corrected)
        return {
            "scenario": self.scenario,
            "replicates": int(self.uncorrected.size),
            "true_variance": self.true_variance,
            "mean_sampling_variance": self.mean_sampling_variance,
            "uncorrected_mean": unc_mean,
            "uncorrected_se": unc_se,
            "corrected_raw_mean": raw_mean,
            "corrected_raw_se": raw_se,
            "corrected_mean": cor_mean,
            "corrected_se": cor_se,
        }


def replicate_study(
    scenarios: Sequence[Scenario] | None = None, replicates: int = 1000, seed: int = 0
) -> list[ReplicateSummary]:
    """Uncorrected and corrected estimates over independent draws per scenario."""
    scenarios = standard_scenarios() if scenarios is None else scenarios
    out = []
    for s_idx, scenario in enumerate(scenarios):
        y = _draw_matrix(scenario, replicates, [seed, _DATA, s_idx])
        n = np.asarray(scenario.n)
        out.append(
            ReplicateSummary(
                scenario=scenario.name,
                true_variance=scenario.true_variance,
                mean_sampling_variance=scenario.mean_sampling_variance,
                uncorrected=uncorrected_batch(y, n),
                corrected_raw=corrected_raw_batch(y, n),
            )
        )
    return out


# -- bias sweep ----------------------------------------------------------------


@dataclass(frozen=True)
class BiasSweepConfig:
    total_n: int = 5000
    k_grid: tuple[int, ...] = (5, 10, 25, 50, 75, 100, 125, 150)
    lower_bounds: tuple[float, ...] = (0.1, 0.5, 0.7, 0.9)
    upper: float = 0.9
    replicates: int = 1000
    seed: int = 0
    kinds: tuple[MetaMetricKind, ...] = ALL_KINDS

    def __post_init__(self) -> None:
        if any(k < 2 for k in self.k_grid):
            raise ValueError("every K in k_grid must be at least 2")
        if any(lo > self.upper for lo in self.lower_bounds):
            raise ValueError(f"every lower bound must be <= {self.upper}")
        if any(lo < 0 for lo in self.lower_bounds) or self.upper > 1:
            raise ValueError("rates must lie in [0, 1]")
        if self.replicates < 2:
            raise ValueError("need at least 2 replicates")
        for k in self.k_grid:
            if round(self.total_n / k) < 1:
                raise ValueError(f"total_n={self.total_n} gives empty groups for K={k}")


@dataclass(frozen=True)
class BiasCell:
    metric: str
    k: int
    lower: float
    n_per_group: int
    true_value: float
    mean_bias: float
    mc_se: float
    analytic_bias: float | None
    undefined: int

    @property
    def z_score(self) -> float:
        return self.mean_bias / self.mc_se if self.mc_se > 0 else math.inf


def bias_sweep(config: BiasSweepConfig = BiasSweepConfig()) -> list[BiasCell]:
    """Monte-Carlo bias ``M(Y) - M(mu)`` of each meta-metric over a (K, l) grid.

    Group sizes are ``round(total_n / K)``; true rates are equally spaced on
    ``[l, upper]``. Replicates where a ratio-type metric is undefined (a
    zero observed rate) are dropped from that cell and counted in
    ``undefined``. ``analytic_bias`` is filled in for the variance only.
    """
    cells = []
    for l_idx, lower in enumerate(config.lower_bounds):
        for k in config.k_grid:
            n_k = round(config.total_n / k)
            scenario = Scenario(f"l={lower:g},K={k}", tuple(_spaced(lower, config.upper, k)), (n_k,) * k)
            y = _draw_matrix(scenario, config.replicates, [config.seed, _DATA, l_idx, k])
            mu = np.asarray(scenario.mu)
            for kind in config.kinds:
                values = meta_metric_batch(y, kind)
                truth = float(meta_metric_batch(mu, kind))
                ok = ~np.isnan(values)
                diffs = values[ok] - truth
                se = float(diffs.std(ddof=1) / math.sqrt(diffs.size)) if diffs.size > 1 else math.nan
                cells.append(
                    BiasCell(
                        metric=kind.label,
                        k=k,
                        lower=lower,
                        n_per_group=n_k,
                        true_value=truth,
                        mean_bias=float(diffs.mean()) if diffs.size else math.nan,
                        mc_se=se,
                        analytic_bias=scenario.mean_sampling_variance if kind.name == "variance" else None,
                        undefined=int((~ok).sum()),
                    )
                )
    return cells


# -- coverage study --------------------------------------------------------------


@dataclass(frozen=True)
class CoverageRow:
    scenario: str
    estimator: str
    covered: int
    replicates: int
    true_variance: float

    @property
    def coverage(self) -> float:
        return 100.0 * self.covered / self.replicates


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple[CoverageRow, ...]
    replicates: int
    b: int
    level: float
    seed: int

    def coverage(self, scenario: str, estimator: str) -> float:
        for row in self.rows:
            if row.scenario == scenario and row.estimator == estimator:
                return row.coverage
        raise KeyError((scenario, estimator))

    def table(self) -> list[dict]:
        return [
            {
                "scenario": r.scenario,
                "estimator": r.estimator,
                "coverage": r.coverage,
                "covered": r.covered,
                "replicates": r.replicates,
                "true_variance": r.true_variance,
            }
            for r in self.rows
        ]


def replicate_bootstrap_seed(seed: int, scenario_index: int, replicate: int) -> int:
    ss = np.random.SeedSequence([seed, _BOOT, scenario_index, replicate])
    return int(ss.generate_state(1, np.uint64)[0])


def _coverage_chunk(
    scenario: Scenario,
    s_idx: int,
    estimators: tuple[str, ...],
    replicates: range,
    b: int,
    level: float,
    seed: int,
) -> np.ndarray:
    stats = [ESTIMATORS[name] for name in estimators]
    truth = scenario.true_variance
    hits = np.zeros(len(estimators), dtype=np.int64)
    for r in replicates:
        rng = np.random.default_rng([seed, _DATA, s_idx, r])
        groups = draw_replicate(scenario, rng)
        config = BootstrapConfig(b, level, replicate_bootstrap_seed(seed, s_idx, r))
        results = bootstrap_statistics(groups, stats, config)
        for j, stat in enumerate(stats):
            hits[j] += results[stat.name].contains(truth)
    return hits


def coverage_study(
    scenarios: Sequence[Scenario] | None = None,
    estimators: Sequence[str] = ("uncorrected", "corrected", "double_corrected"),
    replicates: int = 1000,
    config: BootstrapConfig = BootstrapConfig(),
    workers: int = 1,
) -> CoverageReport:
    """Fraction of replicates whose percentile bootstrap interval contains the
    scenario's true between-group variance, per scenario and estimator.

    ``config.seed`` is the master seed; ``workers > 1`` spreads replicates
    over processes without changing the result.
    """
    scenarios = standard_scenarios() if scenarios is None else list(scenarios)
    estimators = tuple(estimators)
    unknown = [e for e in estimators if e not in ESTIMATORS]
    if unknown:
        raise ValueError(f"unknown estimators {unknown}; expected {sorted(ESTIMATORS)}")

    jobs = []
    for s_idx, scenario in enumerate(scenarios):
        step = max(1, workers)
        for start in range(step):
            jobs.append((scenario, s_idx, estimators, range(start, replicates, step), config.b, config.level, config.seed))

    if workers <= 1:
        results = [_coverage_chunk(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_coverage_chunk, *job) for job in jobs]
            results = [f.result() for f in futures]

    hits = np.zeros((len(scenarios), len(estimators)), dtype=np.int64)
    for job, res in zip(jobs, results):
        hits[job[1]] += res

    rows = tuple(
        CoverageRow(scenario.name, name, int(hits[s_idx, j]), replicates, scenario.true_variance)
        for s_idx, scenario in enumerate(scenarios)
        for j, name in enumerate(estimators)
    )
    return CoverageReport(rows, replicates, config.b, config.level, config.seed)


def single_draw_bootstrap(
    scenario: Scenario, config: BootstrapConfig = BootstrapConfig(), draw_seed: int = 0
) -> dict:
    """Bootstrap all three estimators on one draw from ``scenario``."""
    groups = draw_replicate(scenario, np.random.default_rng([draw_seed, _DATA]))
    return bootstrap_statistics(groups, list(ESTIMATORS.values()), config)
