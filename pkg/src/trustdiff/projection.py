"""Projected Greedy: search over max-max projections of a general instance.

Each candidate threshold ``t`` defines a single-source max-max instance with
uniform threshold ``t``.  Greedy solves it, the merged seed set is split among
the real sources, and the result is scored by simulation in the general
model.  The best-scoring threshold wins.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .diffusion import DEFAULT_MAX_STEPS, estimate_coverage
from .maxmax import SimplifiedInstance
from .model import GeneralInstance, RngHandle, Seeding
from .seeders import DEFAULT_SWITCH, GreedyWorkspace, greedy_lazy_hybrid

log = logging.getLogger(__name__)

__all__ = [
    "ThresholdSet",
    "ProjectionRow",
    "ProjectionReport",
    "build_simplified",
    "homogeneous_omega",
    "two_level_omega",
    "two_means_1d",
    "thresholds_homogeneous",
    "thresholds_two_level",
    "thresholds_grid",
    "partition_seeds",
    "projected_candidates",
    "score_candidates",
    "projected_greedy",
]

DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class ThresholdSet:
    thresholds: tuple
    t_min: float
    t_max: float
    a_avg: float | None = None
    a_high: float | None = None
    a_low: float | None = None

    @property
    def c(self) -> int:
        return len(self.thresholds)

    def __iter__(self):
        return iter(self.thresholds)

    def __len__(self):
        return len(self.thresholds)


@dataclass
class ProjectionRow:
    threshold: float
    seeding: Seeding
    coverage_mean: float
    coverage_stderr: float
    evacuated_mean: float
    greedy_coverage: int


@dataclass
class ProjectionReport:
    rows: list = field(default_factory=list)

    @property
    def best_row(self) -> ProjectionRow:
        # rows are sorted by threshold, so the first maximum is the smallest t
        best = self.rows[0]
        for r in self.rows[1:]:
            if r.coverage_mean > best.coverage_mean:
                best = r
        return best

    @property
    def t_opt(self) -> float:
        return self.best_row.threshold

    @property
    def best_seeding(self) -> Seeding:
        return self.best_row.seeding

    def curve(self):
        return [(r.threshold, r.coverage_mean) for r in self.rows]

    def to_csv(self, path, seeds_files=None) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "coverage_mean", "coverage_stderr", "seeds_file"])
            for i, r in enumerate(self.rows):
                sf = seeds_files[i] if seeds_files else ""
                w.writerow([repr(r.threshold), repr(r.coverage_mean), repr(r.coverage_stderr), sf])


def _dedup_sorted(values, tol=DEDUP_TOL):
    out = []
    for v in sorted(float(x) for x in values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return tuple(out)


def build_simplified(inst: GeneralInstance, t: float) -> SimplifiedInstance:
    """Single-source max-max instance with uniform threshold ``t``.

    The source value is the budget-weighted mean of the source values, the
    budget is the total budget, and node trust is the mean over sources.
    """
    if not t > 0:
        raise ValueError("threshold must be positive")
    budgets = np.array(inst.budgets, dtype=float)
    total = budgets.sum()
    if total == 0:
        raise ValueError("total budget is zero; nothing to seed")
    I_s = float((inst.source_values() * (budgets / total)).sum())
    a_s = inst.source_trust().mean(axis=0)
    return SimplifiedInstance.single(inst.graph, t, I_s, int(total), a_s)


def _merged_value(inst: GeneralInstance) -> float:
    b = np.array(inst.budgets, dtype=float)
    if b.sum() == 0:
        return float(inst.source_values().mean())
    return float((inst.source_values() * (b / b.sum())).sum())


def homogeneous_omega(a_avg: float, I: float, t_min: float, t_max: float) -> ThresholdSet:
    """Powers ``a_avg**i * I`` (i >= 0) inside ``[t_min, t_max]`` plus both endpoints."""
    if t_min > t_max:
        raise ValueError("t_min > t_max")
    if not 0.0 < a_avg < 1.0:
        warnings.warn(f"average trust {a_avg} is degenerate; using only the endpoints")
        return ThresholdSet(_dedup_sorted([t_min, t_max]), t_min, t_max, a_avg=a_avg)
    vals = [t_min, t_max]
    t = I
    while t >= t_min:
        if t <= t_max:
            vals.append(t)
        t *= a_avg
    return ThresholdSet(_dedup_sorted(vals), t_min, t_max, a_avg=a_avg)


def two_level_omega(a_high: float, a_low: float, I: float, t_min: float, t_max: float) -> ThresholdSet:
    """Closure of ``{I}`` under multiplication by ``a_high`` and ``a_low``, kept above ``t_min``."""
    if not 0.0 < a_low <= a_high < 1.0:
        raise ValueError("need 0 < a_low <= a_high < 1")
    omega = {I}
    frontier = [I]
    while frontier:
        new = []
        for t in frontier:
            for a in (a_high, a_low):
                x = a * t
                if x >= t_min and x not in omega:
                    omega.add(x)
                    new.append(x)
        frontier = new
    vals = [t for t in omega if t_min <= t <= t_max] + [t_min, t_max]
    return ThresholdSet(_dedup_sorted(vals), t_min, t_max, a_high=a_high, a_low=a_low)


def two_means_1d(x, iters: int = 100):
    """1-D 2-means started at the 25th/75th percentiles; returns ``(low_mean, high_mean)``."""
    x = np.asarray(x, dtype=float)
    lo, hi = np.percentile(x, [25, 75])
    for _ in range(iters):
        high = np.abs(x - hi) < np.abs(x - lo)
        if high.all() or not high.any():
            break
        nlo, nhi = x[~high].mean(), x[high].mean()
        if nlo == lo and nhi == hi:
            break
        lo, hi = nlo, nhi
    return float(lo), float(hi)


def _bounds(inst: GeneralInstance):
    return float(inst.t_l.min()), float(inst.t_h.max())


def thresholds_homogeneous(inst: GeneralInstance) -> ThresholdSet:
    t_min, t_max = _bounds(inst)
    a_avg = float(inst.graph.trust.mean()) if inst.graph.m else 0.0
    return homogeneous_omega(a_avg, _merged_value(inst), t_min, t_max)


def thresholds_two_level(inst: GeneralInstance) -> ThresholdSet:
    t_min, t_max = _bounds(inst)
    if inst.graph.m == 0:
        return thresholds_homogeneous(inst)
    a_low, a_high = two_means_1d(inst.graph.trust)
    if a_low == a_high or a_high >= 1.0 or a_low <= 0.0:
        return thresholds_homogeneous(inst)
    return two_level_omega(a_high, a_low, _merged_value(inst), t_min, t_max)


def thresholds_grid(lo: float, hi: float, step: float) -> ThresholdSet:
    """Evenly spaced thresholds from ``lo`` to ``hi`` inclusive."""
    k = int(math.floor((hi - lo) / step + 1e-9))
    vals = [round(lo + i * step, 12) for i in range(k + 1)]
    return ThresholdSet(_dedup_sorted(vals), lo, hi)


def partition_seeds(merged, budgets, rng) -> Seeding:
    """Randomly assign merged seed nodes to sources without exceeding any budget."""
    merged = sorted(int(u) for u in merged)
    budgets = [int(b) for b in budgets]
    if len(merged) > sum(budgets):
        raise ValueError(f"{len(merged)} seeds do not fit budgets {budgets}")
    gen = rng.generator() if isinstance(rng, RngHandle) else rng
    slots = np.repeat(np.arange(len(budgets)), budgets)
    slots = gen.permutation(slots)[: len(merged)]
    sets = [[] for _ in budgets]
    for u, k in zip(merged, slots.tolist()):
        sets[k].append(u)
    return Seeding(sets)


def projected_candidates(inst: GeneralInstance, omega, rng: RngHandle | None = None,
                         switch: float = DEFAULT_SWITCH) -> list:
    """``(t, seeding, greedy_coverage)`` for every threshold, in ascending ``t``.

    Only the graph, trusts, sources and budgets matter here, so the result can
    be reused across diffusion parameters such as ``lambda_d``.
    """
    rng = rng or RngHandle(0)
    ts = _dedup_sorted(omega)
    if not ts:
        raise ValueError("threshold set is empty")
    out = []
    for i, t in enumerate(ts):
        ws = GreedyWorkspace()
        merged = greedy_lazy_hybrid(build_simplified(inst, t), switch=switch, workspace=ws)
        seeding = partition_seeds(merged.sets[0], inst.budgets, rng.derive(f"partition/{i}"))
        out.append((t, seeding, ws.coverage))
    return out


def score_candidates(inst: GeneralInstance, candidates, eval_replications: int = 20,
                     rng: RngHandle | None = None, max_steps: int = DEFAULT_MAX_STEPS) -> ProjectionReport:
    """Simulate each candidate seeding in the general model on shared streams."""
    rng = rng or RngHandle(0)
    eval_rng = rng.derive("eval")
    report = ProjectionReport()
    for t, seeding, cov in candidates:
        est = estimate_coverage(inst, seeding, eval_replications, eval_rng, max_steps)
        log.info("t=%.4f coverage=%.1f +- %.1f", t, est.mean, est.stderr)
        report.rows.append(ProjectionRow(
            threshold=t, seeding=seeding, coverage_mean=est.mean,
            coverage_stderr=est.stderr, evacuated_mean=est.evacuated_mean,
            greedy_coverage=cov,
        ))
    return report


def projected_greedy(inst: GeneralInstance, omega=None, eval_replications: int = 20,
                     rng: RngHandle | None = None, switch: float = DEFAULT_SWITCH,
                     max_steps: int = DEFAULT_MAX_STEPS) -> ProjectionReport:
    """Greedy on each projected instance, scored in the general model.

    Every threshold is evaluated on the same replication streams so the
    comparison between thresholds is paired.
    """
    rng = rng or RngHandle(0)
    if omega is None:
        omega = thresholds_homogeneous(inst)
    cands = projected_candidates(inst, omega, rng, switch)
    return score_candidates(inst, cands, eval_replications, rng, max_steps)
