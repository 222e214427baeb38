"""Experiment orchestration: scenario grids, seeder comparison, regret, threshold sweeps."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diffusion import DEFAULT_MAX_STEPS, run
from .graphgen import (
    assign_thresholds,
    assign_trust,
    gen_geometric_group,
    gen_random_group,
    gen_scale_free,
)
from .model import GeneralInstance, RngHandle, Seeding, SourceSpec
from .projection import (
    partition_seeds,
    projected_candidates,
    projected_greedy,
    score_candidates,
    thresholds_grid,
    thresholds_homogeneous,
    thresholds_two_level,
)
from .seeders import actual_greedy, high_degree_seeding, random_seeding

log = logging.getLogger(__name__)

NETWORKS = ("scale_free", "random_group", "geometric")
SEEDERS = ("PG", "HD", "R", "AG")
CSV_COLUMNS = [
    "scenario_id", "network", "trust_scenario", "tl", "th", "lambda_d", "budget_frac",
    "seeder", "evac_frac_mean", "evac_frac_stderr", "regret_pct", "wallclock_s",
]
LAMBDA_GRID = (0.0, 0.05, 0.1, 0.15, 0.2)
FULL_SCALE = {"n": 100_000, "replications": 100, "graph_instances": 10}


@dataclass
class Scenario:
    scenario_id: str = "default"
    network: str = "random_group"
    n: int = 10_000
    network_params: dict = field(default_factory=dict)
    trust_scenario: str = "homogeneous"
    trust_params: dict = field(default_factory=dict)
    # fixed (tl, th) pair; set both to None to draw per-node thresholds from the ranges
    tl: float | None = 0.15
    th: float | None = 0.55
    tl_range: tuple = (0.1, 0.2)
    th_range: tuple = (0.5, 0.6)
    lambda_d: float = 0.0
    lambda_s: float = 0.0
    tau: float = 5
    transmit_p: float = 0.75
    n_sources: int = 5
    info_value: float = 0.95
    source_trust: float = 0.9
    budget_frac: float = 0.05
    seeders: tuple = ("PG", "HD", "R")
    replications: int = 10
    graph_instances: int = 3
    omega: object = "homogeneous"  # "homogeneous", "two_level", [lo, hi, step] or explicit list
    pg_replications: int = 20
    max_steps: int = DEFAULT_MAX_STEPS
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        if not 0 < self.budget_frac <= 1:
            raise ValueError(f"budget_frac must be in (0, 1], got {self.budget_frac}")
        if self.replications < 1 or self.graph_instances < 1:
            raise ValueError("replications and graph_instances must be >= 1")
        if self.network not in NETWORKS:
            raise ValueError(f"unknown network {self.network!r}; choose from {NETWORKS}")
        bad = [s for s in self.seeders if s not in SEEDERS]
        if bad:
            raise ValueError(f"unknown seeders {bad}; choose from {SEEDERS}")
        if (self.tl is None) != (self.th is None):
            raise ValueError("set both tl and th, or neither")
        self.seeders = tuple(self.seeders)
        self.tl_range = tuple(self.tl_range)
        self.th_range = tuple(self.th_range)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def budgets(self) -> tuple:
        """Equal per-source split of ``round(budget_frac * n)``; leftovers go to the first sources."""
        total = int(round(self.budget_frac * self.n))
        base, extra = divmod(total, self.n_sources)
        return tuple(base + (1 if k < extra else 0) for k in range(self.n_sources))


@dataclass
class ResultRow:
    scenario_id: str
    network: str
    trust_scenario: str
    tl: str
    th: str
    lambda_d: float
    budget_frac: float
    seeder: str
    evac_frac_mean: float
    evac_frac_stderr: float
    regret_pct: float = 0.0
    wallclock_s: float | None = None

    def as_list(self):
        wc = "" if self.wallclock_s is None else f"{self.wallclock_s:.3f}"
        return [
            self.scenario_id, self.network, self.trust_scenario, self.tl, self.th,
            _fmt(self.lambda_d), _fmt(self.budget_frac), self.seeder,
            f"{self.evac_frac_mean:.6f}", f"{self.evac_frac_stderr:.6f}", f"{self.regret_pct:.6f}", wc,
        ]


def _fmt(x: float) -> str:
    return format(float(x), "g")


def regret(best: float, value: float) -> float:
    if not best > 0:
        raise ValueError("regret undefined when the best coverage is not positive")
    return (best - value) / best * 100.0


def _graph_stream(sc: Scenario, g: int) -> RngHandle:
    # independent of budget, lambda and seeder list so sweeps reuse the same graphs
    return RngHandle(sc.seed, f"graph/{sc.network}/{sc.n}/{g}")


def build_graph(sc: Scenario, g: int = 0):
    rng = _graph_stream(sc, g)
    p = dict(sc.network_params)
    if sc.network == "scale_free":
        graph = gen_scale_free(sc.n, rng=rng.derive("structure"), **p)
    elif sc.network == "random_group":
        graph = gen_random_group(sc.n, rng=rng.derive("structure"), **p)
    else:
        if "fractions" in p:
            p["fractions"] = tuple(p["fractions"])
        graph = gen_geometric_group(sc.n, rng=rng.derive("structure"), **p)
    tp = dict(sc.trust_params)
    for key in ("within",):
        if key in tp:
            tp[key] = tuple(tp[key])
    graph = assign_trust(graph, sc.trust_scenario, rng.derive("trust"), **tp)
    pair = None if sc.tl is None else (sc.tl, sc.th)
    t_l, t_h = assign_thresholds(graph, pair, rng.derive("thresholds"), sc.tl_range, sc.th_range)
    return graph, t_l, t_h


def build_instance(sc: Scenario, g: int = 0, graph_data=None) -> GeneralInstance:
    graph, t_l, t_h = graph_data or build_graph(sc, g)
    sources = [SourceSpec(sc.info_value, b, sc.source_trust) for b in sc.budgets()]
    return GeneralInstance.build(
        graph, t_l, t_h, sources, lambda_d=sc.lambda_d, lambda_s=sc.lambda_s,
        tau=math.inf if sc.tau is None else sc.tau, transmit_p=sc.transmit_p,
    )


def omega_for(sc: Scenario, inst: GeneralInstance):
    om = sc.omega
    if om == "homogeneous":
        return thresholds_homogeneous(inst)
    if om == "two_level":
        return thresholds_two_level(inst)
    if isinstance(om, dict):
        return thresholds_grid(om["lo"], om["hi"], om["step"])
    return tuple(float(t) for t in om)


def choose_seeding(sc: Scenario, inst: GeneralInstance, seeder: str, rng: RngHandle) -> Seeding:
    budgets = inst.budgets
    if seeder == "R":
        return random_seeding(inst.n, budgets, rng)
    if seeder == "HD":
        return high_degree_seeding(inst.graph, budgets)
    if seeder == "PG":
        rep = projected_greedy(inst, omega_for(sc, inst), sc.pg_replications, rng, max_steps=sc.max_steps)
        log.info("PG picked t=%.4f", rep.t_opt)
        return rep.best_seeding
    if seeder == "AG":
        return actual_greedy(inst, replications=sc.pg_replications, rng=rng, max_steps=sc.max_steps)
    raise ValueError(f"unknown seeder {seeder!r}")


def evaluate(inst: GeneralInstance, seeding: Seeding, replications: int, rng: RngHandle,
             repartition: bool = True, max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """Believer counts per replication.

    With ``repartition`` the seeded nodes are reassigned to sources at random
    in every replication (stream ``partition/r``), as done for seeders whose
    source assignment is arbitrary.
    """
    merged = sorted(seeding.nodes())
    out = np.empty(replications)
    for r in range(replications):
        s = partition_seeds(merged, inst.budgets, rng.derive(f"partition/{r}")) if repartition else seeding
        out[r] = run(inst, s, rng.derive(f"rep/{r}"), max_steps).believers
    return out


def run_scenario(sc: Scenario) -> list:
    """Evaluate every seeder on every graph instance and attach regret."""
    samples = {s: [] for s in sc.seeders}
    clock = {s: 0.0 for s in sc.seeders}
    try:
        for g in range(sc.graph_instances):
            inst = build_instance(sc, g)
            rng = RngHandle(sc.seed, f"run/{sc.scenario_id}/{g}")
            for s in sc.seeders:
                t0 = time.perf_counter()
                seeding = choose_seeding(sc, inst, s, rng.derive(f"seeder/{s}"))
                if not seeding.respects(inst.budgets):
                    raise RuntimeError(f"seeder {s} exceeded budgets")
                # common evaluation streams across seeders
                vals = evaluate(inst, seeding, sc.replications, rng.derive("eval"),
                                repartition=(s != "AG"), max_steps=sc.max_steps)
                clock[s] += time.perf_counter() - t0
                samples[s].append(vals / inst.n)
    except Exception as exc:
        raise RuntimeError(f"scenario {sc.scenario_id!r} failed: {exc}") from exc

    tl = "range" if sc.tl is None else _fmt(sc.tl)
    th = "range" if sc.th is None else _fmt(sc.th)
    rows = []
    for s in sc.seeders:
        x = np.concatenate(samples[s])
        se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
        # round first so the regret column is recomputable from the written means
        rows.append(ResultRow(
            sc.scenario_id, sc.network, sc.trust_scenario, tl, th, sc.lambda_d, sc.budget_frac, s,
            round(float(x.mean()), 6), round(se, 6),
            wallclock_s=clock[s] if sc.timing else None,
        ))
    best = max(r.evac_frac_mean for r in rows)
    for r in rows:
        r.regret_pct = regret(best, r.evac_frac_mean) if best > 0 else 0.0
    return rows


def run_scenarios(scenarios, workers: int = 1) -> list:
    """Run a grid of scenarios; output order always follows the input order."""
    if workers > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_scenario, scenarios))
    else:
        results = [run_scenario(sc) for sc in scenarios]
    return [row for rows in results for row in rows]


def sweep_budget(sc: Scenario, fractions, workers: int = 1) -> list:
    fractions = list(fractions)
    if fractions != sorted(fractions):
        raise ValueError("fractions must be sorted")
    grid = [sc.replace(budget_frac=f, scenario_id=f"{sc.scenario_id}/b{_fmt(f)}") for f in fractions]
    return run_scenarios(grid, workers)


@dataclass
class ThresholdCurve:
    lambda_d: float
    thresholds: tuple
    evac_frac: tuple  # mean over graph instances
    stderr: tuple

    @property
    def t_opt(self) -> float:
        # first maximum, i.e. ties go to the smaller threshold
        return self.thresholds[int(np.argmax(self.evac_frac))]


def _graph_curves(args):
    """Per-lambda (thresholds, means, stderrs) on one graph instance.

    The greedy candidates do not depend on ``lambda_d``, so they are built once
    and scored under every lambda on the same streams.
    """
    sc, g, lambdas = args
    inst = build_instance(sc, g)
    rng = RngHandle(sc.seed, f"sweep/{g}")
    cands = projected_candidates(inst, omega_for(sc, inst), rng)
    out = []
    for lam in lambdas:
        rep = score_candidates(inst.replace(lambda_d=lam), cands, sc.replications, rng, sc.max_steps)
        out.append((tuple(r.threshold for r in rep.rows),
                    [r.coverage_mean / inst.n for r in rep.rows],
                    [r.coverage_stderr / inst.n for r in rep.rows]))
    return out


def sweep_threshold(sc: Scenario, lambdas=LAMBDA_GRID, workers: int = 1) -> list:
    """Projected-greedy curve over the scenario's threshold set, one per ``lambda_d``.

    Curves are averaged over the scenario's graph instances.
    """
    lambdas = [float(x) for x in lambdas]
    jobs = [(sc, g, lambdas) for g in range(sc.graph_instances)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_graph = list(ex.map(_graph_curves, jobs))
    else:
        per_graph = [_graph_curves(j) for j in jobs]
    curves = []
    for i, lam in enumerate(lambdas):
        ts = per_graph[0][i][0]
        means = np.asarray([pg[i][1] for pg in per_graph])
        ses = np.asarray([pg[i][2] for pg in per_graph])
        se = np.sqrt((ses ** 2).sum(axis=0)) / len(means)
        curves.append(ThresholdCurve(lam, ts, tuple(means.mean(axis=0).tolist()), tuple(se.tolist())))
    return curves


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def curves_to_csv(curves) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda_d", "threshold", "evac_frac_mean", "evac_frac_stderr", "is_t_opt"])
    for c in curves:
        for t, m, s in zip(c.thresholds, c.evac_frac, c.stderr):
            w.writerow([_fmt(c.lambda_d), f"{t:.6g}", f"{m:.6f}", f"{s:.6f}", int(t == c.t_opt)])
    return buf.getvalue()


def read_rows(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


# --- config -------------------------------------------------------------------

_FIELDS = {f.name for f in dataclasses.fields(Scenario)}


def scenario_from_dict(d: dict) -> Scenario:
    unknown = set(d) - _FIELDS
    if unknown:
        raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
    d = dict(d)
    if "seeders" in d:
        d["seeders"] = tuple(d["seeders"])
    return Scenario(**d)


def expand_config(cfg: dict, overrides: dict | None = None) -> list:
    """Scenario list from a config document.

    Top-level keys are Scenario fields.  An optional ``grid`` maps field names
    to value lists and expands to their cartesian product, in the order given.
    """
    cfg = dict(cfg)
    grid = cfg.pop("grid", {}) or {}
    cfg.pop("lambda_grid", None)
    cfg.update(overrides or {})
    base_id = cfg.get("scenario_id", "s")
    keys = list(grid)
    out = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        d = dict(cfg)
        d.update(zip(keys, combo))
        if keys:
            d["scenario_id"] = base_id + "/" + ",".join(f"{k}={_label(v)}" for k, v in zip(keys, combo))
        out.append(scenario_from_dict(d))
    return out


def _label(v):
    if isinstance(v, (list, tuple)):
        return "-".join(_label(x) for x in v)
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
