"""Command line entry point: ``trustdiff <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .diffusion import estimate_coverage, format_trace, run
from .graphgen import assign_thresholds, graph_stats
from .harness import (
    LAMBDA_GRID,
    FULL_SCALE,
    build_graph,
    build_instance,
    choose_seeding,
    curves_to_csv,
    expand_config,
    load_config,
    rows_to_csv,
    run_scenarios,
    sweep_threshold,
)
from .model import RngHandle, read_graph, read_seeding, write_graph, write_seeding

log = logging.getLogger("trustdiff")


def _common(p):
    p.add_argument("--config", help="JSON scenario file (fields of Scenario, optional 'grid')")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--paper-scale", action="store_true",
                   help=f"full-size settings {FULL_SCALE}")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def _scenarios(args):
    cfg = load_config(args.config) if args.config else {}
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.paper_scale:
        over.update(FULL_SCALE)
    if getattr(args, "timing", False):
        over["timing"] = True
    return cfg, expand_config(cfg, over)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _instance(args, sc):
    if getattr(args, "graph", None):
        graph, t_l, t_h = read_graph(args.graph)
        if not t_h.any():
            # file carries no thresholds
            pair = None if sc.tl is None else (sc.tl, sc.th)
            t_l, t_h = assign_thresholds(graph, pair, RngHandle(sc.seed, "thresholds"), sc.tl_range, sc.th_range)
        sc = sc.replace(n=graph.n)
        return sc, build_instance(sc, graph_data=(graph, t_l, t_h))
    return sc, build_instance(sc, args.graph_index)


def cmd_generate(args):
    _, scs = _scenarios(args)
    sc = scs[0]
    out = _outdir(args)
    stats = []
    for g in range(sc.graph_instances):
        graph, t_l, t_h = build_graph(sc, g)
        path = out / f"graph_{g}.txt"
        write_graph(path, graph, t_l, t_h)
        st = graph_stats(graph)
        st["file"] = path.name
        stats.append(st)
        if args.stats:
            print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in st.items()))
    (out / "graph_stats.json").write_text(json.dumps(stats, indent=1) + "\n")
    print(f"wrote {len(stats)} graphs to {out}")


def cmd_seed(args):
    _, scs = _scenarios(args)
    sc, inst = _instance(args, scs[0])
    rng = RngHandle(sc.seed, f"cli-seed/{args.seeder}")
    seeding = choose_seeding(sc, inst, args.seeder, rng)
    path = _outdir(args) / f"seeds_{args.seeder}.txt"
    write_seeding(path, seeding)
    print(f"{args.seeder}: {seeding.size()} seeds -> {path}")


def cmd_simulate(args):
    _, scs = _scenarios(args)
    seeding = read_seeding(args.seeds)
    sc, inst = _instance(args, scs[0])
    rng = RngHandle(sc.seed, "cli-simulate")
    if args.trace:
        print(format_trace(run(inst, seeding, rng.derive("rep/0"), sc.max_steps, trace_states=True)))
    est = estimate_coverage(inst, seeding, sc.replications, rng, sc.max_steps)
    res = {
        "believers_mean": est.mean,
        "believers_stderr": est.stderr,
        "evacuated_mean": est.evacuated_mean,
        "evac_frac_mean": est.mean / inst.n,
        "replications": est.replications,
    }
    (_outdir(args) / "simulate.json").write_text(json.dumps(res, indent=1) + "\n")
    print(" ".join(f"{k}={v:.6g}" for k, v in res.items()))


def cmd_experiment(args):
    _, scs = _scenarios(args)
    rows = run_scenarios(scs, args.workers)
    path = _outdir(args) / "results.csv"
    path.write_text(rows_to_csv(rows))
    for r in rows:
        print(f"{r.scenario_id} {r.seeder:>2} evac={r.evac_frac_mean:.4f} regret={r.regret_pct:.2f}%")
    print(f"wrote {path}")


def cmd_sweep_threshold(args):
    cfg, scs = _scenarios(args)
    sc = scs[0]
    if sc.omega == "homogeneous" and "omega" not in cfg:
        sc = sc.replace(omega={"lo": 0.1, "hi": 0.6, "step": 0.02})
    lambdas = args.lambdas or cfg.get("lambda_grid") or LAMBDA_GRID
    curves = sweep_threshold(sc, lambdas, args.workers)
    out = _outdir(args)
    (out / "threshold_curves.csv").write_text(curves_to_csv(curves))
    lines = ["lambda_d,t_opt"] + [f"{c.lambda_d:g},{c.t_opt:.6g}" for c in curves]
    (out / "t_opt.csv").write_text("\n".join(lines) + "\n")
    for c in curves:
        print(f"lambda_d={c.lambda_d:g} t_opt={c.t_opt:.4g} evac={max(c.evac_frac):.4f}")


def build_parser():
    ap = argparse.ArgumentParser(prog="trustdiff", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="generate graph instances for the first scenario")
    _common(p)
    p.add_argument("--stats", action="store_true", help="print degree/exponent/group statistics")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("seed", help="run one seeder and write the seed file")
    _common(p)
    p.add_argument("--seeder", default="PG", choices=["PG", "HD", "R", "AG"])
    p.add_argument("--graph", help="graph file (default: generate from config)")
    p.add_argument("--graph-index", type=int, default=0)
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("simulate", help="evaluate a seed file in the diffusion model")
    _common(p)
    p.add_argument("--seeds", required=True)
    p.add_argument("--graph")
    p.add_argument("--graph-index", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="print per-step state counts of one run")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run the scenario grid and write results.csv")
    _common(p)
    p.add_argument("--timing", action="store_true", help="fill the wallclock_s column")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep-threshold", help="projected-greedy coverage against the threshold")
    _common(p)
    p.add_argument("--lambdas", type=float, nargs="+")
    p.set_defaults(func=cmd_sweep_threshold)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
