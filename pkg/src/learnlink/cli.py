"""Command-line interface.

Exit codes: 0 success, 1 planning failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, io, worlds
from .baselines import PRM_K, prm_build, prm_query, rrt, rrt_connect
from .criticality import (DEFAULT_QUANTILE, DEFAULT_SIGMA, DEFAULT_SIZE, GridSpec, critical_seeds,
                          default_planner, generate_training_data)
from .geometry import make_rng
from .planners import LLRM, BuildParams, InvalidPath, ll_build, llrm_plan, validate_path
from .render import render_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("learnlink")


class UsageError(Exception):
    pass


def _vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(kind):
    def parse(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _fraction(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
    common.add_argument("--sample-cap", type=_positive(int), default=None,
                        help="bound runs by samples instead of time; makes results reproducible")
    common.add_argument("--time-limit", type=_positive(float), default=60.0,
                        help="wall-clock limit per run in seconds (default 60)")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="learnlink", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("world", parents=[common], help="write a built-in environment file")
    w.add_argument("name", choices=sorted(worlds.WORLDS))
    w.add_argument("--radius", type=_positive(float), default=0.5)

    g = sub.add_parser("gen-data", parents=[common], help="critical mask from observed plans")
    g.add_argument("--env", required=True)
    g.add_argument("--problems", type=_positive(int), default=50)
    g.add_argument("--repetitions", type=_positive(int), default=3)
    g.add_argument("--grid", type=_positive(int), default=DEFAULT_SIZE, help="grid cells per side")
    g.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    g.add_argument("--quantile", type=_fraction, default=DEFAULT_QUANTILE)
    g.add_argument("--planner-cap", type=_positive(int), default=20_000,
                   help="sample cap of each training query")

    pl = sub.add_parser("plan", parents=[common], help="solve one query")
    pl.add_argument("--planner", choices=bench.PLANNERS, required=True)
    _query_args(pl)
    pl.add_argument("--cr", help="critical mask (PGM); required by llp and llrm")
    pl.add_argument("--cr-fraction", type=_fraction, default=0.05)
    pl.add_argument("--m-fraction", type=_fraction, default=0.1)
    pl.add_argument("--build-budget", type=_positive(float), default=1.0)

    b = sub.add_parser("build-rm", parents=[common], help="build an LL-RM roadmap file")
    b.add_argument("--env", required=True)
    b.add_argument("--cr", required=True)
    b.add_argument("--cr-fraction", type=_fraction, default=0.05)
    b.add_argument("--m-fraction", type=_fraction, default=0.1)
    b.add_argument("--build-budget", type=_positive(float), default=1.0)

    q = sub.add_parser("query-rm", parents=[common], help="answer a query on a roadmap file")
    _query_args(q)
    q.add_argument("--roadmap", required=True)
    q.add_argument("--save-roadmap", default=None,
                   help="write the grown roadmap here (may be the input file)")

    bn = sub.add_parser("bench", parents=[common], help="run the benchmark")
    bn.add_argument("--env", required=True)
    bn.add_argument("--planners", default="llp,llrm,rrt,rrt-connect,prm")
    bn.add_argument("--trials", type=_positive(int), default=100)
    bn.add_argument("--cr")
    bn.add_argument("--cr-fraction", type=_fraction, default=0.05)
    bn.add_argument("--m-fraction", type=_fraction, default=0.1)
    bn.add_argument("--build-budget", type=_positive(float), default=1.0)
    bn.add_argument("--build-sample-cap", type=_positive(int), default=None)
    bn.add_argument("--prm-k", type=_positive(int), default=PRM_K)

    r = sub.add_parser("render", parents=[common], help="draw an environment and overlays as SVG")
    r.add_argument("--env", required=True)
    r.add_argument("--mask")
    r.add_argument("--grid")
    r.add_argument("--roadmap")
    r.add_argument("--paths", action="append", default=[], help="plan CSV; repeatable")
    r.add_argument("--scale", type=_positive(float), default=50.0, help="pixels per meter")
    return p


def _query_args(p):
    p.add_argument("--env", required=True)
    p.add_argument("--start", type=_vector, default=None, help="x,y[,angles...]; default from env")
    p.add_argument("--goal", type=_vector, default=None)


def _query(env, args):
    start = args.start if args.start is not None else env.start
    goal = args.goal if args.goal is not None else env.goal
    if start is None or goal is None:
        raise UsageError("no --start/--goal given and the environment defines none")
    try:
        return env.space.config(start), env.space.config(goal)
    except ValueError as e:
        raise UsageError(f"bad query: {e}") from None


def _need_out(args, what):
    if not args.out:
        raise UsageError(f"--out is required ({what})")
    return Path(args.out)


def _params(env, args, **kw):
    limit = None if args.sample_cap is not None else args.time_limit
    return BuildParams.for_env(env, sample_cap=args.sample_cap, time_limit=limit, **kw)


def _report(res, label):
    print(f"{label}: {res.status.value} samples={res.samples} time={res.wall_time:.3f}s "
          f"length={res.path_length:.3f} vertices={len(res.path)}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_world(args):
    env = worlds.WORLDS[args.name](radius=args.radius)
    out = _need_out(args, "environment file")
    io.save_environment(env, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_gen_data(args):
    env = io.load_environment(args.env)
    out = io.ensure_dir(_need_out(args, "directory"))
    spec = GridSpec.for_env(env, args.grid)
    td = generate_training_data(env, args.problems, args.repetitions,
                                default_planner(env, args.planner_cap), make_rng(args.seed),
                                spec=spec, sigma=args.sigma, quantile=args.quantile)
    io.write_plans(td.plans, out / "plans.csv")
    io.save_grid(td.grid, out / "grid.pgm")
    io.save_grid(td.smoothed, out / "smoothed.pgm")
    io.save_mask(td.mask, out / "mask.pgm")
    io.save_obstacle_raster(td.obstacles, out / "obstacles.pgm")
    meta = {"environment": env.name, "seed": args.seed, "problems": args.problems,
            "repetitions": args.repetitions, "solved": td.solved, "failed": td.failed,
            "warnings": td.warnings, "sigma": args.sigma, "quantile": args.quantile,
            "mask_cells": len(td.mask)}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    for msg in td.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    print(f"{sum(td.solved)} plans, {len(td.mask)} critical cells -> {out}")
    return EXIT_OK


def _seeds(env, args, rng):
    mask = bench.load_mask_for(env, args.cr)
    return critical_seeds(mask, args.cr_fraction, env.space, env, rng)


def _build_llrm(env, args, rng):
    seeds = _seeds(env, args, rng)
    n = len(seeds)
    m = int(np.ceil(args.m_fraction * n))
    params = BuildParams.for_env(env, n=n, m=m, mode=LLRM, sample_cap=args.sample_cap,
                                 time_limit=None if args.sample_cap is not None else args.build_budget)
    return ll_build(params, seeds, env, rng)


def cmd_plan(args):
    env = io.load_environment(args.env)
    if args.planner in bench.NEEDS_MASK and not args.cr:
        raise UsageError(f"--cr is required for {args.planner}")
    q_start, q_goal = _query(env, args)
    rng = make_rng(args.seed)
    params = _params(env, args)
    if args.planner == "llp":
        seeds = _seeds(env, args, rng)
        params.n = len(seeds)
        res = ll_build(params, seeds, env, rng, q_start, q_goal)
    elif args.planner == "llrm":
        built = _build_llrm(env, args, rng)
        res = llrm_plan(q_start, q_goal, built.roadmap, params, env, rng)
    elif args.planner == "prm":
        rm = prm_build(env, None if args.sample_cap else args.build_budget, PRM_K, rng,
                       max_samples=args.sample_cap)
        res = prm_query(rm, q_start, q_goal, env, params)
    elif args.planner == "rrt":
        res = rrt(env, q_start, q_goal, params, rng)
    else:
        res = rrt_connect(env, q_start, q_goal, params, rng)
    return _finish(res, args, env, q_start, q_goal, params, args.planner)


def _finish(res, args, env, q_start, q_goal, params, label):
    _report(res, label)
    if not res.solved:
        return EXIT_FAIL
    validate_path(res.path, q_start, q_goal, env, params.resolution)
    if args.out:
        io.write_plans([res.path], args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_build_rm(args):
    env = io.load_environment(args.env)
    out = _need_out(args, "roadmap file")
    built = _build_llrm(env, args, make_rng(args.seed))
    rm = built.roadmap
    io.save_roadmap(rm, out)
    print(f"roadmap: {built.status.value} graphs={len(rm.graphs)} vertices={rm.live_vertices()} "
          f"samples={built.samples} -> {out}")
    return EXIT_OK


def cmd_query_rm(args):
    env = io.load_environment(args.env)
    rm = io.load_roadmap(args.roadmap, env.space)
    q_start, q_goal = _query(env, args)
    params = _params(env, args)
    res = llrm_plan(q_start, q_goal, rm, params, env, make_rng(args.seed))
    if args.save_roadmap:
        io.save_roadmap(rm, args.save_roadmap)
    return _finish(res, args, env, q_start, q_goal, params, "llrm")


def cmd_bench(args):
    env = io.load_environment(args.env)
    out = _need_out(args, "directory")
    planners = [p for p in args.planners.split(",") if p]
    mask = None
    if any(p in bench.NEEDS_MASK for p in planners):
        if not args.cr:
            raise UsageError("--cr is required for llp and llrm")
        mask = bench.load_mask_for(env, args.cr)
    try:
        cfg = bench.BenchmarkConfig(env, planners, trials=args.trials, time_limit=args.time_limit,
                                    build_budget=args.build_budget, cr_fraction=args.cr_fraction,
                                    m_fraction=args.m_fraction, base_seed=args.seed, mask=mask,
                                    sample_cap=args.sample_cap,
                                    build_sample_cap=args.build_sample_cap, prm_k=args.prm_k)
    except ValueError as e:
        raise UsageError(str(e)) from None
    result = bench.run_benchmark(cfg, out)
    for p, s in result.summary["planners"].items():
        med = "-" if s["median_time"] is None else f"{s['median_time']:.3f}s"
        print(f"{p:12s} solved {s['solved']}/{s['trials']}  median {med}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_render(args):
    env = io.load_environment(args.env)
    out = _need_out(args, "SVG file")
    mask = bench.load_mask_for(env, args.mask) if args.mask else None
    grid = io.load_grid(args.grid) if args.grid else None
    rm = io.load_roadmap(args.roadmap, env.space) if args.roadmap else None
    paths = []
    for p in args.paths:
        paths.extend(io.read_plans(p).plans)
    render_svg(env, paths=paths, roadmap=rm, grid=grid, mask=mask, scale=args.scale, out=out)
    print(f"wrote {out}")
    return EXIT_OK


COMMANDS = {"world": cmd_world, "gen-data": cmd_gen_data, "plan": cmd_plan,
            "build-rm": cmd_build_rm, "query-rm": cmd_query_rm, "bench": cmd_bench,
            "render": cmd_render}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, io.FormatError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidPath as e:
        print(f"invalid path: {e}", file=sys.stderr)
        return EXIT_FAIL
    except RuntimeError as e:
        print(f"failed: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
