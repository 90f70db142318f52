"""Benchmark harness: fixed start/goal, seeded trials, per-planner summary.

Trial ``i`` of every planner runs with seed ``base_seed + i``. In sample-cap
mode each planner is bounded by a sample count instead of the clock and
``trials.csv`` carries only deterministic columns; wall times go to
``timings.csv``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import platform
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import io
from .baselines import PRM_K, prm_build, prm_query, rrt, rrt_connect
from .collision import Environment
from .criticality import CriticalMask, critical_seeds
from .geometry import make_rng
from .planners import LLRM, BuildParams, Status, ll_build, llrm_plan, validate_path

PLANNERS = ("llp", "llrm", "rrt", "rrt-connect", "prm")
NEEDS_MASK = ("llp", "llrm")

TRIAL_FIELDS = ["planner", "trial", "seed", "status", "samples", "extend_calls",
                "connect_calls", "path_vertices", "path_length"]
TIME_FIELDS = ["wall_time", "build_time"]


@dataclass
class BenchmarkConfig:
    env: Environment
    planners: list[str]
    trials: int = 100
    time_limit: float = 60.0
    build_budget: float = 1.0
    cr_fraction: float = 0.05
    m_fraction: float = 0.1
    base_seed: int = 0
    mask: CriticalMask | None = None
    # sample-cap mode: every run is bounded by samples, not time
    sample_cap: int | None = None
    build_sample_cap: int | None = None
    prm_k: int = PRM_K

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not (self.time_limit > 0 and self.build_budget > 0):
            raise ValueError("time limit and build budget must be positive")
        if not (0 < self.cr_fraction <= 1 and 0 < self.m_fraction <= 1):
            raise ValueError("fractions must lie in (0, 1]")
        if self.sample_cap is not None and self.sample_cap < 1:
            raise ValueError("sample cap must be positive")
        unknown = [p for p in self.planners if p not in PLANNERS]
        if unknown:
            raise ValueError(f"unknown planners {unknown}; choose from {list(PLANNERS)}")
        if not self.planners:
            raise ValueError("no planners selected")
        if self.mask is None and any(p in NEEDS_MASK for p in self.planners):
            raise ValueError("LL planners need a critical mask")
        if self.env.start is None or self.env.goal is None:
            raise ValueError("the environment must define a start and a goal")

    @property
    def capped(self) -> bool:
        return self.sample_cap is not None

    def build_cap(self) -> int | None:
        if not self.capped:
            return None
        return self.build_sample_cap if self.build_sample_cap is not None else self.sample_cap


@dataclass
class TrialRecord:
    planner: str
    trial: int
    seed: int
    status: str
    wall_time: float
    samples: int
    path_length: float
    extend_calls: int = 0
    connect_calls: int = 0
    path_vertices: int = 0
    build_time: float = 0.0
    path: list = field(default_factory=list, repr=False)

    @property
    def solved(self) -> bool:
        return self.status == Status.SOLVED.value


def run_trial(cfg: BenchmarkConfig, planner: str, trial: int) -> TrialRecord:
    env = cfg.env
    seed = cfg.base_seed + trial
    rng = make_rng(seed)
    limit = None if cfg.capped else cfg.time_limit
    params = BuildParams.for_env(env, sample_cap=cfg.sample_cap, time_limit=limit)
    build_time = 0.0
    t0 = time.perf_counter()
    if planner == "llp":
        seeds = critical_seeds(cfg.mask, cfg.cr_fraction, env.space, env, rng)
        params.n = len(seeds)
        res = ll_build(params, seeds, env, rng, env.start, env.goal)
    elif planner == "llrm":
        seeds = critical_seeds(cfg.mask, cfg.cr_fraction, env.space, env, rng)
        n = len(seeds)
        m = int(math.ceil(cfg.m_fraction * n))
        build = BuildParams.for_env(env, n=n, m=m, mode=LLRM, sample_cap=cfg.build_cap(),
                                    time_limit=None if cfg.capped else cfg.build_budget)
        built = ll_build(build, seeds, env, rng)
        build_time = time.perf_counter() - t0
        if limit is not None:
            params.time_limit = max(limit - build_time, 1e-9)
        res = llrm_plan(env.start, env.goal, built.roadmap, params, env, rng)
    elif planner == "prm":
        rm = prm_build(env, None if cfg.capped else cfg.build_budget, cfg.prm_k, rng,
                       max_samples=cfg.build_cap())
        build_time = rm.build_time
        res = prm_query(rm, env.start, env.goal, env, params)
    elif planner == "rrt":
        res = rrt(env, env.start, env.goal, params, rng)
    else:
        res = rrt_connect(env, env.start, env.goal, params, rng)
    wall = time.perf_counter() - t0
    if res.solved:
        # a wrong answer is worse than a missing one: abort the whole run
        validate_path(res.path, env.start, env.goal, env, params.resolution)
    return TrialRecord(planner, trial, seed, res.status.value, wall, res.samples, res.path_length,
                       res.extend_calls, res.connect_calls, len(res.path), build_time, list(res.path))


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def host_fingerprint() -> dict:
    return {"machine": platform.machine(), "processor": platform.processor(),
            "system": platform.system(), "release": platform.release(),
            "python": platform.python_version(), "numpy": np.__version__,
            "cpus": os.cpu_count()}


def summarize(records: list[TrialRecord], planner: str) -> dict:
    rows = [r for r in records if r.planner == planner]
    times = sorted(r.wall_time for r in rows if r.solved)
    samples = sorted(r.samples for r in rows if r.solved)
    n = len(rows)
    return {
        "trials": n,
        "solved": len(times),
        "success_rate": len(times) / n if n else 0.0,
        "median_time": statistics.median(times) if times else None,
        "mean_time": statistics.fmean(times) if times else None,
        "median_samples": statistics.median(samples) if samples else None,
        # fraction of all trials solved within each success time
        "curve": [[t, (i + 1) / n] for i, t in enumerate(times)],
    }


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    records: list[TrialRecord]
    summary: dict

    def by_planner(self, planner: str) -> list[TrialRecord]:
        return [r for r in self.records if r.planner == planner]


def run_benchmark(cfg: BenchmarkConfig, out_dir=None, progress=None) -> BenchmarkResult:
    """Run every planner for ``cfg.trials`` trials, planner by planner.

    Raises :class:`~learnlink.planners.InvalidPath` on any invalid solution.
    When ``out_dir`` is given the tables, summary and solved paths are written
    there.
    """
    records = []
    for planner in cfg.planners:
        for trial in range(cfg.trials):
            rec = run_trial(cfg, planner, trial)
            records.append(rec)
            if progress is not None:
                progress(rec)
    summary = {
        "environment": cfg.env.name,
        "mode": "sample-cap" if cfg.capped else "wall-clock",
        "config": {"trials": cfg.trials, "time_limit": cfg.time_limit,
                   "build_budget": cfg.build_budget, "cr_fraction": cfg.cr_fraction,
                   "m_fraction": cfg.m_fraction, "base_seed": cfg.base_seed,
                   "sample_cap": cfg.sample_cap, "build_sample_cap": cfg.build_cap(),
                   "prm_k": cfg.prm_k},
        "host": host_fingerprint(),
        "planners": {p: summarize(records, p) for p in cfg.planners},
    }
    result = BenchmarkResult(cfg, records, summary)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_trials(records: list[TrialRecord], path, with_times: bool) -> None:
    fields = TRIAL_FIELDS + (TIME_FIELDS if with_times else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in records:
            w.writerow([_fmt(getattr(r, f)) for f in fields])


def write_timings(records: list[TrialRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["planner", "trial"] + TIME_FIELDS)
        for r in records:
            w.writerow([r.planner, r.trial, _fmt(r.wall_time), _fmt(r.build_time)])


def write_outputs(result: BenchmarkResult, out_dir) -> None:
    out = io.ensure_dir(out_dir)
    capped = result.config.capped
    write_trials(result.records, out / "trials.csv", with_times=not capped)
    if capped:
        write_timings(result.records, out / "timings.csv")
    (out / "summary.json").write_text(json.dumps(result.summary, indent=2) + "\n")
    paths = io.ensure_dir(out / "paths")
    for planner in result.config.planners:
        solved = [r for r in result.by_planner(planner) if r.solved]
        with open(paths / f"{planner}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            dims = result.config.env.space.dims
            w.writerow(["plan_id", "step"] + [f"dim{i}" for i in range(dims)])
            for r in solved:
                for step, q in enumerate(r.path):
                    w.writerow([r.trial, step] + [repr(float(v)) for v in q])


def read_trials(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def load_mask_for(env: Environment, path) -> CriticalMask:
    mask = io.load_mask(path, workspace=env.workspace)
    if tuple(mask.spec.workspace) != tuple(env.workspace):
        raise ValueError("mask workspace does not match the environment")
    return mask

