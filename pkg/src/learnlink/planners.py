"""Learn-and-Link planners: the single-query LLP and the LL-RM roadmap."""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry
from .collision import Environment, edge_collision_free, is_collision_free
from .roadmap import (Counters, LinkStatus, Roadmap, extend, link, path_length,
                      shortest_path, swap)

log = logging.getLogger(__name__)

LLP = "llp"
LLRM = "llrm"


class Status(enum.Enum):
    SOLVED = "Solved"
    TIMED_OUT = "TimedOut"
    SAMPLE_CAP_REACHED = "SampleCapReached"
    INVALID_QUERY = "InvalidQuery"


class InvalidPath(AssertionError):
    pass


@dataclass
class BuildParams:
    """Inputs of the LL build loop.

    ``sample_cap`` and ``time_limit`` may both be ``None`` (unbounded); at
    least one should be set in practice.
    """

    n: int = 0
    m: int = 0
    step: float = 0.5
    resolution: float = 0.1
    sample_cap: int | None = None
    time_limit: float | None = None
    mode: str = LLP

    def __post_init__(self):
        if self.mode not in (LLP, LLRM):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n < 0 or self.m < 0:
            raise ValueError("seed counts must be non-negative")
        if self.mode == LLP and self.m != 0:
            raise ValueError("LLP mode takes no uniform seeds (m must be 0)")
        if not self.step > self.resolution > 0:
            raise ValueError("need step > resolution > 0")

    @classmethod
    def for_env(cls, env: Environment, **kw) -> "BuildParams":
        kw.setdefault("step", env.default_step())
        kw.setdefault("resolution", env.default_resolution())
        return cls(**kw)


@dataclass
class PlanResult:
    status: Status
    path: list = field(default_factory=list)
    samples: int = 0
    extend_calls: int = 0
    connect_calls: int = 0
    wall_time: float = 0.0
    path_length: float = 0.0
    roadmap: Roadmap | None = None
    start_id: int | None = None
    goal_id: int | None = None

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED


def validate_path(path, q_start, q_goal, env: Environment, resolution: float) -> None:
    """Raise :class:`InvalidPath` unless ``path`` is a valid solution."""
    if not path:
        raise InvalidPath("solved path is empty")
    if not (np.array_equal(path[0], q_start) and np.array_equal(path[-1], q_goal)):
        raise InvalidPath("path endpoints differ from the query")
    for i, (a, b) in enumerate(zip(path, path[1:])):
        if not edge_collision_free(a, b, env, resolution):
            raise InvalidPath(f"segment {i} of the path is in collision")
    if len(path) == 1 and not is_collision_free(path[0], env):
        raise InvalidPath("single-configuration path is in collision")


def sample_free(env: Environment, rng: np.random.Generator, attempts: int = 100_000) -> np.ndarray:
    """Uniform collision-free configuration by rejection."""
    for _ in range(attempts):
        q = geometry.sample_uniform(env.space, rng)
        if is_collision_free(q, env):
            return q
    raise RuntimeError(f"no collision-free configuration in {attempts} uniform draws")


class _Clock:
    def __init__(self, sample_cap, time_limit):
        self.cap = sample_cap
        self.limit = time_limit
        self.t0 = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def stop_reason(self, samples: int) -> Status | None:
        if self.cap is not None and samples >= self.cap:
            return Status.SAMPLE_CAP_REACHED
        if self.limit is not None and self.elapsed() >= self.limit:
            return Status.TIMED_OUT
        return None


def _grow(RM: Roadmap, params: BuildParams, env: Environment, rng, counters: Counters,
          clock: _Clock, observer) -> Status:
    """Shared sample / extend / link / swap loop; SOLVED means linked."""
    curr = RM.graphs[0]
    while True:
        stop = clock.stop_reason(counters.samples)
        if stop is not None:
            return stop
        counters.samples += 1
        q_rand = geometry.sample_uniform(env.space, rng)
        res = extend(curr, q_rand, env, params.step, params.resolution, counters)
        if res:
            status = link(RM, curr, res.vertex, env, params.step, params.resolution,
                          counters, observer)
            if status is LinkStatus.LINKED:
                return Status.SOLVED
        curr = swap(RM, curr)


def _pick_seeds(cr: Sequence, n: int, env: Environment, rng) -> list[np.ndarray]:
    if n > len(cr):
        raise ValueError(f"asked for {n} critical seeds but only {len(cr)} are available")
    seeds = []
    for i in rng.permutation(len(cr)):
        if len(seeds) == n:
            break
        q = env.space.config(cr[i])
        if is_collision_free(q, env):
            seeds.append(q)
        else:
            log.info("critical seed %s is in collision; skipped", q)
    if len(seeds) < n:
        log.warning("only %d of %d critical seeds are collision-free", len(seeds), n)
    return seeds


def ll_build(params: BuildParams, cr: Sequence, env: Environment, rng: np.random.Generator,
             q_start=None, q_goal=None,
             observer: Callable[[dict], None] | None = None) -> PlanResult:
    """Seed a forest from critical and uniform samples and link it.

    In LLP mode the start and goal are seeded too and a path is returned once
    every subgraph is linked. In LL-RM mode the linked (or, on budget
    exhaustion, partial) roadmap is returned in ``result.roadmap``.
    """
    clock = _Clock(params.sample_cap, params.time_limit)
    counters = Counters()
    space = env.space
    if params.mode == LLP:
        if q_start is None or q_goal is None:
            raise ValueError("LLP mode needs a start and a goal")
        q_start, q_goal = space.config(q_start), space.config(q_goal)
        if not (is_collision_free(q_start, env) and is_collision_free(q_goal, env)):
            return PlanResult(Status.INVALID_QUERY, wall_time=clock.elapsed())

    RM = Roadmap(space)
    for s in _pick_seeds(cr, params.n, env, rng):
        RM.new_graph(s, "cr")
    for _ in range(params.m):
        RM.new_graph(sample_free(env, rng), "uniform")
    start_id = goal_id = None
    if params.mode == LLP:
        start_id = RM.new_graph(q_start, "start").root
        goal_id = RM.new_graph(q_goal, "goal").root
    if not RM.graphs:
        raise ValueError("nothing to build: no seeds were requested")

    status = _grow(RM, params, env, rng, counters, clock, observer)
    result = PlanResult(status, samples=counters.samples, extend_calls=counters.extend_calls,
                        connect_calls=counters.connect_calls, roadmap=RM,
                        start_id=start_id, goal_id=goal_id)
    if params.mode == LLP and status is Status.SOLVED:
        result.path = shortest_path(RM.graphs[0], start_id, goal_id)
        result.path_length = path_length(result.path, space)
    result.wall_time = clock.elapsed()
    return result


def llrm_plan(q_start, q_goal, RM: Roadmap, params: BuildParams, env: Environment,
              rng: np.random.Generator,
              observer: Callable[[dict], None] | None = None) -> PlanResult:
    """Answer one query on an LL-RM roadmap.

    Start and goal enter as fresh subgraphs and the build loop runs until the
    forest is linked. Everything grown during the query stays in ``RM``.
    """
    clock = _Clock(params.sample_cap, params.time_limit)
    counters = Counters()
    space = env.space
    q_start, q_goal = space.config(q_start), space.config(q_goal)
    if not (is_collision_free(q_start, env) and is_collision_free(q_goal, env)):
        return PlanResult(Status.INVALID_QUERY, wall_time=clock.elapsed(), roadmap=RM)
    start_id = RM.new_graph(q_start, "start").root
    goal_id = RM.new_graph(q_goal, "goal").root
    status = _grow(RM, params, env, rng, counters, clock, observer)
    result = PlanResult(status, samples=counters.samples, extend_calls=counters.extend_calls,
                        connect_calls=counters.connect_calls, roadmap=RM,
                        start_id=start_id, goal_id=goal_id)
    if status is Status.SOLVED:
        result.path = shortest_path(RM.graphs[0], start_id, goal_id)
        result.path_length = path_length(result.path, space)
    result.wall_time = clock.elapsed()
    return result


def seed_count(points: int, fraction: float) -> int:
    """Number of critical seeds drawn from a mask with ``points`` set cells."""
    if points == 0:
        return 0
    return max(1, int(math.ceil(fraction * points)))
