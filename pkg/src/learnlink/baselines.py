"""Reference planners: RRT, RRT-Connect and PRM.

They run on the same metric, steering and collision primitives as the
Learn-and-Link planners, so timing differences come from the algorithms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .collision import Environment, edge_collision_free, is_collision_free
from .geometry import distance
from .planners import BuildParams, PlanResult, Status, _Clock
from .roadmap import (Counters, ExtendStatus, Roadmap, connect, dijkstra, extend,
                      path_length, shortest_path)

GOAL_BIAS = 0.05
PRM_K = 10


def _endpoints(env, q_start, q_goal):
    q_start, q_goal = env.space.config(q_start), env.space.config(q_goal)
    ok = is_collision_free(q_start, env) and is_collision_free(q_goal, env)
    return q_start, q_goal, ok


def _result(status, counters, clock, path=(), space=None) -> PlanResult:
    path = list(path)
    return PlanResult(status, path=path, samples=counters.samples,
                      extend_calls=counters.extend_calls, connect_calls=counters.connect_calls,
                      wall_time=clock.elapsed(),
                      path_length=path_length(path, space) if path else 0.0)


def rrt(env: Environment, q_start, q_goal, params: BuildParams, rng: np.random.Generator,
        goal_bias: float = GOAL_BIAS) -> PlanResult:
    """Single goal-biased tree grown from the start."""
    clock = _Clock(params.sample_cap, params.time_limit)
    counters = Counters()
    q_start, q_goal, ok = _endpoints(env, q_start, q_goal)
    if not ok:
        return _result(Status.INVALID_QUERY, counters, clock)
    if np.array_equal(q_start, q_goal):
        return _result(Status.SOLVED, counters, clock, [q_start], env.space)
    tree = Roadmap(env.space).new_graph(q_start, "start")
    root = tree.root
    while True:
        stop = clock.stop_reason(counters.samples)
        if stop is not None:
            return _result(stop, counters, clock)
        counters.samples += 1
        if rng.random() < goal_bias:
            q_rand = q_goal
        else:
            q_rand = geometry.sample_uniform(env.space, rng)
        res = extend(tree, q_rand, env, params.step, params.resolution, counters)
        if not res:
            continue
        q_new = tree.vertex(res.vertex)
        if distance(q_new, q_goal, env.space) <= params.step and \
                edge_collision_free(q_new, q_goal, env, params.resolution):
            if np.array_equal(q_new, q_goal):
                goal = res.vertex
            else:
                goal = tree.add_vertex(q_goal, "goal")
                tree.add_edge(res.vertex, goal)
            return _result(Status.SOLVED, counters, clock,
                           shortest_path(tree, root, goal), env.space)


def rrt_connect(env: Environment, q_start, q_goal, params: BuildParams,
                rng: np.random.Generator) -> PlanResult:
    """Bidirectional RRT: extend one tree, connect the other, swap."""
    clock = _Clock(params.sample_cap, params.time_limit)
    counters = Counters()
    q_start, q_goal, ok = _endpoints(env, q_start, q_goal)
    if not ok:
        return _result(Status.INVALID_QUERY, counters, clock)
    if np.array_equal(q_start, q_goal):
        return _result(Status.SOLVED, counters, clock, [q_start], env.space)
    forest = Roadmap(env.space)
    ta = forest.new_graph(q_start, "start")
    tb = forest.new_graph(q_goal, "goal")
    while True:
        stop = clock.stop_reason(counters.samples)
        if stop is not None:
            return _result(stop, counters, clock)
        counters.samples += 1
        q_rand = geometry.sample_uniform(env.space, rng)
        res = extend(ta, q_rand, env, params.step, params.resolution, counters)
        if res:
            q_new = ta.vertex(res.vertex).copy()
            joint = connect(tb, q_new, env, params.step, params.resolution, counters)
            if joint.status is ExtendStatus.REACHED:
                half_a = shortest_path(ta, ta.root, res.vertex)
                half_b = shortest_path(tb, joint.vertex, tb.root)
                path = half_a + half_b[1:]
                if ta.root != forest.graphs[0].root:
                    path = path[::-1]
                return _result(Status.SOLVED, counters, clock, path, env.space)
        ta, tb = tb, ta


# ---------------------------------------------------------------------------
# PRM
# ---------------------------------------------------------------------------

@dataclass
class PrmRoadmap:
    space: geometry.CSpace
    k: int
    resolution: float
    points: np.ndarray = None
    adj: dict = field(default_factory=dict)
    build_time: float = 0.0
    samples: int = 0
    # how construction ended; reported when a query cannot be answered
    exhausted: Status = Status.TIMED_OUT

    def __post_init__(self):
        if self.points is None:
            self.points = np.empty((0, self.space.dims))

    def __len__(self):
        return len(self.adj)

    def edge_count(self) -> int:
        return sum(len(v) for v in self.adj.values()) // 2

    def knearest(self, q, count: int | None = None, limit: int | None = None) -> list[int]:
        """Up to ``k`` nearest of the first ``limit`` vertices, ties by lowest index."""
        pts = self.points if limit is None else self.points[:limit]
        if len(pts) == 0:
            return []
        d = self.space.distances(pts, q)
        k = min(count or self.k, len(pts))
        order = np.lexsort((np.arange(len(pts)), d))
        return [int(i) for i in order[:k]]


def prm_build(env: Environment, build_budget: float | None, k: int, rng: np.random.Generator,
              resolution: float | None = None, max_samples: int | None = None) -> PrmRoadmap:
    """Grow a k-nearest PRM until the time budget or sample cap runs out.

    Only the validated adjacency is kept; local paths are straight lines and
    are not stored.
    """
    if build_budget is not None and not build_budget > 0:
        raise ValueError("build budget must be positive")
    if build_budget is None and max_samples is None:
        raise ValueError("need a build budget or a sample cap")
    if k < 1:
        raise ValueError("k must be at least 1")
    if resolution is None:
        resolution = env.default_resolution()
    rm = PrmRoadmap(env.space, k, resolution)
    clock = _Clock(max_samples, build_budget)
    cap = 256
    pts = np.empty((cap, env.space.dims))
    n = 0
    while clock.stop_reason(rm.samples) is None:
        rm.samples += 1
        q = geometry.sample_uniform(env.space, rng)
        if not is_collision_free(q, env):
            continue
        if n == cap:
            cap *= 2
            pts = np.concatenate([pts, np.empty_like(pts)])
        pts[n] = q
        rm.points = pts[:n]
        rm.adj[n] = {}
        for j in rm.knearest(q, limit=n):
            if edge_collision_free(pts[j], q, env, resolution):
                w = distance(pts[j], q, env.space)
                rm.adj[n][j] = w
                rm.adj[j][n] = w
        n += 1
    rm.points = pts[:n].copy()
    rm.build_time = clock.elapsed()
    rm.exhausted = clock.stop_reason(rm.samples)
    return rm


def prm_query(rm: PrmRoadmap, q_start, q_goal, env: Environment,
              params: BuildParams | None = None) -> PlanResult:
    """Attach both endpoints to their k nearest vertices and run Dijkstra."""
    t0 = time.perf_counter()
    resolution = rm.resolution if params is None else params.resolution
    q_start, q_goal, ok = _endpoints(env, q_start, q_goal)

    def done(status, path=()):
        path = list(path)
        return PlanResult(status, path=path, samples=rm.samples,
                          wall_time=time.perf_counter() - t0,
                          path_length=path_length(path, env.space) if path else 0.0)

    if not ok:
        return done(Status.INVALID_QUERY)
    if np.array_equal(q_start, q_goal):
        return done(Status.SOLVED, [q_start])
    S, G = -1, -2
    extra: dict[int, dict[int, float]] = {S: {}, G: {}}
    for tag, q in ((S, q_start), (G, q_goal)):
        for j in rm.knearest(q):
            if edge_collision_free(rm.points[j], q, env, resolution):
                w = distance(rm.points[j], q, env.space)
                extra[tag][j] = w
                extra.setdefault(j, {})[tag] = w

    def neighbors(u):
        base = rm.adj.get(u, {})
        more = extra.get(u)
        if more:
            return list(base.items()) + list(more.items())
        return base.items()

    ids = dijkstra(neighbors, S, G)
    if not ids:
        return done(rm.exhausted)
    pts = {S: q_start, G: q_goal}
    return done(Status.SOLVED, [pts[i] if i < 0 else rm.points[i].copy() for i in ids])
