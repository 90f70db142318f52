import numpy as np
import pytest

from learnlink import geometry
from learnlink.collision import Disc, Environment, Rect
from learnlink.geometry import distance, make_rng
from learnlink.planners import (LLP, LLRM, BuildParams, InvalidPath, Status, ll_build, llrm_plan,
                                seed_count, validate_path)
from learnlink.roadmap import LinkStatus


def params(env, **kw):
    return BuildParams.for_env(env, **kw)


def test_params_invariants(open_env):
    with pytest.raises(ValueError):
        BuildParams(m=3, mode=LLP)
    with pytest.raises(ValueError):
        BuildParams(step=0.1, resolution=0.2)
    with pytest.raises(ValueError):
        BuildParams(n=-1)
    p = params(open_env)
    assert p.step == pytest.approx(np.hypot(10, 10) / 20)
    assert p.resolution == pytest.approx(0.125)


def test_adjacent_query(open_env):
    p = params(open_env, sample_cap=50)
    q0 = np.array([5.0, 5.0])
    q1 = q0 + np.array([p.step, 0.0])
    res = ll_build(p, [], open_env, make_rng(0), q0, q1)
    assert res.solved and res.samples <= 5
    # start, the first steering vertex the forest linked through, goal
    assert 2 <= len(res.path) <= 3
    assert np.array_equal(res.path[0], q0) and np.array_equal(res.path[-1], q1)
    validate_path(res.path, q0, q1, open_env, p.resolution)


def test_sealed_query_fails(sealed_env):
    p = params(sealed_env, sample_cap=1000)
    res = ll_build(p, [], sealed_env, make_rng(1), sealed_env.start, sealed_env.goal)
    assert res.status is Status.SAMPLE_CAP_REACHED and res.path == [] and res.samples == 1000


def test_invalid_query(open_env):
    env = Environment((0, 0, 10, 10), [Rect(4, 4, 6, 6, "block")], Disc(0.5))
    res = ll_build(params(env, sample_cap=10), [], env, make_rng(0), [5, 5], [1, 1])
    assert res.status is Status.INVALID_QUERY and res.path == []


def test_too_many_seeds(open_env):
    with pytest.raises(ValueError):
        ll_build(params(open_env, n=3, sample_cap=10), [[1, 1]], open_env, make_rng(0), [2, 2], [8, 8])


def test_colliding_seeds_skipped():
    env = Environment((0, 0, 10, 10), [Rect(4, 4, 6, 6, "block")], Disc(0.5))
    cr = [[5, 5], [2, 8], [8, 2]]
    res = ll_build(params(env, n=3, sample_cap=5000), cr, env, make_rng(0), [1, 1], [9, 9])
    assert res.solved
    origins = [o for g in res.roadmap.graphs for o in g.origins]
    assert origins.count("cr") == 2


def test_llp_open_world_solves(open_env):
    p = params(open_env, sample_cap=5000)
    res = ll_build(p, [], open_env, make_rng(3), open_env.start, open_env.goal)
    assert res.solved
    validate_path(res.path, open_env.start, open_env.goal, open_env, p.resolution)
    assert res.path_length >= distance(open_env.start, open_env.goal, open_env.space) - 1e-12


def test_llp_deterministic(rooms_env):
    p = params(rooms_env, sample_cap=3000)
    cr = [[5.0, 5.0], [5.0, 6.5], [5.0, 3.5]]
    p.n = 3
    a = ll_build(p, cr, rooms_env, make_rng(9), rooms_env.start, rooms_env.goal)
    b = ll_build(p, cr, rooms_env, make_rng(9), rooms_env.start, rooms_env.goal)
    assert a.status == b.status and a.samples == b.samples
    assert a.extend_calls == b.extend_calls and a.connect_calls == b.connect_calls
    assert len(a.path) == len(b.path) and all(np.array_equal(x, y) for x, y in zip(a.path, b.path))


def test_corridor_seed_helps(rooms_env):
    """One seed in the corridor lowers the median sample count (paired seeds)."""
    env = rooms_env
    with_cr, without = [], []
    for s in range(50):
        p = params(env, sample_cap=20_000, n=1)
        r = ll_build(p, [[5.0, 5.0]], env, make_rng(s), env.start, env.goal)
        if r.solved:
            with_cr.append(r.samples)
        p = params(env, sample_cap=20_000)
        r = ll_build(p, [], env, make_rng(s), env.start, env.goal)
        if r.solved:
            without.append(r.samples)
    assert with_cr and without
    assert np.median(with_cr) < np.median(without)


def test_main_loop_sampler_is_uniform(monkeypatch, rooms_env):
    """Critical seeds add subgraphs but never change the main-loop sampler."""
    calls = []
    real = geometry.sample_uniform

    def spy(space, rng):
        q = real(space, rng)
        calls.append((space, q.copy()))
        return q

    monkeypatch.setattr(geometry, "sample_uniform", spy)
    env = rooms_env
    cr = [[5.0, 5.0], [4.0, 6.5], [6.0, 3.5]]
    for seeds in ([], cr):
        calls.clear()
        p = params(env, sample_cap=400, n=len(seeds))
        res = ll_build(p, seeds, env, make_rng(4), env.start, env.goal)
        assert len(calls) == res.samples
        assert all(space is env.space for space, _ in calls)
        # support of the sampler is the whole C-space, not the mask
        assert all(env.space.contains(q) for _, q in calls)


def test_uniform_fallback_solves_open(open_env):
    ok = 0
    for s in range(10):
        res = ll_build(params(open_env, sample_cap=5000), [], open_env, make_rng(s),
                       open_env.start, open_env.goal)
        ok += res.solved
    assert ok == 10


def _bfs(G):
    seen, todo = {G.root}, [G.root]
    while todo:
        u = todo.pop()
        for v in G.adj[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


class ForestWatch:
    def __init__(self):
        self.events = 0
        self.last_live = None
        self.last_total = None

    def __call__(self, ev):
        self.events += 1
        assert ev["live_after"] <= ev["live_before"]
        if self.last_live is not None:
            assert ev["live_before"] <= self.last_live
        assert (ev["status"] is LinkStatus.LINKED) == (ev["live_after"] == 1)
        total = ev["live_vertices"] + ev["merged_total"]
        if self.last_total is not None:
            assert total >= self.last_total
        self.last_live, self.last_total = ev["live_after"], total
        if ev["status"] is not LinkStatus.ADVANCED:
            G = ev["curr"]
            assert _bfs(G) == set(G.ids)
            for ids in ev["absorbed_vertices"]:
                assert set(ids) <= set(G.ids)


def test_forest_invariants(rooms_env):
    env = rooms_env
    cr = [[5.0, 5.0], [4.0, 6.5], [6.0, 3.5], [2.0, 2.0], [8.0, 8.0]]
    watch = ForestWatch()
    for s in range(5):
        watch.last_live = watch.last_total = None
        res = ll_build(params(env, sample_cap=5000, n=5), cr, env, make_rng(s),
                       env.start, env.goal, observer=watch)
        assert res.solved
    assert watch.events > 100


# ---- LL-RM ----

def test_llrm_build_returns_roadmap(open_env):
    p = params(open_env, n=2, m=3, mode=LLRM, sample_cap=3000)
    res = ll_build(p, [[3, 3], [7, 7]], open_env, make_rng(0))
    assert res.solved and len(res.roadmap.graphs) == 1 and res.path == []
    origins = res.roadmap.graphs[0].origins
    assert origins.count("cr") == 2 and origins.count("uniform") == 3


def test_llrm_near_query(open_env):
    p = params(open_env, n=2, mode=LLRM, sample_cap=3000)
    RM = ll_build(p, [[3, 5], [7, 5]], open_env, make_rng(0)).roadmap
    assert len(RM.graphs) == 1
    events = []
    q = params(open_env, sample_cap=1000)
    res = llrm_plan([3.2, 5.1], [6.9, 4.8], RM, q, open_env, make_rng(1), observer=events.append)
    assert res.solved and len(events) <= 2
    validate_path(res.path, res.path[0], res.path[-1], open_env, q.resolution)


def test_llrm_sealed_endpoint(sealed_env):
    p = params(sealed_env, n=1, mode=LLRM, sample_cap=500)
    RM = ll_build(p, [[2, 2]], sealed_env, make_rng(0)).roadmap
    res = llrm_plan([2, 8], sealed_env.goal, RM, params(sealed_env, sample_cap=800), sealed_env, make_rng(1))
    assert res.status is Status.SAMPLE_CAP_REACHED and res.path == []


def test_llrm_invalid_query(open_env):
    env = Environment((0, 0, 10, 10), [Rect(4, 4, 6, 6, "block")], Disc(0.5))
    p = params(env, n=1, mode=LLRM, sample_cap=100)
    RM = ll_build(p, [[2, 2]], env, make_rng(0)).roadmap
    res = llrm_plan([5, 5], [8, 8], RM, params(env, sample_cap=100), env, make_rng(0))
    assert res.status is Status.INVALID_QUERY


def test_llrm_reuse(rooms_env):
    """Repeating a query on the grown roadmap never needs more samples."""
    env = rooms_env
    cr = [[5.0, 5.0], [4.0, 6.5], [6.0, 3.5], [2.0, 8.0], [8.0, 2.0]]
    for s in range(5):
        RM = ll_build(params(env, n=5, m=1, mode=LLRM, sample_cap=400), cr, env, make_rng(s)).roadmap
        q = params(env, sample_cap=20_000)
        first = llrm_plan(env.start, env.goal, RM, q, env, make_rng(100 + s))
        second = llrm_plan(env.start, env.goal, RM, q, env, make_rng(100 + s))
        assert first.solved and second.solved
        assert second.samples <= first.samples


def test_llrm_persists_growth(open_env):
    p = params(open_env, n=1, mode=LLRM, sample_cap=100)
    RM = ll_build(p, [[5, 5]], open_env, make_rng(0)).roadmap
    before = RM.live_vertices()
    llrm_plan([1, 1], [9, 9], RM, params(open_env, sample_cap=2000), open_env, make_rng(0))
    assert RM.live_vertices() > before


def test_validate_path_catches(open_env):
    env = Environment((0, 0, 10, 10), [Rect(4, 0, 6, 10, "wall")], Disc(0.5))
    a, b = np.array([1.0, 5.0]), np.array([9.0, 5.0])
    with pytest.raises(InvalidPath):
        validate_path([a, b], a, b, env, 0.1)
    with pytest.raises(InvalidPath):
        validate_path([a, a], a, b, env, 0.1)
    with pytest.raises(InvalidPath):
        validate_path([], a, b, env, 0.1)


def test_seed_count():
    assert seed_count(0, 0.05) == 0
    assert seed_count(10, 0.05) == 1
    assert seed_count(2402, 0.05) == 121
