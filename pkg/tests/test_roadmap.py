import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from learnlink.collision import Disc, Environment, Rect, edge_collision_free
from learnlink.geometry import CSpace, distance, make_rng
from learnlink.roadmap import (Counters, ExtendStatus, LinkStatus, Roadmap, connect,
                               dijkstra, extend, link, path_length, shortest_path, shortest_path_ids,
                               swap)

STEP, RES = 0.5, 0.05


def free_env(size=10.0, r=0.1):
    return Environment((0, 0, size, size), [], Disc(r))


def single(env, q):
    RM = Roadmap(env.space)
    return RM, RM.new_graph(np.array(q, dtype=float), "start")


# ---- extend ----

def test_extend_reaches_short_target():
    env = free_env()
    _, G = single(env, [5, 5])
    res = extend(G, np.array([5.0 + STEP / 2, 5.0]), env, STEP, RES)
    assert res.status is ExtendStatus.REACHED
    assert len(G) == 2
    assert np.array_equal(G.vertex(res.vertex), [5.0 + STEP / 2, 5.0])


def test_extend_trapped_behind_wall():
    env = Environment((0, 0, 10, 10), [Rect(5.0, 0.0, 5.2, 10.0, "wall")], Disc(0.1))
    _, G = single(env, [4.85, 5.0])               # 0.05 m gap to the wall, less than delta
    target = np.array([5.6, 5.0])
    q_new = np.array([4.85 + STEP, 5.0])
    assert not edge_collision_free(G.vertex(G.root), q_new, env, 0.1)
    before = (len(G), {k: dict(v) for k, v in G.adj.items()})
    res = extend(G, target, env, STEP, 0.1)
    assert res.status is ExtendStatus.TRAPPED and not res
    assert (len(G), G.adj) == before


def test_extend_clamps_step():
    env = free_env()
    _, G = single(env, [2, 2])
    res = extend(G, np.array([2.0 + 3 * STEP, 2.0]), env, STEP, RES)
    assert res.status is ExtendStatus.ADVANCED
    assert distance(G.vertex(G.root), G.vertex(res.vertex), env.space) == pytest.approx(STEP, abs=1e-9)


def test_extend_reached_is_within_step():
    env = free_env()
    _, G = single(env, [5, 5])
    r = make_rng(1)
    for _ in range(200):
        t = r.uniform(0.5, 9.5, 2)
        res = extend(G, t, env, STEP, RES)
        if res.status is ExtendStatus.REACHED:
            assert np.array_equal(G.vertex(res.vertex), t)


# ---- connect ----

def test_connect_within_step():
    env = free_env()
    _, G = single(env, [5, 5])
    c = Counters()
    res = connect(G, np.array([5.3, 5.2]), env, STEP, RES, c)
    assert res.status is ExtendStatus.REACHED and c.extend_calls == 1


def test_connect_blocked_by_wall():
    r, wall_x = 0.25, 6.0
    env = Environment((0, 0, 10, 10), [Rect(wall_x, 0.0, 7.0, 10.0, "wall")], Disc(r))
    _, G = single(env, [1.0, 5.0])
    res = connect(G, np.array([9.0, 5.0]), env, STEP, RES)
    assert res.status is ExtendStatus.TRAPPED
    # free travel ends where the disc would touch the wall
    d_free = (wall_x - r) - 1.0
    assert len(G) - 1 == math.floor(d_free / STEP) == 9
    xs = sorted(G.points[:, 0])
    assert xs[-1] + r < wall_x


def test_connect_existing_vertex():
    env = free_env()
    _, G = single(env, [5, 5])
    res = connect(G, np.array([5.0, 5.0]), env, STEP, RES)
    assert res.status is ExtendStatus.REACHED and res.vertex == G.root and len(G) == 1


def test_connect_keeps_branches():
    env = free_env()
    _, G = single(env, [1, 1])
    connect(G, np.array([8.0, 8.0]), env, STEP, RES)
    n = len(G)
    assert n == 1 + math.ceil(math.hypot(7, 7) / STEP)
    assert sum(1 for _ in G.edges()) == n - 1


# ---- link / swap ----

def test_link_single_graph():
    env = free_env()
    RM, G = single(env, [5, 5])
    assert link(RM, G, G.root, env, STEP, RES) is LinkStatus.LINKED


def _connected(G):
    seen, todo = {G.root}, [G.root]
    while todo:
        u = todo.pop()
        for v in G.adj[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen == set(G.ids)


def test_link_two_graphs():
    env = free_env()
    RM = Roadmap(env.space)
    A = RM.new_graph(np.array([2.0, 2.0]), "cr")
    B = RM.new_graph(np.array([2.3, 2.2]), "cr")
    b_ids = list(B.ids)
    assert link(RM, A, A.root, env, STEP, RES) is LinkStatus.LINKED
    assert RM.graphs == [A] and _connected(A) and set(b_ids) <= set(A.ids)


def test_link_isolated_chambers():
    walls = [Rect(4.0, 0.0, 5.0, 5.0, "w1"), Rect(9.0, 0.0, 10.0, 5.0, "w2")]
    env = Environment((0, 0, 15, 5), walls, Disc(0.2))
    RM = Roadmap(env.space)
    A = RM.new_graph(np.array([2.0, 2.5]), "cr")
    RM.new_graph(np.array([7.0, 2.5]), "cr")
    RM.new_graph(np.array([12.0, 2.5]), "cr")
    assert link(RM, A, A.root, env, STEP, RES) is LinkStatus.ADVANCED
    assert len(RM) == 3


def test_link_connected_status():
    walls = [Rect(4.0, 0.0, 5.0, 5.0, "w1")]
    env = Environment((0, 0, 10, 5), walls, Disc(0.2))
    RM = Roadmap(env.space)
    A = RM.new_graph(np.array([1.0, 2.5]), "cr")
    RM.new_graph(np.array([2.0, 2.5]), "cr")
    RM.new_graph(np.array([7.0, 2.5]), "cr")
    assert link(RM, A, A.root, env, STEP, RES) is LinkStatus.CONNECTED
    assert len(RM) == 2 and _connected(A)


def test_swap_cycles():
    env = free_env()
    RM = Roadmap(env.space)
    A, B, C = (RM.new_graph(np.array([x, 5.0]), "cr") for x in (1.0, 5.0, 9.0))
    assert swap(RM, C) is A
    assert swap(RM, A) is B
    RM.graphs.remove(B)
    assert swap(RM, A) is C
    # a merged-away current graph hands over to the next survivor
    assert swap(RM, B) is C
    RM.graphs = [A]
    assert swap(RM, A) is A


def test_merged_total_counts():
    env = free_env()
    RM = Roadmap(env.space)
    A = RM.new_graph(np.array([2.0, 2.0]), "cr")
    RM.new_graph(np.array([4.0, 2.0]), "cr")
    link(RM, A, A.root, env, STEP, RES)
    # B steps 2 m toward A in four 0.5 m steps (the last lands on A's seed),
    # then is absorbed whole
    assert RM.merged_total_vertices == 5
    assert len(A) == RM.live_vertices() == RM.next_vertex_id == 6


# ---- shortest paths ----

def graph_from_edges(n, edges, space=None):
    space = space or CSpace((0.0,), (1.0,), (False,), (1.0,))
    RM = Roadmap(space)
    G = RM.new_graph(np.zeros(1), "cr")
    for i in range(1, n):
        G.add_vertex(np.array([i / n]), "steer")
    for u, v, w in edges:
        G.add_edge(u, v, w)
    return G


def test_path_to_self():
    G = graph_from_edges(3, [(0, 1, 1.0)])
    assert shortest_path_ids(G, 1, 1) == [1]
    assert len(shortest_path(G, 1, 1)) == 1


def test_triangle_prefers_two_edges():
    G = graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)])
    assert shortest_path_ids(G, 0, 2) == [0, 1, 2]


def test_unknown_vertex():
    G = graph_from_edges(2, [(0, 1, 1.0)])
    with pytest.raises(KeyError):
        shortest_path(G, 0, 7)
    with pytest.raises(KeyError):
        shortest_path(G, np.array([0.77]), 0)


def test_disconnected_empty():
    G = graph_from_edges(3, [(0, 1, 1.0)])
    assert shortest_path(G, 0, 2) == []


def random_graph(r, n, p=0.4, integer=False):
    edges = []
    for u, v in itertools.combinations(range(n), 2):
        if r.random() < p:
            w = int(r.integers(1, 10)) if integer else float(r.uniform(0.1, 5.0))
            edges.append((u, v, w))
    return edges


def brute_force(n, edges, s, t):
    adj = {u: {} for u in range(n)}
    for u, v, w in edges:
        adj[u][v] = adj[v][u] = w
    best = math.inf

    def walk(u, seen, d):
        nonlocal best
        if d >= best:
            return
        if u == t:
            best = d
            return
        for v, w in adj[u].items():
            if v not in seen:
                seen.add(v)
                walk(v, seen, d + w)
                seen.discard(v)

    walk(s, {s}, 0.0)
    return best


def bellman_ford(n, edges, s):
    d = [math.inf] * n
    d[s] = 0.0
    for _ in range(n - 1):
        for u, v, w in edges:
            for a, b in ((u, v), (v, u)):
                if d[a] + w < d[b]:
                    d[b] = d[a] + w
    return d


def _len(ids, edges):
    w = {}
    for u, v, x in edges:
        w[(u, v)] = w[(v, u)] = x
    return sum(w[(a, b)] for a, b in zip(ids, ids[1:]))


def test_dijkstra_vs_enumeration_10():
    r = make_rng(10)
    for _ in range(50):
        edges = random_graph(r, 10, integer=True)
        G = graph_from_edges(10, edges)
        ids = shortest_path_ids(G, 0, 9)
        best = brute_force(10, edges, 0, 9)
        if best == math.inf:
            assert ids == []
        else:
            assert _len(ids, edges) == best


def test_dijkstra_vs_bellman_ford():
    r = make_rng(20)
    for _ in range(200):
        n = int(r.integers(2, 13))
        edges = random_graph(r, n, p=float(r.uniform(0.15, 0.7)), integer=True)
        G = graph_from_edges(n, edges)
        d = bellman_ford(n, edges, 0)
        for t in range(n):
            ids = shortest_path_ids(G, 0, t)
            if d[t] == math.inf:
                assert ids == []
            else:
                assert ids[0] == 0 and ids[-1] == t
                assert _len(ids, edges) == d[t]


def test_dijkstra_ties_lowest_id():
    # two equal-length routes 0-1-3 and 0-2-3; the heap pops id 1 first
    nbrs = {0: [(2, 1.0), (1, 1.0)], 1: [(0, 1.0), (3, 1.0)], 2: [(0, 1.0), (3, 1.0)], 3: [(1, 1.0), (2, 1.0)]}
    assert dijkstra(lambda u: nbrs[u], 0, 3) == [0, 1, 3]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7), st.floats(0.01, 10)), max_size=20))
def test_dijkstra_property(raw):
    edges = [(u, v, w) for u, v, w in raw if u != v]
    G = graph_from_edges(8, edges)
    d = bellman_ford(8, [(u, v, G.adj[u][v]) for u, v, _ in edges], 0)
    ids = shortest_path_ids(G, 0, 7)
    if d[7] == math.inf:
        assert ids == []
    else:
        got = sum(G.adj[a][b] for a, b in zip(ids, ids[1:]))
        assert got == pytest.approx(d[7], rel=1e-12, abs=1e-12)


def test_path_length():
    sp = CSpace((0, 0), (10, 10), (False, False), (1, 1))
    assert path_length([np.zeros(2), np.array([3.0, 4.0]), np.array([3.0, 5.0])], sp) == 6.0
