"""Subgraph forest shared by every planner.

A :class:`Roadmap` is an ordered list of live :class:`Subgraph` objects.
Vertex ids are unique across the whole roadmap, so graphs can be merged
without renumbering.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .collision import Environment, edge_collision_free
from .geometry import CSpace, distance, steer

ORIGINS = ("cr", "uniform", "start", "goal", "steer")


class ExtendStatus(enum.Enum):
    TRAPPED = "Trapped"
    ADVANCED = "Advanced"
    REACHED = "Reached"


class LinkStatus(enum.Enum):
    LINKED = "Linked"
    CONNECTED = "Connected"
    ADVANCED = "Advanced"


@dataclass
class Counters:
    samples: int = 0
    extend_calls: int = 0
    connect_calls: int = 0


@dataclass
class ExtendResult:
    status: ExtendStatus
    vertex: int | None = None        # id of q_new, None when trapped

    def __bool__(self):
        return self.status is not ExtendStatus.TRAPPED


class Subgraph:
    """Connected graph grown from one seed configuration."""

    def __init__(self, gid: int, space: CSpace, alloc: Callable[[], int]):
        self.id = gid
        self.space = space
        self._alloc = alloc
        self._pts = np.empty((16, space.dims))
        self.ids: list[int] = []
        self.origins: list[str] = []
        self.row: dict[int, int] = {}
        self.adj: dict[int, dict[int, float]] = {}
        self.root: int | None = None

    def __len__(self):
        return len(self.ids)

    def __contains__(self, vid):
        return vid in self.row

    def __repr__(self):
        return f"Subgraph(id={self.id}, vertices={len(self)}, root={self.root})"

    @property
    def points(self) -> np.ndarray:
        return self._pts[:len(self.ids)]

    def vertex(self, vid: int) -> np.ndarray:
        return self._pts[self.row[vid]]

    def add_vertex(self, q, origin: str = "steer", vid: int | None = None) -> int:
        if vid is None:
            vid = self._alloc()
        n = len(self.ids)
        if n == len(self._pts):
            self._pts = np.concatenate([self._pts, np.empty_like(self._pts)])
        self._pts[n] = q
        self.ids.append(vid)
        self.origins.append(origin)
        self.row[vid] = n
        self.adj[vid] = {}
        if self.root is None:
            self.root = vid
        return vid

    def add_edge(self, u: int, v: int, length: float | None = None):
        if length is None:
            length = distance(self.vertex(u), self.vertex(v), self.space)
        self.adj[u][v] = length
        self.adj[v][u] = length

    def edges(self) -> Iterable[tuple[int, int, float]]:
        for u in self.ids:
            for v, w in self.adj[u].items():
                if u < v:
                    yield u, v, w

    def nearest(self, q) -> tuple[int, float]:
        """Closest vertex to ``q``; ties go to the lowest vertex id."""
        d = self.space.distances(self.points, q)
        best = d.min()
        rows = np.flatnonzero(d == best)
        if len(rows) == 1:
            return self.ids[rows[0]], float(best)
        return min(self.ids[r] for r in rows), float(best)

    def absorb(self, other: "Subgraph"):
        """Take over every vertex and edge of ``other``."""
        n, k = len(self.ids), len(other.ids)
        if n + k > len(self._pts):
            cap = max(2 * len(self._pts), n + k)
            grown = np.empty((cap, self.space.dims))
            grown[:n] = self.points
            self._pts = grown
        self._pts[n:n + k] = other.points
        for i, vid in enumerate(other.ids):
            self.row[vid] = n + i
        self.ids.extend(other.ids)
        self.origins.extend(other.origins)
        self.adj.update(other.adj)


class Roadmap:
    """Ordered list of live subgraphs plus the global id counters."""

    def __init__(self, space: CSpace):
        self.space = space
        self.graphs: list[Subgraph] = []
        self.next_vertex_id = 0
        self.next_graph_id = 0
        self.merged_total_vertices = 0

    def __len__(self):
        return len(self.graphs)

    def _alloc(self) -> int:
        vid = self.next_vertex_id
        self.next_vertex_id += 1
        return vid

    def new_graph(self, q, origin: str) -> Subgraph:
        g = Subgraph(self.next_graph_id, self.space, self._alloc)
        self.next_graph_id += 1
        g.add_vertex(q, origin)
        self.graphs.append(g)
        return g

    def live_vertices(self) -> int:
        return sum(len(g) for g in self.graphs)

    def find(self, vid: int) -> Subgraph | None:
        for g in self.graphs:
            if vid in g:
                return g
        return None

    def link_and_remove(self, merged: list[tuple[Subgraph, int]], curr: Subgraph, q_new: int):
        """Fold each ``(graph, joint vertex)`` into ``curr`` through ``q_new``."""
        for g, joint in merged:
            curr.absorb(g)
            curr.add_edge(q_new, joint)
            self.merged_total_vertices += len(g)
        gone = {id(g) for g, _ in merged}
        self.graphs = [g for g in self.graphs if id(g) not in gone]


# ---------------------------------------------------------------------------
# steering
# ---------------------------------------------------------------------------

def extend(G: Subgraph, q_target, env: Environment, step: float, resolution: float,
           counters: Counters | None = None, near: int | None = None) -> ExtendResult:
    """One steering step of ``G`` toward ``q_target``.

    ``near`` skips the nearest-neighbour scan when the caller already knows it.
    """
    if counters is not None:
        counters.extend_calls += 1
    if near is None:
        near, d = G.nearest(q_target)
        if d == 0.0:
            return ExtendResult(ExtendStatus.REACHED, near)
    q_near = G.vertex(near)
    q_new, reached = steer(q_near, q_target, step, G.space)
    if not edge_collision_free(q_near, q_new, env, resolution):
        return ExtendResult(ExtendStatus.TRAPPED)
    vid = G.add_vertex(q_new, "steer")
    G.add_edge(near, vid)
    return ExtendResult(ExtendStatus.REACHED if reached else ExtendStatus.ADVANCED, vid)


def connect(G: Subgraph, q, env: Environment, step: float, resolution: float,
            counters: Counters | None = None) -> ExtendResult:
    """Extend ``G`` toward ``q`` until it gets there or is blocked.

    Every vertex added on the way stays in ``G``. The result carries the
    vertex that coincides with ``q`` when reached.
    """
    if counters is not None:
        counters.connect_calls += 1
    res = extend(G, q, env, step, resolution, counters)
    last = res.vertex
    while res.status is ExtendStatus.ADVANCED:
        # the vertex just added is strictly the closest one to q
        res = extend(G, q, env, step, resolution, counters, near=last)
        last = res.vertex if res else last
    if res.status is ExtendStatus.REACHED:
        return res
    return ExtendResult(ExtendStatus.TRAPPED, None)


def link(RM: Roadmap, curr: Subgraph, q_new: int, env: Environment, step: float,
         resolution: float, counters: Counters | None = None,
         observer: Callable[[dict], None] | None = None) -> LinkStatus:
    """Try to join every other live graph to ``curr`` at vertex ``q_new``."""
    before = len(RM.graphs)
    q = curr.vertex(q_new).copy()
    reached = []
    for g in list(RM.graphs):
        if g is curr:
            continue
        res = connect(g, q, env, step, resolution, counters)
        if res.status is ExtendStatus.REACHED:
            reached.append((g, res.vertex))
    absorbed = [g.id for g, _ in reached]
    absorbed_vertices = [list(g.ids) for g, _ in reached]
    RM.link_and_remove(reached, curr, q_new)
    if len(RM.graphs) == 1:
        status = LinkStatus.LINKED
    elif reached:
        status = LinkStatus.CONNECTED
    else:
        status = LinkStatus.ADVANCED
    if observer is not None:
        observer({
            "status": status,
            "live_before": before,
            "live_after": len(RM.graphs),
            "curr": curr,
            "absorbed": absorbed,
            "absorbed_vertices": absorbed_vertices,
            "live_vertices": RM.live_vertices(),
            "merged_total": RM.merged_total_vertices,
        })
    return status


def swap(RM: Roadmap, curr: Subgraph) -> Subgraph:
    """Round-robin: the live graph after ``curr``, wrapping around."""
    graphs = RM.graphs
    if not graphs:
        raise ValueError("roadmap has no live graphs")
    for i, g in enumerate(graphs):
        if g is curr:
            return graphs[(i + 1) % len(graphs)]
    # curr was merged away: continue from the next graph that outlived it
    later = [g for g in graphs if g.id > curr.id]
    return later[0] if later else graphs[0]


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------

def dijkstra(neighbors: Callable[[int], Iterable[tuple[int, float]]], src: int, dst: int) -> list[int]:
    """Vertex-id sequence of a minimum-length ``src -> dst`` path, ``[]`` if none."""
    dist = {src: 0.0}
    prev: dict[int, int] = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for v, w in neighbors(u):
            nd = d + w
            if v not in done and (v not in dist or nd < dist[v]):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if dst not in done:
        return []
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def _vertex_id(G: Subgraph, v) -> int:
    if isinstance(v, (int, np.integer)):
        if int(v) not in G:
            raise KeyError(f"vertex {v} is not in subgraph {G.id}")
        return int(v)
    q = np.asarray(v, dtype=float)
    hits = np.flatnonzero((G.points == q).all(axis=1))
    if len(hits) == 0:
        raise KeyError(f"configuration {q} is not a vertex of subgraph {G.id}")
    return min(G.ids[r] for r in hits)


def shortest_path_ids(G: Subgraph, u, v) -> list[int]:
    src, dst = _vertex_id(G, u), _vertex_id(G, v)
    return dijkstra(lambda x: G.adj[x].items(), src, dst)


def shortest_path(G: Subgraph, u, v) -> list[np.ndarray]:
    """Minimum-length configuration sequence between two vertices of ``G``.

    ``u`` and ``v`` are vertex ids or vertex configurations. Repeated
    configurations from zero-length joint edges are collapsed.
    """
    ids = shortest_path_ids(G, u, v)
    path: list[np.ndarray] = []
    for vid in ids:
        q = G.vertex(vid).copy()
        if path and np.array_equal(path[-1], q):
            continue
        path.append(q)
    return path


def path_length(path, space: CSpace) -> float:
    return float(sum(distance(a, b, space) for a, b in zip(path, path[1:])))
