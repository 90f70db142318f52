"""Robots, environments and exact 2-D collision checking.

Everything is reduced to convex polygons: non-convex obstacles and
footprints are ear-clipped into triangles once, at construction. Batches of
configurations are checked at once with a separating-axis test written over
numpy arrays, which keeps per-edge validation cheap enough for pure-Python
planners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .geometry import CSpace, interpolate_many, distance


class InvalidEnvironment(ValueError):
    """Bad environment description; ``where`` locates the offending part."""

    def __init__(self, message: str, where: tuple = ()):
        super().__init__(message)
        self.where = where


# ---------------------------------------------------------------------------
# polygon helpers
# ---------------------------------------------------------------------------

def signed_area(pts) -> float:
    p = np.asarray(pts, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True

    def on_seg(p, q, r):
        return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
                and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))

    return ((d1 == 0 and on_seg(p3, p4, p1)) or (d2 == 0 and on_seg(p3, p4, p2))
            or (d3 == 0 and on_seg(p1, p2, p3)) or (d4 == 0 and on_seg(p1, p2, p4)))


def is_simple_polygon(pts) -> bool:
    p = [tuple(map(float, v)) for v in pts]
    n = len(p)
    if n < 3 or abs(signed_area(p)) <= 0.0:
        return False
    for i in range(n):
        a1, a2 = p[i], p[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_intersect(a1, a2, p[j], p[(j + 1) % n]):
                return False
    return True


def is_convex(pts) -> bool:
    p = np.asarray(pts, dtype=float)
    n = len(p)
    sign = 0
    for i in range(n):
        c = _cross(p[i], p[(i + 1) % n], p[(i + 2) % n])
        if c != 0:
            s = 1 if c > 0 else -1
            if sign and s != sign:
                return False
            sign = s
    return True


def _point_in_triangle(p, a, b, c) -> bool:
    return _cross(a, b, p) >= 0 and _cross(b, c, p) >= 0 and _cross(c, a, p) >= 0


def convex_pieces(pts) -> list[np.ndarray]:
    """Split a simple polygon into counter-clockwise convex pieces.

    Convex input is returned as a single piece; otherwise ear clipping.
    """
    p = np.asarray(pts, dtype=float)
    if signed_area(p) < 0:
        p = p[::-1]
    if is_convex(p):
        return [p.copy()]
    idx = list(range(len(p)))
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 10 * len(p) ** 2:
        guard += 1
        n = len(idx)
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = p[i0], p[i1], p[i2]
            if _cross(a, b, c) <= 0:
                continue
            if any(_point_in_triangle(p[j], a, b, c) for j in idx if j not in (i0, i1, i2)):
                continue
            tris.append(np.array([a, b, c]))
            del idx[k]
            break
        else:
            raise InvalidEnvironment("polygon could not be triangulated")
    tris.append(p[idx].copy())
    return tris


def _pad(pieces: Sequence[np.ndarray]) -> np.ndarray:
    """Stack polygons into ``(k, w, 2)`` by repeating each last vertex.

    A repeated vertex yields a zero-length edge whose zero axis never
    separates anything, so SAT stays exact.
    """
    if not pieces:
        return np.zeros((0, 3, 2))
    w = max(len(q) for q in pieces)
    out = np.empty((len(pieces), w, 2))
    for i, q in enumerate(pieces):
        out[i, :len(q)] = q
        out[i, len(q):] = q[-1]
    return out


def _edge_normals(poly: np.ndarray) -> np.ndarray:
    e = np.roll(poly, -1, axis=-2) - poly
    return np.stack([e[..., 1], -e[..., 0]], axis=-1)


# ---------------------------------------------------------------------------
# robots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disc:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidEnvironment("disc radius must be positive")

    @property
    def char_radius(self) -> float:
        return self.radius


@dataclass(frozen=True)
class PolygonRobot:
    """Rigid footprint in the body frame; configurations are ``(x, y, theta)``."""

    vertices: tuple[tuple[float, float], ...]
    pieces: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vs = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", vs)
        if not is_simple_polygon(vs):
            raise InvalidEnvironment("robot footprint must be a simple polygon")
        object.__setattr__(self, "pieces", _pad(convex_pieces(vs)))

    @property
    def char_radius(self) -> float:
        p = np.array(self.vertices)
        return 0.5 * float(min(np.ptp(p[:, 0]), np.ptp(p[:, 1])))


@dataclass(frozen=True)
class PlanarChain:
    """Translating base footprint with a serial chain of rectangular links.

    Configurations are ``(x, y, q1, ..., qk)``; link ``i`` points along the
    cumulative angle ``q1 + ... + qi`` and is anchored at the base position.
    """

    base: tuple[tuple[float, float], ...]
    lengths: tuple[float, ...]
    widths: tuple[float, ...]
    base_pieces: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        base = tuple((float(x), float(y)) for x, y in self.base)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        object.__setattr__(self, "widths", tuple(float(v) for v in self.widths))
        if not is_simple_polygon(base):
            raise InvalidEnvironment("chain base footprint must be a simple polygon")
        if len(self.lengths) == 0 or len(self.lengths) != len(self.widths):
            raise InvalidEnvironment("chain needs matching, non-empty link lengths and widths")
        if min(self.lengths) <= 0 or min(self.widths) <= 0:
            raise InvalidEnvironment("link lengths and widths must be positive")
        object.__setattr__(self, "base_pieces", _pad(convex_pieces(base)))

    @property
    def n_links(self) -> int:
        return len(self.lengths)

    @property
    def char_radius(self) -> float:
        p = np.array(self.base)
        base = 0.5 * float(min(np.ptp(p[:, 0]), np.ptp(p[:, 1])))
        return min(base, 0.5 * min(self.widths))


Robot = Union[Disc, PolygonRobot, PlanarChain]


def _chain_links(robot: PlanarChain, Q: np.ndarray) -> np.ndarray:
    """Link rectangles for a batch of configurations, shape ``(m, k, 4, 2)``."""
    k = robot.n_links
    phi = np.cumsum(Q[:, 2:2 + k], axis=1)
    c, s = np.cos(phi), np.sin(phi)
    lengths = np.asarray(robot.lengths)
    half = 0.5 * np.asarray(robot.widths)
    step = np.stack([c * lengths, s * lengths], axis=-1)           # (m, k, 2)
    tips = Q[:, None, :2] + np.cumsum(step, axis=1)
    roots = np.concatenate([Q[:, None, :2], tips[:, :-1]], axis=1)
    off = np.stack([-s * half, c * half], axis=-1)
    return np.stack([roots - off, tips - off, tips + off, roots + off], axis=2)


def chain_forward_kinematics(robot: PlanarChain, q) -> list[np.ndarray]:
    """Corner lists (counter-clockwise) of every link rectangle at ``q``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (2 + robot.n_links,):
        raise ValueError(f"chain with {robot.n_links} links needs {2 + robot.n_links} values, got {q.shape}")
    return list(_chain_links(robot, q[None, :])[0])


def robot_polygons(robot: Robot, Q: np.ndarray) -> np.ndarray:
    """Convex footprint pieces for each row of ``Q``, shape ``(m, p, v, 2)``."""
    if isinstance(robot, PolygonRobot):
        c, s = np.cos(Q[:, 2]), np.sin(Q[:, 2])
        b = robot.pieces                                              # (p, v, 2)
        x = c[:, None, None] * b[None, ..., 0] - s[:, None, None] * b[None, ..., 1]
        y = s[:, None, None] * b[None, ..., 0] + c[:, None, None] * b[None, ..., 1]
        return np.stack([x + Q[:, 0, None, None], y + Q[:, 1, None, None]], axis=-1)
    if isinstance(robot, PlanarChain):
        base = robot.base_pieces[None] + Q[:, None, None, :2]
        links = _chain_links(robot, Q)
        w = max(base.shape[2], 4)
        if base.shape[2] < w:
            base = np.concatenate([base, np.repeat(base[:, :, -1:], w - base.shape[2], axis=2)], axis=2)
        if links.shape[2] < w:
            links = np.concatenate([links, np.repeat(links[:, :, -1:], w - 4, axis=2)], axis=2)
        return np.concatenate([base, links], axis=1)
    raise TypeError(f"{type(robot).__name__} has no polygonal footprint")


# ---------------------------------------------------------------------------
# environment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    name: str = ""

    def corners(self) -> np.ndarray:
        return np.array([[self.xmin, self.ymin], [self.xmax, self.ymin],
                         [self.xmax, self.ymax], [self.xmin, self.ymax]], dtype=float)


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]
    name: str = ""

    def corners(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)


Obstacle = Union[Rect, Polygon]


class Environment:
    """Workspace rectangle, obstacle set and robot model. Immutable."""

    def __init__(self, workspace, obstacles: Sequence[Obstacle], robot: Robot,
                 corridor_width: float | None = None, name: str = "",
                 start=None, goal=None):
        self.workspace = tuple(float(v) for v in workspace)
        self.obstacles = tuple(obstacles)
        self.robot = robot
        self.corridor_width = None if corridor_width is None else float(corridor_width)
        self.name = name
        self._validate()
        xmin, ymin, xmax, ymax = self.workspace
        if isinstance(robot, PolygonRobot):
            self.space = CSpace.se2(xmin, ymin, xmax, ymax)
        elif isinstance(robot, PlanarChain):
            self.space = CSpace.planar(xmin, ymin, xmax, ymax, robot.n_links)
        else:
            self.space = CSpace.planar(xmin, ymin, xmax, ymax)
        self.start = None if start is None else self.space.config(start)
        self.goal = None if goal is None else self.space.config(goal)

        rects = [o for o in self.obstacles if isinstance(o, Rect)]
        pieces = []
        for o in self.obstacles:
            if isinstance(o, Polygon):
                pieces.extend(convex_pieces(o.vertices))
        self._rects = np.array([[r.xmin, r.ymin, r.xmax, r.ymax] for r in rects], dtype=float).reshape(-1, 4)
        self._pieces = _pad(pieces)
        # every obstacle as convex polygons, for polygonal robots
        all_pieces = [r.corners() for r in rects] + pieces
        self._all = _pad(all_pieces)
        self._all_axes = _edge_normals(self._all)
        proj = np.einsum("kwc,kuc->kuw", self._all, self._all_axes)
        self._all_min = proj.min(-1)
        self._all_max = proj.max(-1)

    def _validate(self):
        xmin, ymin, xmax, ymax = self.workspace
        if not (xmin < xmax and ymin < ymax):
            raise InvalidEnvironment("workspace must have positive extent", ("workspace",))
        if self.corridor_width is not None and not self.corridor_width > 0:
            raise InvalidEnvironment("corridor_width must be positive", ("corridor_width",))
        for i, o in enumerate(self.obstacles):
            label = f"obstacle {i}" + (f" '{o.name}'" if o.name else "")
            if isinstance(o, Rect):
                if not (o.xmin < o.xmax and o.ymin < o.ymax):
                    raise InvalidEnvironment(f"{label}: rectangle must have positive extent", ("obstacles", i))
            elif not is_simple_polygon(o.vertices):
                raise InvalidEnvironment(f"{label}: polygon is not simple", ("obstacles", i))
            c = o.corners()
            if c[:, 0].min() < xmin or c[:, 0].max() > xmax or c[:, 1].min() < ymin or c[:, 1].max() > ymax:
                raise InvalidEnvironment(f"{label} lies outside the workspace", ("obstacles", i))

    def __eq__(self, other):
        return (isinstance(other, Environment) and self.workspace == other.workspace
                and self.obstacles == other.obstacles and self.robot == other.robot
                and self.corridor_width == other.corridor_width and self.name == other.name
                and _same(self.start, other.start) and _same(self.goal, other.goal))

    __hash__ = None

    def default_resolution(self) -> float:
        """Edge validation spacing: a quarter of the smallest clearance scale."""
        scale = self.robot.char_radius
        if self.corridor_width is not None:
            scale = min(scale, self.corridor_width)
        return 0.25 * scale

    def default_step(self) -> float:
        """Steering step: a twentieth of the workspace diagonal."""
        xmin, ymin, xmax, ymax = self.workspace
        return math.hypot(xmax - xmin, ymax - ymin) / 20.0

    def with_query(self, start, goal) -> "Environment":
        return Environment(self.workspace, self.obstacles, self.robot, self.corridor_width,
                           self.name, start, goal)


def _same(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return bool(np.array_equal(a, b))


# ---------------------------------------------------------------------------
# collision queries
# ---------------------------------------------------------------------------

def _disc_hits(env: Environment, C: np.ndarray, r: float) -> np.ndarray:
    xmin, ymin, xmax, ymax = env.workspace
    hit = ((C[:, 0] - r < xmin) | (C[:, 0] + r > xmax)
           | (C[:, 1] - r < ymin) | (C[:, 1] + r > ymax))
    r2 = r * r
    if len(env._rects):
        R = env._rects
        dx = np.maximum(np.maximum(R[None, :, 0] - C[:, 0, None], 0.0), C[:, 0, None] - R[None, :, 2])
        dy = np.maximum(np.maximum(R[None, :, 1] - C[:, 1, None], 0.0), C[:, 1, None] - R[None, :, 3])
        hit |= (dx * dx + dy * dy <= r2).any(axis=1)
    if len(env._pieces):
        P = env._pieces                                               # (k, w, 2)
        E = np.roll(P, -1, axis=1) - P
        rel = C[:, None, None, :] - P[None]                           # (m, k, w, 2)
        cross = E[None, ..., 0] * rel[..., 1] - E[None, ..., 1] * rel[..., 0]
        inside = (cross >= 0).all(axis=2)
        len2 = np.einsum("kwc,kwc->kw", E, E)
        t = np.einsum("mkwc,kwc->mkw", rel, E) / np.where(len2 > 0, len2, 1.0)
        t = np.clip(t, 0.0, 1.0)
        d = rel - t[..., None] * E[None]
        near = (np.einsum("mkwc,mkwc->mkw", d, d) <= r2).any(axis=2)
        hit |= (inside | near).any(axis=1)
    return hit


def _polygon_hits(env: Environment, R: np.ndarray) -> np.ndarray:
    xmin, ymin, xmax, ymax = env.workspace
    x, y = R[..., 0], R[..., 1]
    hit = ((x < xmin) | (x > xmax) | (y < ymin) | (y > ymax)).reshape(len(R), -1).any(axis=1)
    if len(env._all) == 0:
        return hit
    O, A = env._all, env._all_axes
    pr = np.einsum("mpvc,kwc->mpkwv", R, A)
    sep = ((pr.max(-1) < env._all_min) | (env._all_max < pr.min(-1))).any(-1)    # (m, p, k)
    RA = _edge_normals(R)                                                       # (m, p, v, 2)
    po = np.einsum("kwc,mpvc->mpvkw", O, RA)
    own = np.einsum("mpuc,mpvc->mpvu", R, RA)
    sep |= ((own.max(-1)[..., None] < po.min(-1)) | (po.max(-1) < own.min(-1)[..., None])).any(2)
    return hit | (~sep).any(axis=(1, 2))


def collision_free_many(env: Environment, Q) -> np.ndarray:
    """Boolean validity of every row of ``Q``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if isinstance(env.robot, Disc):
        return ~_disc_hits(env, Q[:, :2], env.robot.radius)
    return ~_polygon_hits(env, robot_polygons(env.robot, Q))


def is_collision_free(q, env: Environment) -> bool:
    return bool(collision_free_many(env, np.asarray(q, dtype=float)[None, :])[0])


def edge_checkpoints(a, b, env: Environment, resolution: float) -> np.ndarray:
    """Points checked along ``a -> b``: endpoints plus a spacing of at most ``resolution``."""
    d = distance(a, b, env.space)
    n = max(1, int(math.ceil(d / resolution)))
    return interpolate_many(a, b, np.arange(n + 1) / n, env.space)


def edge_collision_free(a, b, env: Environment, resolution: float) -> bool:
    """Resolution-complete validation of the straight segment ``a -> b``."""
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # canonical order makes the check exactly symmetric
    if tuple(b) < tuple(a):
        a, b = b, a
    return bool(collision_free_many(env, edge_checkpoints(a, b, env, resolution)).all())


def cell_occupancy(env: Environment, corners: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """True where an axis-aligned cell (rows of ``xmin, ymin, xmax, ymax``) touches an obstacle."""
    out = np.zeros(len(corners), dtype=bool)
    if len(env._all) == 0:
        return out
    for s in range(0, len(corners), chunk):
        c = corners[s:s + chunk]
        sq = np.stack([c[:, [0, 1]], c[:, [2, 1]], c[:, [2, 3]], c[:, [0, 3]]], axis=1)[:, None]
        O, A = env._all, env._all_axes
        pr = np.einsum("mpvc,kwc->mpkwv", sq, A)
        sep = ((pr.max(-1) < env._all_min) | (env._all_max < pr.min(-1))).any(-1)
        RA = _edge_normals(sq)
        po = np.einsum("kwc,mpvc->mpvkw", O, RA)
        own = np.einsum("mpuc,mpvc->mpvu", sq, RA)
        sep |= ((own.max(-1)[..., None] < po.min(-1)) | (po.max(-1) < own.min(-1)[..., None])).any(2)
        out[s:s + chunk] = (~sep).any(axis=(1, 2))
    return out
