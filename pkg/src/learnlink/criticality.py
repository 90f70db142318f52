"""Critical regions estimated from observed motion plans.

The criticality of a workspace cell is the fraction of plans whose base
trace passes through it, divided by the cell's share of the workspace area.
Smoothing and top-quantile binning turn the estimate into a binary mask,
which is what the planners consume as critical regions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .collision import Environment, cell_occupancy, collision_free_many
from .geometry import CSpace, sample_uniform
from .planners import BuildParams, PlanResult, sample_free, validate_path, seed_count

log = logging.getLogger(__name__)

DEFAULT_SIZE = 224
DEFAULT_SIGMA = 1.0
DEFAULT_QUANTILE = 0.10
SEED_ATTEMPTS = 100
CELL_PICKS = 100


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    workspace: tuple[float, float, float, float]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        xmin, ymin, xmax, ymax = self.workspace
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("grid workspace must have positive extent")

    @classmethod
    def for_env(cls, env: Environment, width: int = DEFAULT_SIZE, height: int | None = None) -> "GridSpec":
        return cls(width, width if height is None else height, env.workspace)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @property
    def cell_size(self) -> tuple[float, float]:
        xmin, ymin, xmax, ymax = self.workspace
        return (xmax - xmin) / self.width, (ymax - ymin) / self.height

    @property
    def cell_fraction(self) -> float:
        """Share of the workspace area covered by one cell."""
        return 1.0 / (self.width * self.height)

    def to_grid(self, xy: np.ndarray) -> np.ndarray:
        """Continuous (column, row) coordinates; row 0 is the top (max-y) edge."""
        xmin, ymin, xmax, ymax = self.workspace
        cw, ch = self.cell_size
        xy = np.asarray(xy, dtype=float)
        return np.stack([(xy[..., 0] - xmin) / cw, (ymax - xy[..., 1]) / ch], axis=-1)

    def cells_of(self, xy: np.ndarray) -> np.ndarray:
        """Integer ``(row, col)`` of the cells containing each point."""
        uv = self.to_grid(xy)
        col = np.clip(np.floor(uv[..., 0]).astype(int), 0, self.width - 1)
        row = np.clip(np.floor(uv[..., 1]).astype(int), 0, self.height - 1)
        return np.stack([row, col], axis=-1)

    def centers(self, rows, cols) -> np.ndarray:
        xmin, ymin, xmax, ymax = self.workspace
        cw, ch = self.cell_size
        return np.stack([xmin + (np.asarray(cols) + 0.5) * cw,
                         ymax - (np.asarray(rows) + 0.5) * ch], axis=-1)

    def bounds(self) -> np.ndarray:
        """Rows of ``xmin, ymin, xmax, ymax`` for every cell in row-major order."""
        xmin, ymin, xmax, ymax = self.workspace
        cw, ch = self.cell_size
        rows, cols = np.divmod(np.arange(self.width * self.height), self.width)
        x0 = xmin + cols * cw
        y1 = ymax - rows * ch
        return np.stack([x0, y1 - ch, x0 + cw, y1], axis=1)


@dataclass
class CriticalityGrid:
    spec: GridSpec
    mu: np.ndarray
    plan_count: int
    counts: np.ndarray | None = None


@dataclass
class CriticalMask:
    spec: GridSpec
    bits: np.ndarray

    @property
    def points(self) -> np.ndarray:
        """Cell centres of the set cells, row-major."""
        rows, cols = np.nonzero(self.bits)
        return self.spec.centers(rows, cols)

    @property
    def area_fraction(self) -> float:
        return float(self.bits.sum()) / self.bits.size

    def __len__(self):
        return int(self.bits.sum())


@dataclass
class MotionPlanSet:
    plans: list[np.ndarray]
    env_id: str = ""
    problems: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def __len__(self):
        return len(self.plans)


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

def _segment_cells(uv0: np.ndarray, uv1: np.ndarray) -> np.ndarray:
    """Floor cells of every point of a segment given in grid coordinates.

    Between consecutive grid-line crossings the cell is constant, so the
    crossings themselves plus one midpoint per gap cover the whole set.
    """
    d = uv1 - uv0
    ts = [np.array([0.0, 1.0])]
    pts = [uv0[None], uv1[None]]
    for axis in (0, 1):
        if d[axis] == 0.0:
            continue
        lo, hi = sorted((uv0[axis], uv1[axis]))
        ks = np.arange(math.floor(lo) + 1, math.ceil(hi), dtype=float)
        if len(ks) == 0:
            continue
        t = (ks - uv0[axis]) / d[axis]
        p = uv0 + t[:, None] * d
        p[:, axis] = ks
        other = p[:, 1 - axis]
        snap = np.abs(other - np.round(other)) < 1e-12
        other[snap] = np.round(other[snap])
        ts.append(t)
        pts.append(p)
    t = np.unique(np.concatenate(ts))
    mids = uv0 + (0.5 * (t[:-1] + t[1:]))[:, None] * d
    return np.floor(np.concatenate(pts + [mids])).astype(int)


def rasterize_trace(path, spec: GridSpec) -> set[tuple[int, int]]:
    """Every cell the polyline through the path's base positions passes through.

    Cells are half-open in grid coordinates, so a point on a shared edge or
    corner belongs to exactly one cell. A segment through a grid corner
    therefore adds the cell owning that corner point, and nothing else.
    """
    xy = np.asarray([np.asarray(q, dtype=float)[:2] for q in path])
    if len(xy) == 0:
        raise ValueError("cannot rasterize an empty path")
    uv = spec.to_grid(xy)
    chunks = [np.floor(uv[:1]).astype(int)]
    for a, b in zip(uv, uv[1:]):
        chunks.append(_segment_cells(a, b))
    cells = np.concatenate(chunks)
    cols = np.clip(cells[:, 0], 0, spec.width - 1)
    rows = np.clip(cells[:, 1], 0, spec.height - 1)
    return set(zip(rows.tolist(), cols.tolist()))


def plan_counts(plans: MotionPlanSet | Sequence, spec: GridSpec) -> np.ndarray:
    """Number of plans touching each cell (a plan counts once per cell)."""
    counts = np.zeros(spec.shape, dtype=np.int64)
    for path in getattr(plans, "plans", plans):
        cells = rasterize_trace(path, spec)
        if cells:
            r, c = np.array(list(cells)).T
            counts[r, c] += 1
    return counts


def estimate_mu(plans: MotionPlanSet | Sequence, spec: GridSpec) -> CriticalityGrid:
    paths = getattr(plans, "plans", plans)
    if len(paths) == 0:
        raise ValueError("need at least one plan")
    counts = plan_counts(paths, spec)
    f = counts / len(paths)
    return CriticalityGrid(spec, f / spec.cell_fraction, len(paths), counts)


def _gauss(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    return np.exp(-0.5 * (x / sigma) ** 2)


def smooth(grid: CriticalityGrid, sigma: float) -> CriticalityGrid:
    """Gaussian blur truncated at 3 sigma; border cells keep their full mass.

    Each source cell spreads its value over the in-bounds part of its kernel
    only, so the total is preserved exactly up to rounding.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return CriticalityGrid(grid.spec, grid.mu.copy(), grid.plan_count, grid.counts)
    k = _gauss(sigma)
    norm = ndimage.correlate1d(np.ones(grid.mu.shape[0]), k, mode="constant")[:, None] * \
        ndimage.correlate1d(np.ones(grid.mu.shape[1]), k, mode="constant")[None, :]
    out = grid.mu / norm
    out = ndimage.correlate1d(out, k, axis=0, mode="constant")
    out = ndimage.correlate1d(out, k, axis=1, mode="constant")
    np.maximum(out, 0.0, out=out)
    return CriticalityGrid(grid.spec, out, grid.plan_count, grid.counts)


def binarize(grid: CriticalityGrid, q: float = DEFAULT_QUANTILE) -> CriticalMask:
    """Keep the top ``q`` share of positive cells, ties at the threshold included."""
    if not 0.0 < q < 1.0:
        raise ValueError("quantile must lie in (0, 1)")
    positive = grid.mu > 0
    vals = grid.mu[positive]
    if len(vals) == 0:
        raise ValueError("grid has no positive cells; no plans were observed")
    k = min(len(vals), max(1, int(math.ceil(q * len(vals)))))
    thr = np.sort(vals)[::-1][k - 1]
    return CriticalMask(grid.spec, positive & (grid.mu >= thr))


def score_region(mask: CriticalMask, heldout: MotionPlanSet | Sequence) -> float:
    """Criticality of the masked region measured on held-out plans."""
    paths = getattr(heldout, "plans", heldout)
    if len(paths) == 0:
        raise ValueError("need held-out plans")
    area = mask.area_fraction
    if area == 0:
        raise ValueError("mask is empty")
    hits = 0
    for path in paths:
        cells = rasterize_trace(path, mask.spec)
        r, c = np.array(list(cells)).T
        hits += bool(mask.bits[r, c].any())
    return (hits / len(paths)) / area


def shifted_mask(mask: CriticalMask, rng: np.random.Generator) -> CriticalMask:
    """Same cells cyclically translated by a random offset: equal area and shape."""
    dr = int(rng.integers(mask.spec.height))
    dc = int(rng.integers(mask.spec.width))
    return CriticalMask(mask.spec, np.roll(mask.bits, (dr, dc), axis=(0, 1)))


def obstacle_raster(env: Environment, spec: GridSpec) -> np.ndarray:
    """``True`` where a cell-sized probe touches an obstacle."""
    return cell_occupancy(env, spec.bounds()).reshape(spec.shape)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _sample_in_cell(spec: GridSpec, row: int, col: int, space: CSpace, rng) -> np.ndarray:
    cw, ch = spec.cell_size
    cx, cy = spec.centers(row, col)
    q = sample_uniform(space, rng)
    q[0] = cx - cw / 2 + cw * rng.random()
    q[1] = cy - ch / 2 + ch * rng.random()
    return q


def _feasible_in_cell(spec, row, col, space, env, rng, attempts) -> np.ndarray | None:
    """Base position drawn once in the cell, remaining dims retried."""
    q = _sample_in_cell(spec, row, col, space, rng)
    extra = space.dims > 2
    for _ in range(attempts if extra else 1):
        if extra:
            q[2:] = sample_uniform(space, rng)[2:]
        if collision_free_many(env, q[None])[0]:
            return q
    return None


def sample_critical(mask: CriticalMask, space: CSpace, env: Environment,
                    rng: np.random.Generator, attempts: int = SEED_ATTEMPTS,
                    picks: int = CELL_PICKS) -> np.ndarray:
    """Collision-free configuration whose base lies in a random set cell.

    Dimensions beyond the base position are drawn uniformly and retried up to
    ``attempts`` times before a new cell is picked.
    """
    rows, cols = np.nonzero(mask.bits)
    if len(rows) == 0:
        raise ValueError("mask is empty")
    for _ in range(picks):
        i = int(rng.integers(len(rows)))
        q = _feasible_in_cell(mask.spec, rows[i], cols[i], space, env, rng, attempts)
        if q is not None:
            return q
    raise RuntimeError("no collision-free configuration found in the critical mask")


def critical_seeds(mask: CriticalMask, fraction: float, space: CSpace, env: Environment,
                   rng: np.random.Generator, attempts: int = SEED_ATTEMPTS) -> list[np.ndarray]:
    """Seeds from ``fraction`` of the set cells, chosen without replacement.

    Each cell gets one base position and up to ``attempts`` draws of the
    remaining dimensions. Cells that stay in collision are skipped in favour
    of the next unused cell, so fewer seeds come back only when the mask runs
    out.
    """
    rows, cols = np.nonzero(mask.bits)
    want = seed_count(len(rows), fraction)
    order = rng.permutation(len(rows))
    seeds: list[np.ndarray] = []
    batch = max(2 * want, 16)
    for s in range(0, len(order), batch):
        idx = order[s:s + batch]
        Q = np.array([_sample_in_cell(mask.spec, rows[i], cols[i], space, rng) for i in idx])
        ok = collision_free_many(env, Q)
        if space.dims > 2:
            for _ in range(attempts - 1):
                todo = np.flatnonzero(~ok)
                if len(todo) == 0:
                    break
                Q[todo, 2:] = np.array([sample_uniform(space, rng)[2:] for _ in todo])
                ok[todo] = collision_free_many(env, Q[todo])
        seeds.extend(Q[ok][:want - len(seeds)])
        if len(seeds) == want:
            break
    if len(seeds) < want:
        log.warning("mask yielded %d of %d critical seeds", len(seeds), want)
    return seeds


# ---------------------------------------------------------------------------
# training data
# ---------------------------------------------------------------------------

Planner = Callable[[Environment, np.ndarray, np.ndarray, np.random.Generator], PlanResult]


def default_planner(env: Environment, sample_cap: int = 20_000) -> Planner:
    from .baselines import rrt_connect

    params = BuildParams.for_env(env, sample_cap=sample_cap)

    def plan(env, start, goal, rng):
        return rrt_connect(env, start, goal, params, rng)

    return plan


@dataclass
class TrainingData:
    plans: MotionPlanSet
    grid: CriticalityGrid
    smoothed: CriticalityGrid
    mask: CriticalMask
    obstacles: np.ndarray
    solved: list[int]
    failed: list[int]
    warnings: list[str]


def generate_training_data(env: Environment, problem_count: int, repetitions: int,
                           planner: Planner | None, rng: np.random.Generator,
                           spec: GridSpec | None = None, sigma: float = DEFAULT_SIGMA,
                           quantile: float = DEFAULT_QUANTILE) -> TrainingData:
    """Solve random problems and aggregate their traces into a critical mask.

    Each repetition draws ``problem_count`` fresh collision-free start/goal
    pairs. Failed problems are logged and skipped.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    if problem_count < 1:
        raise ValueError("problem_count must be at least 1")
    spec = spec or GridSpec.for_env(env)
    planner = planner or default_planner(env)
    resolution = env.default_resolution()
    plans, problems, solved, failed, warnings = [], [], [], [], []
    for rep in range(repetitions):
        ok = bad = 0
        for _ in range(problem_count):
            start, goal = sample_free(env, rng), sample_free(env, rng)
            child = np.random.default_rng(int(rng.integers(2**63)))
            res = planner(env, start, goal, child)
            if not res.solved:
                bad += 1
                log.info("training problem %s -> %s failed (%s)", start, goal, res.status.value)
                continue
            validate_path(res.path, start, goal, env, resolution)
            plans.append(np.array(res.path))
            problems.append((start, goal))
            ok += 1
        solved.append(ok)
        failed.append(bad)
        if ok < problem_count / 2:
            msg = f"repetition {rep}: only {ok} of {problem_count} problems solved"
            log.warning(msg)
            warnings.append(msg)
    if not plans:
        raise RuntimeError("no training problem was solved")
    planset = MotionPlanSet(plans, env.name, problems)
    grid = estimate_mu(planset, spec)
    smoothed = smooth(grid, sigma)
    mask = binarize(smoothed, quantile)
    return TrainingData(planset, grid, smoothed, mask, obstacle_raster(env, spec),
                        solved, failed, warnings)
