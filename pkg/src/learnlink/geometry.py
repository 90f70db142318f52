"""Configuration spaces: sampling, metric and interpolation.

Configurations are plain 1-D ``float`` numpy arrays. Angular dimensions are
kept in ``[-pi, pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

Configuration = np.ndarray


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; identical seeds give identical streams."""
    return np.random.default_rng(np.uint64(seed % 2**64))


def wrap_angle(x):
    """Map angles into ``[-pi, pi)``."""
    return np.mod(np.asarray(x, dtype=float) + math.pi, TWO_PI) - math.pi


@dataclass(frozen=True)
class CSpace:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    wraps: tuple[bool, ...]
    weights: tuple[float, ...]
    _lo: np.ndarray = field(init=False, repr=False, compare=False)
    _span: np.ndarray = field(init=False, repr=False, compare=False)
    _wrap_mask: np.ndarray = field(init=False, repr=False, compare=False)
    _w: np.ndarray = field(init=False, repr=False, compare=False)
    has_wraps: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.lower)
        if n == 0:
            raise ValueError("a configuration space needs at least one dimension")
        if not (len(self.upper) == len(self.wraps) == len(self.weights) == n):
            raise ValueError("lower, upper, wraps and weights must have equal length")
        for i in range(n):
            lo, hi = self.lower[i], self.upper[i]
            if not lo < hi:
                raise ValueError(f"dimension {i}: lower bound {lo} is not below upper bound {hi}")
            if self.wraps[i] and not math.isclose(hi - lo, TWO_PI, rel_tol=0, abs_tol=1e-9):
                raise ValueError(f"dimension {i}: wrapped dimensions must span 2*pi")
            if not self.weights[i] > 0:
                raise ValueError(f"dimension {i}: metric weight must be positive")
        object.__setattr__(self, "_lo", np.array(self.lower, dtype=float))
        object.__setattr__(self, "_span", np.array(self.upper, dtype=float) - self._lo)
        object.__setattr__(self, "_wrap_mask", np.array(self.wraps, dtype=bool))
        object.__setattr__(self, "_w", np.array(self.weights, dtype=float))
        object.__setattr__(self, "has_wraps", bool(any(self.wraps)))

    @property
    def dims(self) -> int:
        return len(self.lower)

    @classmethod
    def se2(cls, xmin, ymin, xmax, ymax, angle_weight=0.5) -> "CSpace":
        return cls((xmin, ymin, -math.pi), (xmax, ymax, math.pi),
                   (False, False, True), (1.0, 1.0, angle_weight))

    @classmethod
    def planar(cls, xmin, ymin, xmax, ymax, n_angles=0, angle_weight=0.5) -> "CSpace":
        """Base position followed by ``n_angles`` wrapped joint angles."""
        return cls(
            (xmin, ymin) + (-math.pi,) * n_angles,
            (xmax, ymax) + (math.pi,) * n_angles,
            (False, False) + (True,) * n_angles,
            (1.0, 1.0) + (angle_weight,) * n_angles,
        )

    def config(self, values) -> Configuration:
        """Build a normalized configuration from raw values."""
        q = np.array(values, dtype=float).reshape(-1)
        if q.shape[0] != self.dims:
            raise ValueError(f"expected {self.dims} values, got {q.shape[0]}")
        if self.has_wraps:
            q[self._wrap_mask] = wrap_angle(q[self._wrap_mask])
        return q

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        free = ~self._wrap_mask
        hi = self._lo + self._span
        return bool(np.all(q[free] >= self._lo[free]) and np.all(q[free] <= hi[free]))

    def difference(self, a, b) -> np.ndarray:
        """Per-dimension ``b - a``; wrapped dims take the shortest arc.

        Broadcasts, so ``a`` may be an ``(n, d)`` array of vertices.
        """
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.has_wraps:
            d[..., self._wrap_mask] = wrap_angle(d[..., self._wrap_mask])
        return d

    def distances(self, points: np.ndarray, q) -> np.ndarray:
        """Metric distance from every row of ``points`` to ``q``."""
        d = self.difference(points, q) * self._w
        return np.sqrt(np.einsum("ij,ij->i", d, d))


def _check_dims(space: CSpace, *qs):
    for q in qs:
        if np.shape(q) != (space.dims,):
            raise ValueError(f"configuration of shape {np.shape(q)} does not match a {space.dims}-D space")


def sample_uniform(space: CSpace, rng: np.random.Generator) -> Configuration:
    """Draw every coordinate independently and uniformly over its bounds."""
    q = space._lo + space._span * rng.random(space.dims)
    if space.has_wraps:
        q[space._wrap_mask] = wrap_angle(q[space._wrap_mask])
    return q


def distance(a, b, space: CSpace) -> float:
    d = np.subtract(b, a, dtype=float)
    if d.shape != (space.dims,):
        _check_dims(space, a, b)
    if space.has_wraps:
        d[space._wrap_mask] = wrap_angle(d[space._wrap_mask])
    d *= space._w
    return math.sqrt(float(d @ d))


def interpolate(a, b, t: float, space: CSpace) -> Configuration:
    """Point at fraction ``t`` along the shortest segment from ``a`` to ``b``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter {t} outside [0, 1]")
    _check_dims(space, a, b)
    if t == 0.0:
        return np.array(a, dtype=float)
    if t == 1.0:
        return np.array(b, dtype=float)
    q = np.asarray(a, dtype=float) + t * space.difference(a, b)
    if space.has_wraps:
        q[space._wrap_mask] = wrap_angle(q[space._wrap_mask])
    return q


def interpolate_many(a, b, ts: np.ndarray, space: CSpace) -> np.ndarray:
    """Rows ``interpolate(a, b, t)`` for each ``t`` in ``ts``; exact at 0 and 1."""
    a = np.asarray(a, dtype=float)
    q = a + np.outer(ts, space.difference(a, b))
    if space.has_wraps:
        q[:, space._wrap_mask] = wrap_angle(q[:, space._wrap_mask])
    q[ts == 0.0] = a
    q[ts == 1.0] = b
    return q


def steer(a, b, step: float, space: CSpace) -> tuple[Configuration, bool]:
    """Move from ``a`` toward ``b`` by at most ``step``.

    Returns the new configuration and whether it is ``b`` itself.
    """
    diff = space.difference(a, b)
    wd = diff * space._w
    d = math.sqrt(float(wd @ wd))
    if d <= step:
        return np.array(b, dtype=float), True
    q = a + (step / d) * diff
    if space.has_wraps:
        q[space._wrap_mask] = wrap_angle(q[space._wrap_mask])
    return q, False
