"""Built-in environments used by the tests, the benchmark and the CLI."""

from __future__ import annotations

from .collision import Disc, Environment, Rect

SIZE = 10.0


def open_world(radius: float = 0.5, size: float = SIZE) -> Environment:
    return Environment((0.0, 0.0, size, size), [], Disc(radius), name="open",
                       start=(1.0, size / 2), goal=(size - 1.0, size / 2))


def sealed_chambers(radius: float = 0.5, size: float = SIZE) -> Environment:
    """A full-height wall; nothing crosses from left to right."""
    mid = size / 2
    wall = Rect(mid - 0.5, 0.0, mid + 0.5, size, "wall")
    return Environment((0.0, 0.0, size, size), [wall], Disc(radius), name="sealed",
                       start=(1.5, mid), goal=(size - 1.5, mid))


def _wall_with_gaps(x0, x1, gaps, size, name):
    """Vertical wall between ``x0`` and ``x1`` broken by ``(center, width)`` gaps."""
    rects = []
    y = 0.0
    for i, (c, w) in enumerate(sorted(gaps)):
        lo, hi = c - w / 2, c + w / 2
        if lo > y:
            rects.append(Rect(x0, y, x1, lo, f"{name}-{i}"))
        y = hi
    if y < size:
        rects.append(Rect(x0, y, x1, size, f"{name}-{len(gaps)}"))
    return rects


def two_rooms(radius: float = 0.5, corridor_factor: float = 2.2, bent: bool = True,
              size: float = SIZE, band: float = 0.3) -> Environment:
    """Two rooms separated by a wall band and joined by one corridor.

    The band is ``band * size`` thick and centred.

    The corridor is ``corridor_factor * radius`` wide. When ``bent`` it runs
    in along the upper arm, down the middle and out along the lower arm (a Z),
    so no straight segment crosses the band.
    """
    w = corridor_factor * radius
    h = w / 2
    a, b, xm = (0.5 - band / 2) * size, (0.5 + band / 2) * size, 0.5 * size
    if bent:
        y1, y2 = 0.65 * size, 0.35 * size
        walls = [
            Rect(a, 0.0, xm - h, y1 - h, "left-low"), Rect(a, y1 + h, xm - h, size, "left-high"),
            Rect(xm - h, 0.0, xm + h, y2 - h, "mid-low"), Rect(xm - h, y1 + h, xm + h, size, "mid-high"),
            Rect(xm + h, 0.0, b, y2 - h, "right-low"), Rect(xm + h, y2 + h, b, size, "right-high"),
        ]
    else:
        walls = _wall_with_gaps(a, b, [(size / 2, w)], size, "wall")
    return Environment((0.0, 0.0, size, size), walls, Disc(radius), corridor_width=w,
                       name="two-rooms", start=(0.15 * size, 0.85 * size),
                       goal=(0.85 * size, 0.15 * size))


def three_corridors(radius: float = 0.5, corridor_factor: float = 2.2,
                    wall_thickness: float = 1.0, size: float = SIZE) -> Environment:
    """Four chambers in a row; each pair joined by one corridor, offset so no line of sight."""
    width = corridor_factor * radius
    xs = [size * k / 4 for k in (1, 2, 3)]
    ys = [0.25 * size, 0.75 * size, 0.25 * size]
    walls = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        walls += _wall_with_gaps(x - wall_thickness / 2, x + wall_thickness / 2,
                                 [(y, width)], size, f"wall{i}")
    return Environment((0.0, 0.0, size, size), walls, Disc(radius), corridor_width=width,
                       name="three-corridors", start=(1.0, size / 2), goal=(size - 1.0, size / 2))


WORLDS = {
    "open": open_world,
    "sealed": sealed_chambers,
    "two-rooms": two_rooms,
    "three-corridors": three_corridors,
}
