"""File formats: environments (JSON), grids and masks (plain PGM), plan
sets (CSV) and roadmaps (versioned text).

Floats are written with ``repr`` so every file round-trips exactly.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import jsonschema
import numpy as np

from .collision import Disc, Environment, InvalidEnvironment, PlanarChain, Polygon, PolygonRobot, Rect
from .criticality import CriticalityGrid, CriticalMask, GridSpec, MotionPlanSet
from .geometry import CSpace
from .roadmap import ORIGINS, Roadmap, Subgraph

ENV_SCHEMA_ID = "learnlink-env/1"
ROADMAP_MAGIC = "learnlink-roadmap 1"


class FormatError(ValueError):
    """Unreadable or invalid input file, with a location when known."""

    def __init__(self, message: str, source: str = "", line: int | None = None,
                 col: int | None = None):
        self.message = message
        self.source = source
        self.line = line
        self.col = col
        where = source
        if line is not None:
            where = f"{where}:{line}:{col}" if col is not None else f"{where}:{line}"
        super().__init__(f"{where}: {message}" if where else message)


# ---------------------------------------------------------------------------
# environments
# ---------------------------------------------------------------------------

_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}

ENV_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "workspace", "robot"],
    "properties": {
        "schema": {"const": ENV_SCHEMA_ID},
        "name": {"type": "string"},
        "units": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"length": {"const": "m"}, "angle": {"const": "rad"}},
        },
        "workspace": {
            "type": "object",
            "additionalProperties": False,
            "required": ["xmin", "ymin", "xmax", "ymax"],
            "properties": {k: {"type": "number"} for k in ("xmin", "ymin", "xmax", "ymax")},
        },
        "robot": {
            "oneOf": [
                {
                    "type": "object", "additionalProperties": False,
                    "required": ["type", "radius"],
                    "properties": {"type": {"const": "disc"}, "radius": {"type": "number"}},
                },
                {
                    "type": "object", "additionalProperties": False,
                    "required": ["type", "vertices"],
                    "properties": {"type": {"const": "polygon"},
                                   "vertices": {"type": "array", "items": _point, "minItems": 3}},
                },
                {
                    "type": "object", "additionalProperties": False,
                    "required": ["type", "base", "lengths", "widths"],
                    "properties": {"type": {"const": "chain"},
                                   "base": {"type": "array", "items": _point, "minItems": 3},
                                   "lengths": _vector, "widths": _vector},
                },
            ]
        },
        "obstacles": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object", "additionalProperties": False,
                        "required": ["type", "xmin", "ymin", "xmax", "ymax"],
                        "properties": {"type": {"const": "rect"}, "name": {"type": "string"},
                                       **{k: {"type": "number"} for k in ("xmin", "ymin", "xmax", "ymax")}},
                    },
                    {
                        "type": "object", "additionalProperties": False,
                        "required": ["type", "vertices"],
                        "properties": {"type": {"const": "polygon"}, "name": {"type": "string"},
                                       "vertices": {"type": "array", "items": _point, "minItems": 3}},
                    },
                ]
            },
        },
        "corridor_width": {"type": "number"},
        "start": _vector,
        "goal": _vector,
    },
}


def _locate(text: str) -> dict[tuple, tuple[int, int]]:
    """Map every JSON path in ``text`` to the (line, column) where its value starts.

    Only called on text that already parsed, so the scanner can be lax.
    """
    dec = json.JSONDecoder()
    spots: dict[tuple, tuple[int, int]] = {}
    line_starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            line_starts.append(i + 1)

    def pos(i):
        lo, hi = 0, len(line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if line_starts[mid] <= i:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, i - line_starts[lo] + 1

    def skip(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def value(i, path):
        i = skip(i)
        spots[path] = pos(i)
        if text[i] == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = dec.raw_decode(text, skip(i))
                i = skip(i) + 1                      # ':'
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1                               # ','
        if text[i] == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = dec.raw_decode(text, i)
        return end

    value(0, ())
    return spots


def _fail(message, source, spots, where):
    where = tuple(where)
    while where and where not in spots:
        where = where[:-1]
    line, col = spots.get(where, (None, None))
    raise FormatError(message, source, line, col)


def _json_path(where) -> str:
    out = "$"
    for p in where:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _explain(err) -> tuple[tuple, str]:
    """Most specific location and message for a schema error."""
    where = tuple(err.absolute_path)
    inst = err.instance
    if err.validator == "oneOf" and isinstance(inst, dict):
        # tagged unions: report against the branch named by "type"
        kinds = [b["properties"]["type"]["const"] for b in err.validator_value]
        if inst.get("type") not in kinds:
            return where + ("type",), f"type must be one of {kinds}"
        branch = err.validator_value[kinds.index(inst["type"])]
        subs = list(jsonschema.Draft202012Validator(branch).iter_errors(inst))
        if subs:
            sub = max(subs, key=jsonschema.exceptions.relevance)
            w, m = _explain(sub)
            return where + w, m
    if err.validator == "additionalProperties" and isinstance(inst, dict):
        extra = sorted(k for k in inst if k not in err.schema.get("properties", {}))
        if extra:
            return where + (extra[0],), f"unknown field '{extra[0]}'"
    return where, err.message


def environment_from_dict(doc: dict) -> Environment:
    ws = doc["workspace"]
    r = doc["robot"]
    if r["type"] == "disc":
        robot = Disc(float(r["radius"]))
    elif r["type"] == "polygon":
        robot = PolygonRobot(tuple(tuple(v) for v in r["vertices"]))
    else:
        robot = PlanarChain(tuple(tuple(v) for v in r["base"]), tuple(r["lengths"]), tuple(r["widths"]))
    obstacles = []
    for o in doc.get("obstacles", []):
        if o["type"] == "rect":
            obstacles.append(Rect(float(o["xmin"]), float(o["ymin"]), float(o["xmax"]),
                                  float(o["ymax"]), o.get("name", "")))
        else:
            obstacles.append(Polygon(tuple((float(x), float(y)) for x, y in o["vertices"]),
                                     o.get("name", "")))
    return Environment((ws["xmin"], ws["ymin"], ws["xmax"], ws["ymax"]), obstacles, robot,
                       corridor_width=doc.get("corridor_width"), name=doc.get("name", ""),
                       start=doc.get("start"), goal=doc.get("goal"))


def environment_to_dict(env: Environment) -> dict:
    xmin, ymin, xmax, ymax = env.workspace
    r = env.robot
    if isinstance(r, Disc):
        robot = {"type": "disc", "radius": r.radius}
    elif isinstance(r, PolygonRobot):
        robot = {"type": "polygon", "vertices": [list(v) for v in r.vertices]}
    else:
        robot = {"type": "chain", "base": [list(v) for v in r.base],
                 "lengths": list(r.lengths), "widths": list(r.widths)}
    obstacles = []
    for o in env.obstacles:
        if isinstance(o, Rect):
            d = {"type": "rect", "xmin": o.xmin, "ymin": o.ymin, "xmax": o.xmax, "ymax": o.ymax}
        else:
            d = {"type": "polygon", "vertices": [list(v) for v in o.vertices]}
        if o.name:
            d["name"] = o.name
        obstacles.append(d)
    doc = {"schema": ENV_SCHEMA_ID, "name": env.name, "units": {"length": "m", "angle": "rad"},
           "workspace": {"xmin": xmin, "ymin": ymin, "xmax": xmax, "ymax": ymax},
           "robot": robot, "obstacles": obstacles}
    if env.corridor_width is not None:
        doc["corridor_width"] = env.corridor_width
    if env.start is not None:
        doc["start"] = [float(v) for v in env.start]
    if env.goal is not None:
        doc["goal"] = [float(v) for v in env.goal]
    return doc


def parse_environment(text: str, source: str = "<string>") -> Environment:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, source, e.lineno, e.colno) from None
    spots = _locate(text)
    errors = list(jsonschema.Draft202012Validator(ENV_SCHEMA).iter_errors(doc))
    if errors:
        # no descent into oneOf branches here; _explain picks the branch by tag
        err = max(errors, key=jsonschema.exceptions.relevance)
        where, message = _explain(err)
        _fail(f"{_json_path(where)}: {message}", source, spots, where)
    try:
        return environment_from_dict(doc)
    except InvalidEnvironment as e:
        where = e.where or ("robot",)
        _fail(str(e), source, spots, where)
    except ValueError as e:
        # start / goal of the wrong length
        bad = [k for k in ("start", "goal") if k in doc]
        _fail(str(e), source, spots, bad[:1])


def load_environment(path) -> Environment:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise FormatError(f"cannot read environment: {e.strerror}", str(path)) from None
    return parse_environment(text, str(path))


def dump_environment(env: Environment) -> str:
    return json.dumps(environment_to_dict(env), indent=2) + "\n"


def save_environment(env: Environment, path) -> None:
    Path(path).write_text(dump_environment(env))


# ---------------------------------------------------------------------------
# plain PGM (P2)
# ---------------------------------------------------------------------------

def write_pgm(path, image: np.ndarray, maxval: int = 255, comment: str = "") -> None:
    """Row 0 of ``image`` is written first (the top of the picture)."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if img.min() < 0 or img.max() > maxval:
        raise ValueError(f"pixel values must lie in [0, {maxval}]")
    h, w = img.shape
    lines = ["P2"]
    if comment:
        lines.append(f"# {comment}")
    lines += [f"{w} {h}", str(maxval)]
    for row in img.astype(int):
        vals = [str(v) for v in row]
        # plain PGM asks for lines of at most 70 characters
        cur = ""
        for v in vals:
            if cur and len(cur) + 1 + len(v) > 70:
                lines.append(cur)
                cur = v
            else:
                cur = f"{cur} {v}" if cur else v
        lines.append(cur)
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> tuple[np.ndarray, int]:
    src = str(path)
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise FormatError("not a plain (P2) PGM file", src, 1)
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        vals = np.array([int(t) for t in tokens[4:]], dtype=int)
    except (IndexError, ValueError):
        raise FormatError("malformed PGM header or pixel data", src) from None
    if vals.size != w * h:
        raise FormatError(f"expected {w * h} pixels, found {vals.size}", src)
    if vals.size and (vals.min() < 0 or vals.max() > maxval):
        raise FormatError(f"pixel value outside [0, {maxval}]", src)
    return vals.reshape(h, w), maxval


def _sidecar(path) -> Path:
    return Path(str(path) + ".json")


def _spec_meta(spec: GridSpec) -> dict:
    return {"width": spec.width, "height": spec.height, "workspace": list(spec.workspace)}


def _read_sidecar(path, required=True) -> dict | None:
    side = _sidecar(path)
    if not side.exists():
        if required:
            raise FormatError("missing metadata sidecar", str(side))
        return None
    try:
        return json.loads(side.read_text())
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, str(side), e.lineno, e.colno) from None


def save_grid(grid: CriticalityGrid, path) -> None:
    """Linear 0..255 image scaled by the maximum; the scale goes in the sidecar."""
    peak = float(grid.mu.max())
    scale = 255.0 / peak if peak > 0 else 0.0
    img = np.rint(grid.mu * scale).astype(int)
    write_pgm(path, img, 255, "criticality grid")
    meta = {"kind": "criticality-grid", "max": peak, "scale": scale,
            "plan_count": grid.plan_count, **_spec_meta(grid.spec)}
    _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n")


def load_grid(path) -> CriticalityGrid:
    img, _ = read_pgm(path)
    meta = _read_sidecar(path)
    spec = GridSpec(meta["width"], meta["height"], tuple(meta["workspace"]))
    if img.shape != spec.shape:
        raise FormatError("image size disagrees with its metadata", str(path))
    scale = meta["scale"]
    mu = img / scale if scale > 0 else np.zeros(img.shape)
    return CriticalityGrid(spec, mu, int(meta["plan_count"]))


def save_mask(mask: CriticalMask, path) -> None:
    write_pgm(path, np.where(mask.bits, 255, 0), 255, "critical mask")
    _sidecar(path).write_text(json.dumps({"kind": "critical-mask", **_spec_meta(mask.spec)},
                                         indent=2) + "\n")


def load_mask(path, workspace=None) -> CriticalMask:
    """Set cells are the non-zero pixels. The workspace comes from the
    sidecar, or from ``workspace`` when there is none."""
    img, _ = read_pgm(path)
    meta = _read_sidecar(path, required=workspace is None)
    if meta is not None:
        workspace = tuple(meta["workspace"])
    h, w = img.shape
    return CriticalMask(GridSpec(w, h, tuple(workspace)), img > 0)


def save_obstacle_raster(raster: np.ndarray, path) -> None:
    """Occupied cells black, free cells white."""
    write_pgm(path, np.where(raster, 0, 255), 255, "obstacle raster")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def write_plans(plans, path) -> None:
    """One row per waypoint: ``plan_id, step, dim0..dimN``."""
    plans = plans.plans if isinstance(plans, MotionPlanSet) else list(plans)
    dims = max((np.asarray(p).shape[1] for p in plans if len(p)), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["plan_id", "step"] + [f"dim{i}" for i in range(dims)])
        for pid, plan in enumerate(plans):
            for step, q in enumerate(np.asarray(plan, dtype=float)):
                w.writerow([pid, step] + [_fmt(v) for v in q])


def read_plans(path, env_id: str = "") -> MotionPlanSet:
    src = str(path)
    groups: dict[int, list] = {}
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if not header or header[:2] != ["plan_id", "step"]:
            raise FormatError("expected a 'plan_id,step,dim0,...' header", src, 1)
        for lineno, row in enumerate(rows, start=2):
            try:
                pid, step = int(row[0]), int(row[1])
                q = [float(v) for v in row[2:]]
            except (ValueError, IndexError):
                raise FormatError("malformed row", src, lineno) from None
            plan = groups.setdefault(pid, [])
            if step != len(plan):
                raise FormatError(f"plan {pid}: expected step {len(plan)}, got {step}", src, lineno)
            plan.append(q)
    return MotionPlanSet([np.array(groups[k]) for k in sorted(groups)], env_id)


# ---------------------------------------------------------------------------
# roadmaps
# ---------------------------------------------------------------------------

def dump_roadmap(RM: Roadmap) -> str:
    sp = RM.space
    out = [ROADMAP_MAGIC,
           f"dims {sp.dims}",
           "lower " + " ".join(_fmt(v) for v in sp.lower),
           "upper " + " ".join(_fmt(v) for v in sp.upper),
           "wraps " + " ".join("1" if w else "0" for w in sp.wraps),
           "weights " + " ".join(_fmt(v) for v in sp.weights),
           f"counters {RM.next_vertex_id} {RM.next_graph_id} {RM.merged_total_vertices}",
           f"graphs {len(RM.graphs)}"]
    for g in RM.graphs:
        edges = list(g.edges())
        out.append(f"graph {g.id} {g.root} {len(g)} {len(edges)}")
        for vid, origin, q in zip(g.ids, g.origins, g.points):
            out.append(f"v {vid} {origin} " + " ".join(_fmt(v) for v in q))
        for u, v, w in edges:
            out.append(f"e {u} {v} {_fmt(w)}")
    return "\n".join(out) + "\n"


def save_roadmap(RM: Roadmap, path) -> None:
    Path(path).write_text(dump_roadmap(RM))


def parse_roadmap(text: str, source: str = "<string>", space: CSpace | None = None) -> Roadmap:
    """Inverse of :func:`dump_roadmap`. When ``space`` is given the file
    must have been written for that same space."""
    lines = text.splitlines()
    pos = 0

    def take(keyword, count=None):
        nonlocal pos
        if pos >= len(lines):
            raise FormatError(f"unexpected end of file, expected '{keyword}'", source, pos + 1)
        parts = lines[pos].split()
        pos += 1
        if not parts or parts[0] != keyword or (count is not None and len(parts) != count + 1):
            raise FormatError(f"expected a '{keyword}' line", source, pos)
        return parts[1:]

    if not lines or lines[0].strip() != ROADMAP_MAGIC:
        raise FormatError(f"missing '{ROADMAP_MAGIC}' header", source, 1)
    pos = 1
    try:
        dims = int(take("dims", 1)[0])
        lower = tuple(float(v) for v in take("lower", dims))
        upper = tuple(float(v) for v in take("upper", dims))
        wraps = tuple(v == "1" for v in take("wraps", dims))
        weights = tuple(float(v) for v in take("weights", dims))
        nv, ng, merged = (int(v) for v in take("counters", 3))
        count = int(take("graphs", 1)[0])
        file_space = CSpace(lower, upper, wraps, weights)
        if space is not None and space != file_space:
            raise FormatError("roadmap was built for a different configuration space", source, 2)
        RM = Roadmap(file_space)
        seen: set[int] = set()
        for _ in range(count):
            gid, root, nverts, nedges = (int(v) for v in take("graph", 4))
            g = Subgraph(gid, file_space, RM._alloc)
            for _ in range(nverts):
                parts = take("v", dims + 2)
                vid, origin = int(parts[0]), parts[1]
                if origin not in ORIGINS:
                    raise FormatError(f"unknown vertex origin '{origin}'", source, pos)
                if vid in seen:
                    raise FormatError(f"duplicate vertex id {vid}", source, pos)
                seen.add(vid)
                g.add_vertex(np.array([float(v) for v in parts[2:]]), origin, vid=vid)
            for _ in range(nedges):
                u, v, w = take("e", 3)
                u, v = int(u), int(v)
                if u not in g or v not in g:
                    raise FormatError(f"edge {u}-{v} leaves graph {gid}", source, pos)
                g.add_edge(u, v, float(w))
            if root not in g:
                raise FormatError(f"root {root} is not a vertex of graph {gid}", source, pos)
            g.root = root
            RM.graphs.append(g)
    except ValueError as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"malformed value: {e}", source, pos) from None
    if any(line.strip() for line in lines[pos:]):
        raise FormatError("trailing content after the last graph", source, pos + 1)
    if seen and max(seen) >= nv:
        raise FormatError("vertex counter is behind the stored ids", source, 7)
    RM.next_vertex_id, RM.next_graph_id, RM.merged_total_vertices = nv, ng, merged
    return RM


def load_roadmap(path, space: CSpace | None = None) -> Roadmap:
    return parse_roadmap(Path(path).read_text(), str(path), space)


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
