import json

import numpy as np
import pytest

from learnlink import io, worlds
from learnlink.collision import Disc, Environment, PlanarChain, Polygon, PolygonRobot, Rect
from learnlink.criticality import CriticalityGrid, GridSpec, MotionPlanSet
from learnlink.geometry import CSpace, make_rng
from learnlink.planners import LLRM, BuildParams, ll_build

MINIMAL = """{
  "schema": "learnlink-env/1",
  "workspace": {"xmin": 0, "ymin": 0, "xmax": 4, "ymax": 3},
  "robot": {"type": "disc", "radius": 0.2}
}
"""


def doc_with(**over):
    d = json.loads(MINIMAL)
    d.update(over)
    return json.dumps(d, indent=2)


def test_minimal_file():
    env = io.parse_environment(MINIMAL)
    assert env.workspace == (0, 0, 4, 3)
    assert len(env.obstacles) == 0 and env.robot == Disc(0.2)


@pytest.mark.parametrize("env", [
    worlds.two_rooms(),
    worlds.three_corridors(),
    Environment((0.0, 0.0, 5.0, 5.0), [Polygon(((1.0, 1.0), (2.0, 1.0), (1.5, 2.1)), "tri")],
                PolygonRobot(((-0.2, -0.1), (0.2, -0.1), (0.0, 0.3))), start=[0.5, 0.5, 0.0]),
    Environment((0.0, 0.0, 6.0, 6.0), [Rect(2.0, 2.0, 3.0, 3.0)],
                PlanarChain(((-0.2, -0.2), (0.2, -0.2), (0.2, 0.2), (-0.2, 0.2)), (0.7, 0.5), (0.1, 0.1))),
])
def test_environment_roundtrip(env, tmp_path):
    path = tmp_path / "env.json"
    io.save_environment(env, path)
    back = io.load_environment(path)
    assert io.dump_environment(back) == path.read_text()
    assert back.workspace == env.workspace and back.robot == env.robot
    assert back.obstacles == env.obstacles
    assert back.space == env.space


def test_obstacle_outside_workspace_names_line():
    text = """{
  "schema": "learnlink-env/1",
  "workspace": {"xmin": 0, "ymin": 0, "xmax": 4, "ymax": 3},
  "robot": {"type": "disc", "radius": 0.2},
  "obstacles": [
    {"type": "rect", "xmin": 1, "ymin": 1, "xmax": 2, "ymax": 2},
    {"type": "rect", "name": "far", "xmin": 5, "ymin": 1, "xmax": 6, "ymax": 2}
  ]
}
"""
    with pytest.raises(io.FormatError) as e:
        io.parse_environment(text, "w.json")
    assert (e.value.line, e.value.col) == (7, 5)
    assert str(e.value).startswith("w.json:7:5: ")
    assert "far" in str(e.value)


def test_unknown_field_named():
    text = MINIMAL.replace('"radius"', '"radios"')
    with pytest.raises(io.FormatError) as e:
        io.parse_environment(text, "r.json")
    assert "unknown field 'radios'" in str(e.value)
    assert e.value.line == 4


def test_unknown_top_level_field():
    with pytest.raises(io.FormatError, match="unknown field 'colour'"):
        io.parse_environment(doc_with(colour="red"))


def test_wrong_type_located():
    text = MINIMAL.replace('"xmax": 4', '"xmax": "4"')
    with pytest.raises(io.FormatError) as e:
        io.parse_environment(text)
    assert "$.workspace.xmax" in str(e.value) and e.value.line == 3


def test_bad_robot_kind():
    text = MINIMAL.replace('"disc"', '"blob"')
    with pytest.raises(io.FormatError, match="type must be one of"):
        io.parse_environment(text)


def test_wrong_schema_tag():
    with pytest.raises(io.FormatError):
        io.parse_environment(MINIMAL.replace("learnlink-env/1", "learnlink-env/9"))


def test_syntax_error_has_position():
    text = MINIMAL.replace('"robot"', '"robot" ')[:-4] + ",\n}"
    with pytest.raises(io.FormatError) as e:
        io.parse_environment(text, "s.json")
    assert e.value.line is not None and e.value.col is not None
    assert str(e.value).startswith(f"s.json:{e.value.line}:{e.value.col}: ")


def test_missing_file(tmp_path):
    with pytest.raises(io.FormatError, match="cannot read"):
        io.load_environment(tmp_path / "nope.json")


def test_start_dimension_checked():
    with pytest.raises(io.FormatError):
        io.parse_environment(doc_with(start=[1.0, 1.0, 0.0]))


# ---- plans ----

def test_plans_roundtrip(tmp_path):
    r = make_rng(0)
    plans = [r.random((k, 3)) * 10 for k in (1, 4, 7)]
    io.write_plans(MotionPlanSet(plans), tmp_path / "p.csv")
    back = io.read_plans(tmp_path / "p.csv", "env")
    assert back.env_id == "env" and len(back.plans) == 3
    for a, b in zip(plans, back.plans):
        assert np.array_equal(a, b)


def test_plans_step_gap(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("plan_id,step,dim0,dim1\n0,0,1.0,1.0\n0,2,2.0,2.0\n")
    with pytest.raises(io.FormatError) as e:
        io.read_plans(p)
    assert e.value.line == 3


# ---- PGM and grids ----

def test_pgm_roundtrip(tmp_path):
    img = make_rng(1).integers(0, 256, (13, 41))
    io.write_pgm(tmp_path / "a.pgm", img, comment="test")
    back, maxval = io.read_pgm(tmp_path / "a.pgm")
    assert maxval == 255 and np.array_equal(back, img)
    assert max(len(line) for line in (tmp_path / "a.pgm").read_text().splitlines()) <= 70


def test_grid_roundtrip_within_quantization(tmp_path):
    spec = GridSpec(9, 7, (0.0, 0.0, 9.0, 7.0))
    mu = make_rng(2).random(spec.shape) * 40
    io.save_grid(CriticalityGrid(spec, mu, 12), tmp_path / "g.pgm")
    meta = json.loads((tmp_path / "g.pgm.json").read_text())
    assert meta["plan_count"] == 12 and meta["max"] == mu.max()
    back = io.load_grid(tmp_path / "g.pgm")
    assert back.spec == spec and back.plan_count == 12
    assert np.abs(back.mu - mu).max() <= 0.5 * mu.max() / 255 + 1e-12


# ---- roadmaps ----

@pytest.fixture(scope="module")
def built_roadmap():
    env = worlds.two_rooms()
    params = BuildParams.for_env(env, n=0, m=20, mode=LLRM, sample_cap=300)
    return env, ll_build(params, [], env, make_rng(4)).roadmap


def test_roadmap_roundtrip(built_roadmap, tmp_path):
    env, RM = built_roadmap
    path = tmp_path / "rm.txt"
    io.save_roadmap(RM, path)
    back = io.load_roadmap(path, env.space)
    assert io.dump_roadmap(back) == path.read_text()
    assert [g.ids for g in back.graphs] == [g.ids for g in RM.graphs]
    assert [g.origins for g in back.graphs] == [g.origins for g in RM.graphs]
    for a, b in zip(RM.graphs, back.graphs):
        assert np.array_equal(np.asarray(a.points), np.asarray(b.points))
        assert sorted(a.edges()) == sorted(b.edges())
        assert a.root == b.root
    assert (back.next_vertex_id, back.next_graph_id, back.merged_total_vertices) == \
        (RM.next_vertex_id, RM.next_graph_id, RM.merged_total_vertices)


def test_roadmap_space_mismatch(built_roadmap):
    _, RM = built_roadmap
    other = CSpace((0.0, 0.0), (20.0, 10.0), (False, False), (1.0, 1.0))
    with pytest.raises(io.FormatError, match="different configuration space"):
        io.parse_roadmap(io.dump_roadmap(RM), "rm.txt", other)


def test_roadmap_bad_header():
    with pytest.raises(io.FormatError) as e:
        io.parse_roadmap("roadmap v0\n", "x")
    assert e.value.line == 1


def test_roadmap_corrupt_edge(built_roadmap):
    _, RM = built_roadmap
    lines = io.dump_roadmap(RM).splitlines()
    k = next(i for i, line in enumerate(lines) if line.startswith("e "))
    lines[k] = "e 0 999999 1.0"
    with pytest.raises(io.FormatError) as e:
        io.parse_roadmap("\n".join(lines), "x")
    assert e.value.line == k + 1
