"""Learn-and-Link motion planning: critical-region seeded subgraph forests,
the oracle criticality pipeline, reference planners and a benchmark harness."""

from .baselines import prm_build, prm_query, rrt, rrt_connect
from .collision import (Disc, Environment, InvalidEnvironment, PlanarChain, Polygon, PolygonRobot,
                        Rect, chain_forward_kinematics, edge_collision_free, is_collision_free)
from .criticality import (CriticalityGrid, CriticalMask, GridSpec, MotionPlanSet, binarize,
                          estimate_mu, generate_training_data, rasterize_trace, sample_critical,
                          score_region, smooth)
from .geometry import CSpace, distance, interpolate, make_rng, sample_uniform
from .planners import LLP, LLRM, BuildParams, PlanResult, Status, ll_build, llrm_plan
from .roadmap import ExtendStatus, LinkStatus, Roadmap, Subgraph, connect, extend, link, shortest_path, swap

__version__ = "0.1.0"
