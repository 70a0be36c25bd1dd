"""semisimp: semiautomatic mesh simplification.

Builds an edge-collapse simplification hierarchy with quadric error
metrics, then lets you improve aggressively simplified models: reorder
collapses to redistribute detail, reposition vertices with propagation to
neighboring levels of detail, and repartition the hierarchy for segmented
simplification. Usable headless (CLI, edit scripts) or live through the
session service and browser UI.
"""

from .engine import build_hierarchy, build_hierarchy_random, init_state, \
    init_state_from_cut, step_collapse
from .geom_edit import EditOptions, FalloffCurve, apply_vertex_edit, \
    attenuation_factor, falloff_weight, local_frame, undo_vertex_edit
from .hierarchy import Cut, Hierarchy, ValidationReport, cut_at, \
    extract_mesh, load_hierarchy, save_hierarchy, validate
from .mesh import Mesh, Plane, VertexRecord, collapse_is_legal, \
    hop_neighborhood
from .obj_io import load_obj, save_obj
from .quadric import Quadric, QuadricConfig, optimal_placement, \
    quadric_from_plane, vertex_quadric
from .reorder import eliminate_feature, local_refine, local_simplify, \
    move_element, preserve_feature
from .repartition import Patch, define_patch, resimplify_segmented

__version__ = "0.1.0"

__all__ = [
    "Mesh", "Plane", "VertexRecord", "collapse_is_legal", "hop_neighborhood",
    "load_obj", "save_obj",
    "Quadric", "QuadricConfig", "quadric_from_plane", "vertex_quadric",
    "optimal_placement",
    "Hierarchy", "Cut", "ValidationReport", "cut_at", "extract_mesh",
    "validate", "save_hierarchy", "load_hierarchy",
    "build_hierarchy", "build_hierarchy_random", "init_state",
    "init_state_from_cut", "step_collapse",
    "move_element", "local_simplify", "local_refine", "preserve_feature",
    "eliminate_feature",
    "EditOptions", "FalloffCurve", "falloff_weight", "local_frame",
    "attenuation_factor", "apply_vertex_edit", "undo_vertex_edit",
    "Patch", "define_patch", "resimplify_segmented",
    "__version__",
]
