"""Sweeping processes and the vector play operator on BV inputs.

Paths are piecewise linear with finitely many jumps (:class:`BVPath`),
moving sets are translates, balls, boxes, polyhedra and their geodesic
interpolants, and every solver is the catching-up scheme with exact jump
updates.
"""

from .bvpath import BVPath, NondecreasingMap, arc_length, bv_norm, bv_norm_dist, compose, d_inf, d_us, stieltjes
from .errors import SweepError
from .geometry import (
    Ball,
    Box,
    ConvexSet,
    Dilation,
    DilationIntersection,
    HalfSpace,
    Polyhedron,
    Translate,
    geodesic_set,
    hausdorff_distance,
    interval,
    normal_cone_contains,
    project,
    project_dilation,
)
from .kernels import BACKEND
from .reparam import ConstantSetPath, GeodesicPath, TranslatePath, fill_geodesics, fill_segments
from .solver import (
    Grid,
    SweepOutput,
    catching_up,
    geodesic_solution,
    play,
    play_via_reparam,
    rate_transform,
    stop_and_q,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BVPath",
    "NondecreasingMap",
    "arc_length",
    "bv_norm",
    "bv_norm_dist",
    "compose",
    "d_inf",
    "d_us",
    "stieltjes",
    "SweepError",
    "Ball",
    "Box",
    "ConvexSet",
    "Dilation",
    "DilationIntersection",
    "HalfSpace",
    "Polyhedron",
    "Translate",
    "geodesic_set",
    "hausdorff_distance",
    "interval",
    "normal_cone_contains",
    "project",
    "project_dilation",
    "ConstantSetPath",
    "GeodesicPath",
    "TranslatePath",
    "fill_geodesics",
    "fill_segments",
    "Grid",
    "SweepOutput",
    "catching_up",
    "geodesic_solution",
    "play",
    "play_via_reparam",
    "rate_transform",
    "stop_and_q",
]
