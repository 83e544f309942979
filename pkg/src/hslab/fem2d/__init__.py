"""Finite element minimization of the planar quotient on gallery polygons."""

from .domains import GALLERY, GalleryError, PolygonDomain, distance_to_boundary, domain_gallery, kidney_curvature
from .mesh import TriangleMesh, generate_mesh, prolongate, refine, write_mesh
from .solver import (
    FemConvergenceError,
    FemError,
    FemSolution,
    SolverOptions,
    el_residual,
    minimize_quotient,
    refine_study,
    richardson_estimate,
)

__all__ = [
    "GALLERY",
    "GalleryError",
    "PolygonDomain",
    "distance_to_boundary",
    "domain_gallery",
    "kidney_curvature",
    "TriangleMesh",
    "generate_mesh",
    "prolongate",
    "refine",
    "write_mesh",
    "FemConvergenceError",
    "FemError",
    "FemSolution",
    "SolverOptions",
    "el_residual",
    "minimize_quotient",
    "refine_study",
    "richardson_estimate",
]
