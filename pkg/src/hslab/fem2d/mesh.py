"""Triangle meshes: constrained Delaunay generation and nested red refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import triangle

from .domains import PolygonDomain

MIN_ANGLE = 30.0


@dataclass
class TriangleMesh:
    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3), counterclockwise
    boundary: np.ndarray  # (n,) bool
    h: float

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def min_angle(self) -> float:
        p = self.nodes[self.triangles]
        ang = []
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cosv = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            ang.append(np.degrees(np.arccos(np.clip(cosv, -1, 1))))
        return float(np.min(ang))

    def max_edge(self) -> float:
        p = self.nodes[self.triangles]
        return float(max(np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1).max() for k in range(3)))


def _orient(nodes, tris):
    p = nodes[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    neg = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    tris = tris.copy()
    tris[neg] = tris[neg][:, [0, 2, 1]]
    return tris


def generate_mesh(domain: PolygonDomain, h: float, min_angle: float = MIN_ANGLE) -> TriangleMesh:
    """Constrained quality Delaunay mesh with maximal triangle area sqrt(3)/4 h^2."""
    if not h > 0:
        raise ValueError("mesh size must be positive")
    area = math.sqrt(3) / 4 * h * h
    geo = {"vertices": domain.vertices, "segments": domain.segments()}
    out = triangle.triangulate(geo, f"pq{min_angle:g}a{area:.17g}Q")
    nodes = np.asarray(out["vertices"], dtype=float)
    tris = _orient(nodes, np.asarray(out["triangles"], dtype=np.int64))
    bnd = np.asarray(out["vertex_markers"]).ravel() != 0
    return TriangleMesh(nodes, tris, bnd, float(h))


def refine(mesh: TriangleMesh) -> TriangleMesh:
    """Red refinement: every triangle splits into four through its edge midpoints."""
    tris = mesh.triangles
    n = mesh.n_nodes
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    mids = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    mid_bnd = counts == 1  # edges owned by a single triangle lie on the boundary
    m = len(tris)
    m01 = n + inv[:m]
    m12 = n + inv[m : 2 * m]
    m20 = n + inv[2 * m :]
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    new = np.concatenate(
        [
            np.stack([a, m01, m20], axis=1),
            np.stack([m01, b, m12], axis=1),
            np.stack([m20, m12, c], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    nodes = np.concatenate([mesh.nodes, mids])
    bnd = np.concatenate([mesh.boundary, mid_bnd])
    return TriangleMesh(nodes, new, bnd, mesh.h / 2)


def prolongate(coarse: TriangleMesh, fine: TriangleMesh, u: np.ndarray) -> np.ndarray:
    """Exact P1 prolongation onto a red refinement of ``coarse``."""
    tris = coarse.triangles
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    uniq = np.unique(np.sort(edges, axis=1), axis=0)
    out = np.empty(fine.n_nodes)
    out[: coarse.n_nodes] = u
    out[coarse.n_nodes :] = 0.5 * (u[uniq[:, 0]] + u[uniq[:, 1]])
    return out


def write_mesh(path, mesh: TriangleMesh, values=None):
    """Plain-text dump: header, node table (x y boundary [u]), element table (i j k)."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# hslab mesh nodes={mesh.n_nodes} triangles={len(mesh.triangles)} h={mesh.h:.17g}\n")
        fh.write("# nodes: x y boundary" + (" u" if values is not None else "") + "\n")
        for i, (x, y) in enumerate(mesh.nodes):
            row = f"{x:.17g} {y:.17g} {int(mesh.boundary[i])}"
            if values is not None:
                row += f" {values[i]:.17g}"
            fh.write(row + "\n")
        fh.write("# triangles: i j k (0-based, counterclockwise)\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
