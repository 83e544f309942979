"""Polygonal gallery domains and exact distance to their boundary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..kernels import polygon_distance

KIDNEY_DENT = 0.6
KIDNEY_POWER = 4
GALLERY = ("disk", "square", "kidney")


class GalleryError(ValueError):
    pass


@dataclass(frozen=True)
class PolygonDomain:
    """Simple polygon with counterclockwise vertices (no repeated closing vertex)."""

    name: str
    vertices: np.ndarray
    smooth_source: dict | None = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GalleryError("need at least three 2D vertices")
        object.__setattr__(self, "vertices", v)
        if self.signed_area() <= 0:
            raise GalleryError("vertices must be counterclockwise (positive area)")
        if not self.is_simple():
            raise GalleryError("polygon is self-intersecting")

    def signed_area(self) -> float:
        x, y = self.vertices.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def turn_cross(self) -> np.ndarray:
        """Cross products of consecutive edges; negative entries mark reflex vertices."""
        v = self.vertices
        e1 = v - np.roll(v, 1, axis=0)
        e2 = np.roll(v, -1, axis=0) - v
        return e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]

    def is_convex(self, tol: float = 1e-14) -> bool:
        return bool(np.all(self.turn_cross() >= -tol))

    def reflex_count(self, tol: float = 1e-14) -> int:
        return int(np.count_nonzero(self.turn_cross() < -tol))

    def is_simple(self) -> bool:
        v = self.vertices
        n = len(v)
        a = v
        b = np.roll(v, -1, axis=0)

        def orient(p, q, r):
            return np.sign((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

        i, j = np.triu_indices(n, k=2)
        keep = ~((i == 0) & (j == n - 1))  # the closing pair shares a vertex
        i, j = i[keep], j[keep]
        o1 = orient(a[i], b[i], a[j])
        o2 = orient(a[i], b[i], b[j])
        o3 = orient(a[j], b[j], a[i])
        o4 = orient(a[j], b[j], b[i])
        return not bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))

    def contains(self, pts) -> np.ndarray:
        """Even-odd point-in-polygon test."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0:1], pts[:, 1:2]
        a = self.vertices[None, :, :]
        b = np.roll(self.vertices, -1, axis=0)[None, :, :]
        cond = (a[..., 1] > y) != (b[..., 1] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a[..., 0] + (y - a[..., 1]) * (b[..., 0] - a[..., 0]) / (b[..., 1] - a[..., 1])
        return (np.count_nonzero(cond & (x < xc), axis=1) % 2) == 1

    def segments(self) -> np.ndarray:
        n = len(self.vertices)
        return np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)


def distance_to_boundary(domain: PolygonDomain, points, reject_outside: bool = False):
    """Exact Euclidean distance to the polygon boundary (minimum over its segments)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if reject_outside and not np.all(domain.contains(pts)):
        raise GalleryError("point outside the domain")
    d = polygon_distance(pts[:, 0], pts[:, 1], domain.vertices[:, 0], domain.vertices[:, 1])
    if np.ndim(points) == 1:
        return float(d[0])
    return d


def kidney_radius(theta, dent: float = KIDNEY_DENT, power: int = KIDNEY_POWER):
    """Polar curve r(theta) = 1 - dent * ((1 - cos theta)/2)^power, dented at theta = pi."""
    return 1 - dent * ((1 - np.cos(theta)) / 2) ** power


def kidney_curvature(theta, dent: float = KIDNEY_DENT, power: int = KIDNEY_POWER):
    """Signed curvature (r^2 + 2r'^2 - r r'')/(r^2 + r'^2)^(3/2) of the kidney curve."""
    th = np.asarray(theta, dtype=float)
    q = (1 - np.cos(th)) / 2
    dq = np.sin(th) / 2
    d2q = np.cos(th) / 2
    r = 1 - dent * q**power
    dr = -dent * power * q ** (power - 1) * dq
    d2r = -dent * power * ((power - 1) * q ** (power - 2) * dq * dq + q ** (power - 1) * d2q)
    return (r * r + 2 * dr * dr - r * d2r) / (r * r + dr * dr) ** 1.5


def domain_gallery(name: str, resolution: int = 128) -> PolygonDomain:
    """disk: regular polygon inscribed in the unit circle; square: [0,1]^2; kidney: dented polar curve."""
    if name not in GALLERY:
        raise GalleryError(f"unknown domain {name!r}; choose from {', '.join(GALLERY)}")
    if resolution < 32:
        raise GalleryError("resolution must be at least 32")
    if name == "square":
        v = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        return PolygonDomain("square", v)
    th = 2 * math.pi * np.arange(resolution) / resolution
    if name == "disk":
        v = np.stack([np.cos(th), np.sin(th)], axis=1)
        return PolygonDomain("disk", v, {"curve": "circle", "radius": 1.0, "resolution": resolution})
    r = kidney_radius(th)
    v = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    src = {"curve": "kidney", "dent": KIDNEY_DENT, "power": KIDNEY_POWER, "resolution": resolution}
    return PolygonDomain("kidney", v, src)
