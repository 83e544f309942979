"""P1 minimization of the planar quotient  int |grad u|^2 / (int delta^-s |u|^p)^(2/p).

Each step solves one Poisson problem, K v = B^T (w |Bu|^(p-2) Bu), and
rescales v to unit weighted norm.  The map never increases the quotient
(Hoelder plus Cauchy-Schwarz), so the trace is monotone up to rounding.
B interpolates nodal values onto the quadrature points of a rule that is
collapsed toward boundary vertices, where delta^-s blows up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..core import ProblemParams
from ..quadrature import gauss_legendre01
from .domains import PolygonDomain, distance_to_boundary
from .mesh import TriangleMesh, generate_mesh, prolongate, refine


class FemError(RuntimeError):
    pass


class FemConvergenceError(FemError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


@dataclass
class SolverOptions:
    tol: float = 1e-8  # relative Euler-Lagrange residual in the dual norm
    max_iter: int = 4000
    quad_order: int = 1  # multiplies the per-element Gauss orders
    min_damping: float = 2.0**-20
    min_angle: float = 30.0
    monotone_slack: float = 1e-12


@dataclass
class FemSolution:
    mesh: TriangleMesh
    u: np.ndarray
    mu_h: float
    iterations: int
    convergence_trace: list = field(default_factory=list)
    residual: float = math.nan
    weight_norm: float = 1.0
    damping: list = field(default_factory=list)

    def trace_rows(self):
        return [(i, q) for i, q in enumerate(self.convergence_trace)]


# quadrature


def _collapsed_rule(n_zeta, n_eta, grading):
    """Rule on the unit triangle collapsed at vertex 0: x = zeta*((1-eta) e1 + eta e2).

    Returns barycentric coordinates (nq, 3) and weights summing to the area 1/2.
    ``grading`` is 'none', 'apex' (zeta = tau^2) or 'edge' (zeta = 1-(1-tau)^2).
    """
    t, wt = gauss_legendre01(n_zeta)
    e, we = gauss_legendre01(n_eta)
    if grading == "apex":
        z, dz = t * t, 2 * t
    elif grading == "edge":
        z, dz = 1 - (1 - t) ** 2, 2 * (1 - t)
    else:
        z, dz = t, np.ones_like(t)
    Z, E = np.meshgrid(z, e, indexing="ij")
    W = np.outer(wt * dz * z, we)
    l1 = Z * (1 - E)
    l2 = Z * E
    bary = np.stack([1 - l1 - l2, l1, l2], axis=-1).reshape(-1, 3)
    return bary, W.ravel()


def _rules(quad_order):
    q = max(1, int(quad_order))
    return {
        0: _collapsed_rule(4 * q, 4 * q, "none"),
        1: _collapsed_rule(6 * q, 6 * q, "apex"),
        2: _collapsed_rule(6 * q, 6 * q, "edge"),
    }


def _rotate(tri, bnd):
    """Reorder a triangle so its apex (vertex 0) is where the rule collapses."""
    nb = int(bnd[tri].sum())
    if nb == 1:
        k = int(np.flatnonzero(bnd[tri])[0])
    elif nb == 2:
        k = int(np.flatnonzero(~bnd[tri])[0])
    else:
        k = 0
    return np.roll(tri, -k), nb


def weight_quadrature(mesh: TriangleMesh, domain: PolygonDomain, s: float, quad_order: int = 1):
    """Sparse interpolation B (points x nodes) and weights w_q delta_q^-s."""
    rules = _rules(quad_order)
    rows, cols, vals, wts, pts = [], [], [], [], []
    off = 0
    area2 = 2 * mesh.areas()
    for e, tri in enumerate(mesh.triangles):
        rt, nb = _rotate(tri, mesh.boundary)
        if nb == 3:
            continue  # P1 field vanishes identically
        bary, w = rules[nb]
        xy = bary @ mesh.nodes[rt]
        nq = len(w)
        rows.append(np.repeat(np.arange(off, off + nq), 3))
        cols.append(np.tile(rt, nq))
        vals.append(bary.ravel())
        wts.append(w * area2[e])
        pts.append(xy)
        off += nq
    if off == 0:
        raise FemError("mesh has no interior nodes")
    pts = np.concatenate(pts)
    delta = distance_to_boundary(domain, pts)
    if np.any(~(delta > 0)):
        raise FemError("weight quadrature hit the boundary (delta = 0 at a quadrature point)")
    wq = np.concatenate(wts) * delta ** (-s)
    B = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(off, mesh.n_nodes))
    return B, wq, pts


def _weight_quadrature_fast(mesh, domain, s, quad_order=1):
    """Vectorized equivalent of :func:`weight_quadrature`."""
    rules = _rules(quad_order)
    bnd = mesh.boundary
    tris = mesh.triangles
    nb = bnd[tris].sum(axis=1)
    area2 = 2 * mesh.areas()
    rot = np.zeros(len(tris), dtype=np.int64)
    one = nb == 1
    two = nb == 2
    rot[one] = np.argmax(bnd[tris[one]], axis=1)
    rot[two] = np.argmax(~bnd[tris[two]], axis=1)
    idx = (rot[:, None] + np.arange(3)[None, :]) % 3
    rt = np.take_along_axis(tris, idx, axis=1)
    blocks_w, blocks_p = [], []
    off = 0
    rows_all, cols_all, vals_all = [], [], []
    for cls in (0, 1, 2):
        sel = np.flatnonzero(nb == cls)
        if len(sel) == 0:
            continue
        bary, w = rules[cls]
        nq = len(w)
        T = rt[sel]
        xy = np.einsum("qk,ekd->eqd", bary, mesh.nodes[T]).reshape(-1, 2)
        r = off + np.arange(len(sel) * nq)
        rows_all.append(np.repeat(r, 3))
        cols_all.append(np.repeat(T, nq, axis=0).ravel())
        vals_all.append(np.tile(bary, (len(sel), 1)).ravel())
        blocks_w.append((area2[sel][:, None] * w[None, :]).ravel())
        blocks_p.append(xy)
        off += len(sel) * nq
    if off == 0:
        raise FemError("mesh has no interior nodes")
    pts = np.concatenate(blocks_p)
    delta = distance_to_boundary(domain, pts)
    if np.any(~(delta > 0)):
        raise FemError("weight quadrature hit the boundary (delta = 0 at a quadrature point)")
    wq = np.concatenate(blocks_w) * delta ** (-s)
    B = sp.csr_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))), shape=(off, mesh.n_nodes)
    )
    return B, wq, pts


def stiffness(mesh: TriangleMesh) -> sp.csr_matrix:
    p = mesh.nodes[mesh.triangles]
    area = mesh.areas()
    # gradients of barycentric coordinates: rotate the opposite edge by 90 degrees
    g = np.empty((len(area), 3, 2))
    for k in range(3):
        a = p[:, (k + 1) % 3]
        b = p[:, (k + 2) % 3]
        g[:, k, 0] = (a[:, 1] - b[:, 1]) / (2 * area)
        g[:, k, 1] = (b[:, 0] - a[:, 0]) / (2 * area)
    Ke = np.einsum("eid,ejd->eij", g, g) * area[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    return sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))


# iteration


class _Problem:
    def __init__(self, mesh, domain, params, opts):
        self.mesh = mesh
        self.p = float(params.p)
        self.s = float(params.s)
        self.free = np.flatnonzero(~mesh.boundary)
        K = stiffness(mesh)
        B, wq, _ = _weight_quadrature_fast(mesh, domain, self.s, opts.quad_order)
        self.K = K[self.free][:, self.free].tocsc()
        self.B = B[:, self.free].tocsr()
        self.BT = self.B.T.tocsr()
        self.wq = wq
        try:
            self.lu = splu(self.K)
        except Exception as exc:  # singular or malformed stiffness
            raise FemError(f"sparse factorization failed: {exc}") from exc

    def weight(self, u):
        return float(np.sum(self.wq * np.abs(self.B @ u) ** self.p))

    def energy(self, u):
        return float(u @ (self.K @ u))

    def quotient(self, u):
        return self.energy(u) / self.weight(u) ** (2 / self.p)

    def normalize(self, u):
        return u / self.weight(u) ** (1 / self.p)

    def rhs(self, u):
        bu = self.B @ u
        return self.BT @ (self.wq * np.abs(bu) ** (self.p - 2) * bu)

    def solve(self, b):
        v = self.lu.solve(b)
        if not np.all(np.isfinite(v)):
            raise FemError("linear solve produced non-finite values")
        return v


def initial_guess(mesh: TriangleMesh, domain: PolygonDomain) -> np.ndarray:
    """Nodal interpolant of delta, zero on boundary nodes."""
    d = distance_to_boundary(domain, mesh.nodes)
    d[mesh.boundary] = 0.0
    return d


def _iterate(prob: _Problem, u, opts: SolverOptions):
    u = prob.normalize(u)
    mu = prob.energy(u)
    trace = [mu]
    damp = []
    res = math.inf
    for it in range(1, opts.max_iter + 1):
        v = prob.solve(prob.rhs(u))
        # K^-1 of the residual K u - mu B^T(...) is u - mu v, so its dual norm is free
        du = u - mu * v
        res = math.sqrt(max(prob.energy(du), 0.0) / mu)
        if res < opts.tol:
            return u, mu, trace, damp, res, it - 1
        theta = 1.0
        cand = prob.normalize(v)
        q = prob.energy(cand)
        while q > mu * (1 + opts.monotone_slack):
            theta *= 0.5
            if theta < opts.min_damping:
                raise FemConvergenceError("damping failed to decrease the quotient", trace)
            cand = prob.normalize(u + theta * (v / np.linalg.norm(v) * np.linalg.norm(u) - u))
            q = prob.energy(cand)
        u, mu = cand, q
        trace.append(mu)
        damp.append(theta)
    raise FemConvergenceError(f"no convergence in {opts.max_iter} iterations (residual {res:.3e})", trace)


def _finish(prob, mesh, u, mu, trace, damp, res, its):
    full = np.zeros(mesh.n_nodes)
    full[prob.free] = u
    if full.sum() < 0:
        full = -full
    return FemSolution(
        mesh=mesh,
        u=full,
        mu_h=float(mu),
        iterations=its,
        convergence_trace=[float(t) for t in trace],
        residual=float(res),
        weight_norm=prob.weight(full[prob.free]),
        damping=damp,
    )


def _check(params: ProblemParams):
    if params.N != 2:
        raise ValueError("fem2d works in dimension N = 2 only")
    if not params.p > 2:
        raise ValueError("p must exceed 2")


def minimize_quotient(
    domain: PolygonDomain,
    params: ProblemParams,
    h: float,
    opts: SolverOptions | None = None,
    mesh: TriangleMesh | None = None,
    u0: np.ndarray | None = None,
) -> FemSolution:
    """Minimize the discrete quotient on a mesh of size h (or on ``mesh`` if given)."""
    _check(params)
    opts = opts or SolverOptions()
    if mesh is None:
        mesh = generate_mesh(domain, h, opts.min_angle)
    prob = _Problem(mesh, domain, params, opts)
    if u0 is None:
        u0 = initial_guess(mesh, domain)
    u0 = np.asarray(u0, dtype=float)[prob.free]
    if not np.any(u0):
        raise FemError("initial guess vanishes at every interior node")
    u, mu, trace, damp, res, its = _iterate(prob, u0, opts)
    return _finish(prob, mesh, u, mu, trace, damp, res, its)


@dataclass
class RefineRow:
    h: float
    mu_h: float
    n_nodes: int
    iterations: int
    residual: float


def refine_study(domain: PolygonDomain, params: ProblemParams, h_list, opts: SolverOptions | None = None):
    """Quotients on nested meshes: a mesh at h_list[0], then red refinements.

    h_list must halve at each step.  Every level is warm-started from the
    prolongated previous minimizer, so mu_h cannot increase beyond rounding.
    """
    _check(params)
    h_list = [float(h) for h in h_list]
    if not h_list:
        raise ValueError("h_list is empty")
    for a, b in zip(h_list, h_list[1:]):
        if not abs(a / b - 2) < 1e-9:
            raise ValueError("h_list must halve at each level (nested red refinement)")
    opts = opts or SolverOptions()
    mesh = generate_mesh(domain, h_list[0], opts.min_angle)
    rows, sols = [], []
    u0 = None
    for lvl, h in enumerate(h_list):
        if lvl > 0:
            fine = refine(mesh)
            u0 = prolongate(mesh, fine, sols[-1].u)
            mesh = fine
        sol = minimize_quotient(domain, params, h, opts, mesh=mesh, u0=u0)
        sols.append(sol)
        rows.append(RefineRow(h, sol.mu_h, mesh.n_nodes, sol.iterations, sol.residual))
    return rows, sols


def richardson_estimate(mus):
    """Observed rate and extrapolated error of the last value from three nested levels."""
    if len(mus) < 3:
        raise ValueError("need three levels")
    m0, m1, m2 = mus[-3:]
    d1, d2 = m0 - m1, m1 - m2
    if d1 <= 0 or d2 <= 0:
        return {"rate": math.nan, "error": abs(d2), "limit": m2}
    rate = math.log2(d1 / d2)
    if rate <= 0:
        return {"rate": rate, "error": math.inf, "limit": math.nan}
    err = d2 / (2**rate - 1)
    return {"rate": rate, "error": err, "limit": m2 - err}


def el_residual(domain: PolygonDomain, params: ProblemParams, sol: FemSolution, opts: SolverOptions | None = None) -> float:
    """||K u - mu B^T(w|Bu|^(p-2)Bu)||_(K^-1) / ||u||_K recomputed from scratch."""
    opts = opts or SolverOptions()
    prob = _Problem(sol.mesh, domain, params, opts)
    u = sol.u[prob.free]
    r = prob.K @ u - sol.mu_h * prob.rhs(u)
    return math.sqrt(float(r @ prob.solve(r)) / prob.energy(u))
