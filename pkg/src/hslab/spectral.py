"""Spectrum of the linearization around the ball profile, one spherical-harmonic mode at a time.

For mode k the radial problem is

    -(r^(N-1) phi')' + mu_k r^(N-3) phi = lam rho~ r^(N-1) phi,   phi(1) = 0,

with mu_k = k(k+N-2) and rho~ = 2^s U^(p-2) / (1-r^2)^s.  It is discretized
by continuous piecewise-quadratic Galerkin elements on a grid clustered at
both ends; the resulting pencil (K, M) is symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import chebyshev as C
from scipy.sparse.linalg import eigsh

from .core import ProblemParams, harmonic_dimension
from .quadrature import gauss_legendre01

N_QUAD = 6
XI_WINDOW = (0.02, 0.98)


class SpectralError(RuntimeError):
    pass


@dataclass
class ModeProblem:
    params: ProblemParams
    profile: object
    k: int
    n_grid: int = 800

    @property
    def mu_k(self) -> int:
        return self.k * (self.k + self.params.N - 2)


@dataclass
class SpectrumReport:
    mode: ModeProblem
    eigenvalues: np.ndarray
    eigenfunction_samples: np.ndarray
    nodes: np.ndarray
    eigenvectors: np.ndarray = field(repr=False, default=None)
    symmetry_error: float = 0.0
    sign_changes: list = field(default_factory=list)
    grid_shift: float | None = None


def weight_fn(params: ProblemParams, profile, r, c=None):
    """rho~(r) = (2/(1-r^2))^s U(r)^(p-2); pass the complement c = 1 - r when r is near 1."""
    r = np.asarray(r, dtype=float)
    if c is None:
        if np.any(r <= 0) or np.any(r >= 1):
            raise ValueError("weight_fn needs 0 < r < 1")
        c = 1.0 - r
    c = np.asarray(c, dtype=float)
    u, _ = profile.evaluate_c(c)
    s, p = params.s, params.p
    return (2.0 / (c * (2 - c))) ** s * np.maximum(u, 0.0) ** (p - 2)


def graded_grid(n: int):
    """Nodes r_i = (1 - cos(pi i/n))/2 together with their exact complements."""
    th = np.pi * np.arange(n + 1) / n
    r = np.sin(0.5 * th) ** 2
    c = np.sin(0.5 * (np.pi - th)) ** 2
    return r, c


def _p2_basis(xi):
    N = np.stack([2 * (xi - 0.5) * (xi - 1), 4 * xi * (1 - xi), 2 * xi * (xi - 0.5)])
    dN = np.stack([4 * xi - 3, 4 - 8 * xi, 4 * xi - 1])
    return N, dN


def assemble(params: ProblemParams, profile, k: int, n: int):
    """Stiffness K, mass M (full, before boundary conditions) and the P2 node coordinates."""
    N = params.N
    mu = k * (k + N - 2)
    r, c = graded_grid(n)
    h = np.diff(r)
    xq, wq = gauss_legendre01(N_QUAD)
    rq = r[:-1, None] + h[:, None] * xq[None, :]
    cq = c[:-1, None] - h[:, None] * xq[None, :]
    B, dB = _p2_basis(xq)
    wgt = weight_fn(params, profile, rq, cq)
    jw = h[:, None] * wq[None, :]
    a_stiff = rq ** (N - 1) * jw / (h[:, None] ** 2)
    a_pot = mu * rq ** (N - 3) * jw
    a_mass = wgt * rq ** (N - 1) * jw
    Ke = np.einsum("eq,iq,jq->eij", a_stiff, dB, dB) + np.einsum("eq,iq,jq->eij", a_pot, B, B)
    Me = np.einsum("eq,iq,jq->eij", a_mass, B, B)
    dofs = 2 * np.arange(n)[:, None] + np.arange(3)[None, :]
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    ndof = 2 * n + 1
    K = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(ndof, ndof))
    M = sp.csr_matrix((Me.ravel(), (rows, cols)), shape=(ndof, ndof))
    nodes = np.empty(ndof)
    nodes[0::2] = r
    nodes[1::2] = r[:-1] + 0.5 * h
    return K, M, nodes


def _sym_err(A):
    d = abs(A - A.T).max()
    return float(d / max(abs(A).max(), 1e-300))


def _sign_changes(v, eps=1e-10):
    v = v[np.abs(v) > eps * np.abs(v).max()]
    return int(np.count_nonzero(np.diff(np.sign(v))))


def _solve(params, profile, k, n, count):
    K, M, nodes = assemble(params, profile, k, n)
    sym = max(_sym_err(K), _sym_err(M))
    free = np.arange(len(nodes) - 1)  # phi(1) = 0
    if k >= 1:
        free = free[1:]  # regularity: phi ~ r^k vanishes at the centre
    Kf = K[free][:, free].tocsc()
    Mf = M[free][:, free].tocsc()
    try:
        vals, vecs = eigsh(Kf, k=count, M=Mf, sigma=0.0, which="LM")
    except Exception as exc:  # ARPACK failures surface as several exception types
        raise SpectralError(f"eigensolver failed for k={k}: {exc}") from exc
    order = np.argsort(vals)
    vals = vals[order]
    full = np.zeros((len(nodes), count))
    full[free] = vecs[:, order]
    for j in range(count):
        col = full[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            full[:, j] = -col
    return vals, full, nodes, sym, M


def mode_eigens(mode: ModeProblem, count: int = 3, check_grid: bool = False, grid_tol: float = 1e-5) -> SpectrumReport:
    """Lowest ``count`` generalized eigenvalues of the mode-k problem."""
    if mode.n_grid < 200:
        raise ValueError("n_grid must be at least 200")
    vals, vecs, nodes, sym, _ = _solve(mode.params, mode.profile, mode.k, mode.n_grid, count)
    if np.any(np.diff(vals) <= 0):
        raise SpectralError(f"eigenvalues not strictly ascending: {vals}")
    rep = SpectrumReport(
        mode=mode,
        eigenvalues=vals,
        eigenfunction_samples=vecs[:, 0].copy(),
        nodes=nodes,
        eigenvectors=vecs,
        symmetry_error=sym,
        sign_changes=[_sign_changes(vecs[:, j]) for j in range(count)],
    )
    if check_grid:
        v2, *_ = _solve(mode.params, mode.profile, mode.k, 2 * mode.n_grid, 1)
        rep.grid_shift = float(abs(v2[0] - vals[0]))
        if rep.grid_shift > 10 * grid_tol:
            raise SpectralError(f"grid too coarse: lambda_1 moved by {rep.grid_shift:.2e} on doubling")
    return rep


def xi_function(params: ProblemParams, profile, r):
    """xi(r) = U'(r)(1-r^2) - (N-2) U(r) r, the radial part of the k = 1 kernel direction."""
    r = np.asarray(r, dtype=float)
    u, du = profile.evaluate(r)
    return du * (1 - r * r) - (params.N - 2) * u * r


def xi_residual(params: ProblemParams, profile, degree: int = 90) -> float:
    """Relative weighted-L2 residual of A_1(xi) + (p-1) rho~ xi on [0.02, 0.98].

    Derivatives come from a Chebyshev interpolant of xi, independently of the ODE.
    """
    N, p = params.N, params.p
    a, b = XI_WINDOW
    nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
    rr = a + (b - a) * 0.5 * (nodes + 1)
    coef = C.chebfit(nodes, xi_function(params, profile, rr), degree)
    d1 = C.chebder(coef) * (2 / (b - a))
    d2 = C.chebder(coef, 2) * (2 / (b - a)) ** 2
    xg, wg = gauss_legendre01(200)
    r = a + (b - a) * xg
    z = 2 * xg - 1
    xi = C.chebval(z, coef)
    lin = C.chebval(z, d2) + (N - 1) / r * C.chebval(z, d1) - (N - 1) / r**2 * xi
    pot = (p - 1) * weight_fn(params, profile, r) * xi
    w = wg * r ** (N - 1)
    return float(np.sqrt(np.sum(w * (lin + pot) ** 2) / np.sum(w * pot**2)))


def _cosine(u, v, M):
    return float(abs(u @ (M @ v)) / np.sqrt((u @ (M @ u)) * (v @ (M @ v))))


def eigenfunction_similarity(params: ProblemParams, profile, k: int, n_grid: int = 800) -> float:
    """M-weighted cosine between the lowest mode-k eigenvector and U (k=0) or xi (k=1)."""
    vals, vecs, nodes, _, M = _solve(params, profile, k, n_grid, 1)
    if k == 0:
        ref, _ = profile.evaluate(nodes)
    elif k == 1:
        ref = xi_function(params, profile, nodes)
    else:
        raise ValueError("reference eigenfunctions are known for k = 0 and k = 1 only")
    return _cosine(vecs[:, 0], ref, M)


def nondegeneracy_certificate(params: ProblemParams, profile, k_max: int = 4, n_grid: int = 800, tol: float = 1e-4) -> dict:
    """Check that the spectrum below p-1 (inclusive) is exactly {1 (k=0), p-1 (k=1)}."""
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    p = params.p
    rows = []
    below = []
    for k in range(k_max + 1):
        rep = mode_eigens(ModeProblem(params, profile, k, n_grid), count=2)
        lam = rep.eigenvalues
        rows.append(
            {
                "k": k,
                "mu_k": rep.mode.mu_k,
                "lambda1": float(lam[0]),
                "lambda2": float(lam[1]),
                "margin": float(lam[0] - (p - 1)),
                "multiplicity": harmonic_dimension(params.N, k),
                "sign_changes": rep.sign_changes,
            }
        )
        for j, v in enumerate(lam):
            if v <= p - 1 + tol:
                below.append((k, j, float(v)))
    expected = [(0, 0), (1, 0)]
    found = [(k, j) for k, j, _ in below]
    ok_set = found == expected
    lam0 = rows[0]["lambda1"]
    lam1 = rows[1]["lambda1"]
    mult = sum(harmonic_dimension(params.N, k) for k, j, v in below if abs(v - (p - 1)) <= tol)
    certified = bool(ok_set and abs(lam0 - 1) <= tol and abs(lam1 - (p - 1)) <= tol and mult == params.N)
    mono = all(rows[i + 1]["lambda1"] > rows[i]["lambda1"] for i in range(len(rows) - 1))
    return {
        "certified": certified,
        "multiplicity_at_p_minus_1": mult,
        "k2_margin": rows[2]["margin"],
        "mode_monotone": mono,
        "rows": rows,
    }
