"""Radial extremal profiles on the unit ball.

The ball profile solves

    U'' + (N-1)/r U' + 2^s U^(p-1) / (1-r^2)^s = 0,   U'(0) = 0,  U(1) = 0,  U > 0.

Two families have closed forms; everything else is shot from r = 0 with a
bisection on a = U(0).  Integration runs in the graded variable sigma with
1 - r = sigma**m so that the boundary layer at r = 1 is smooth and 1 - r is
never formed by cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import FAMILY_2N, FAMILY_4N, ProblemParams

SERIES_H = 1e-4
SCAN_RANGE = (1e-3, 1e3)
SCAN_LIMIT = 1e12
BISECTION_BUDGET = 200
CLASSIFY_GAP = 1e-14  # trajectories still positive at 1 - r = CLASSIFY_GAP are undershoots
MAX_STEPS = 200_000
C_LIN = 1e-9


class ShootingError(RuntimeError):
    """Bracketing or integration failed; usually a tolerance/parameter misconfiguration."""


def grading_power(params: ProblemParams) -> int:
    """Exponent m of the substitution 1 - r = sigma**m."""
    return max(2, int(math.ceil(6.0 / (params.p - params.s))))


def series_coefficients(params: ProblemParams, a: float):
    """Coefficients (c2, c4) of U = a + c2 r^2 + c4 r^4 + O(r^6) near the centre."""
    N, s, p = params.N, params.s, params.p
    two_s = 2.0**s
    f0 = two_s * a ** (p - 1)
    c2 = -f0 / (2 * N)
    f2 = two_s * ((p - 1) * a ** (p - 2) * c2 + s * a ** (p - 1))
    c4 = -f2 / (4 * (N + 2))
    return c2, c4


@dataclass
class RadialProfile:
    """U on [0, 1] with derivative, evaluable anywhere through ``evaluate``.

    ``grid``/``values``/``derivs`` are node samples (integrator steps for
    shooting, a fixed Chebyshev-like grid for closed forms).
    """

    params: ProblemParams
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    shoot_param: float
    boundary_slope: float
    source: str
    info: dict = field(default_factory=dict)
    _eval: object = field(default=None, repr=False)

    def evaluate_c(self, c):
        """(U, U') at r = 1 - c; taking the complement keeps U accurate near r = 1."""
        c = np.asarray(c, dtype=float)
        return self._eval(c)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > 1):
            raise ValueError("profile is defined on 0 <= r <= 1")
        return self.evaluate_c(1.0 - r)

    def second_derivative_at_zero(self) -> float:
        c2, _ = series_coefficients(self.params, self.shoot_param)
        return 2.0 * c2

    def slope_over_r(self, r, c=None):
        """U'(r)/r, using the centre series for r below the series radius."""
        r = np.asarray(r, dtype=float)
        if c is None:
            c = 1.0 - r
        _, du = self.evaluate_c(c)
        c2, c4 = series_coefficients(self.params, self.shoot_param)
        small = r < SERIES_H
        with np.errstate(divide="ignore", invalid="ignore"):
            out = du / r
        return np.where(small, 2 * c2 + 4 * c4 * r * r, out)

    def vtilde(self, r):
        """V = 2U/(1-r^2), bounded up to the boundary."""
        r = np.asarray(r, dtype=float)
        u, _ = self.evaluate(r)
        return 2 * u / ((1 - r) * (1 + r))


def evaluate_profile(profile: RadialProfile, r):
    """(U(r), U'(r)) for r in [0, 1]; scalars in, scalars out."""
    u, du = profile.evaluate(r)
    if np.ndim(u) == 0:
        return float(u), float(du)
    return u, du


def _closed_grid(n=513):
    return 0.5 * (1 - np.cos(np.pi * np.arange(n) / (n - 1)))


def closed_form_profile(params: ProblemParams, n_nodes: int = 513):
    """Explicit profile for the two solvable families, ``None`` otherwise."""
    N = params.N
    if params.family == FAMILY_2N:
        a = 0.5 * N ** (N / 2)

        def ev(c):
            r = 1 - c
            return a * c * (2 - c), -2 * a * r

    elif params.family == FAMILY_4N:
        a = 0.5 * (N * (N + 2.0)) ** (N / 4)

        def ev(c):
            r = 1 - c
            r2 = r * r
            g = (1 + r2) ** (-N / 2)
            u = a * c * (2 - c) * g
            du = a * g * (-2 * r - N * r * (1 - r2) / (1 + r2))
            return u, du

    else:
        return None
    grid = _closed_grid(n_nodes)
    u, du = ev(1 - grid)
    u[-1] = 0.0
    return RadialProfile(
        params=params,
        grid=grid,
        values=u,
        derivs=du,
        shoot_param=float(a),
        boundary_slope=float(du[-1]),
        source="closed_form",
        _eval=ev,
    )


@dataclass
class _Trajectory:
    status: int
    sig: np.ndarray
    y: np.ndarray
    dense: np.ndarray
    sig_zero: float
    steps: int


class _Shooter:
    def __init__(self, params: ProblemParams, tol: float):
        self.params = params
        self.m = grading_power(params)
        self.rtol = float(min(1e-6, max(1e-13, tol * 1e-4)))
        # start at r = h: sigma0 = (1 - h)^(1/m)
        self.sig0 = math.exp(math.log1p(-SERIES_H) / self.m)
        self.sig_end = CLASSIFY_GAP ** (1.0 / self.m)

    def run(self, a: float, store: bool, sig_end=None) -> _Trajectory:
        pr = self.params
        c2, c4 = series_coefficients(pr, a)
        h = SERIES_H
        u0 = a + c2 * h * h + c4 * h**4
        w0 = 2 * c2 * h + 4 * c4 * h**3
        scale = max(a, 1e-300)
        status, n, sig, y, dense, sz = kernels.shoot_kernel(
            float(pr.N),
            pr.s,
            pr.p,
            float(self.m),
            self.sig0,
            u0,
            w0,
            self.sig_end if sig_end is None else sig_end,
            self.rtol,
            1e-3 * self.rtol * scale,
            1e-3 * self.rtol * scale,
            1e-3,
            MAX_STEPS,
            store,
        )
        if status in (kernels.STEP_BUDGET, kernels.STEP_UNDERFLOW):
            raise ShootingError(f"integration stalled (status {status}) at a={a!r} after {n} steps")
        return _Trajectory(int(status), np.asarray(sig), np.asarray(y), np.asarray(dense), float(sz), int(n))

    def overshoots(self, a: float) -> bool:
        return self.run(a, store=False).status == kernels.CROSSED_ZERO


def _bracket(sh: _Shooter, lo=SCAN_RANGE[0], hi=SCAN_RANGE[1]):
    """Log scan for an undershoot/overshoot pair.

    The scan covers [lo, hi] in decades and is extended by further decades on
    either side (down to 1/SCAN_LIMIT, up to SCAN_LIMIT) when no sign change
    is found inside.
    """
    history = []
    a = lo
    over = sh.overshoots(a)
    history.append((a, over))
    while over:
        a_next = a / 10
        if a_next < 1.0 / SCAN_LIMIT:
            raise ShootingError("no undershoot found for a down to %g" % (1.0 / SCAN_LIMIT))
        over_next = sh.overshoots(a_next)
        history.append((a_next, over_next))
        if not over_next:
            return a_next, a, history
        a = a_next
    prev = a
    while True:
        a = prev * 10
        if a > max(hi, SCAN_LIMIT):
            raise ShootingError("no overshoot found for a up to %g" % SCAN_LIMIT)
        over = sh.overshoots(a)
        history.append((a, over))
        if over:
            return prev, a, history
        prev = a


def _traj_eval(traj: _Trajectory, m: float, params: ProblemParams, a: float):
    """Vectorized dense evaluation of a stored trajectory at complements c = 1 - r."""
    sig = traj.sig
    dense = traj.dense
    y = traj.y
    nseg = len(sig) - 1
    c2, c4 = series_coefficients(params, a)
    sig_lo = traj.sig_zero if traj.status == kernels.CROSSED_ZERO else sig[-1]

    def ev(c):
        c = np.asarray(c, dtype=float)
        u = np.empty(c.shape)
        du = np.empty(c.shape)
        r = 1 - c
        near0 = r < SERIES_H
        rr = r[near0]
        u[near0] = a + c2 * rr**2 + c4 * rr**4
        du[near0] = 2 * c2 * rr + 4 * c4 * rr**3
        rest = ~near0
        cc = np.maximum(c[rest], 0.0)
        sg = cc ** (1.0 / m)
        sg = np.maximum(sg, sig_lo)
        # sig decreasing: segment i spans [sig[i+1], sig[i]]
        idx = np.searchsorted(-sig, -sg, side="right") - 1
        idx = np.clip(idx, 0, nseg - 1)
        h = sig[idx + 1] - sig[idx]
        th = (sg - sig[idx]) / h
        Q = dense[idx]
        poly = th[:, None] * np.ones(4)
        poly = np.cumprod(poly, axis=1)
        uu = y[idx, 0] + h * np.einsum("ik,ik->i", Q[:, 0, :], poly)
        ww = y[idx, 1] + h * np.einsum("ik,ik->i", Q[:, 1, :], poly)
        u[rest] = uu
        du[rest] = ww
        return u, du

    return ev


def shoot(params: ProblemParams, tol: float = 1e-8, a_range=SCAN_RANGE) -> RadialProfile:
    """Shooting solution of the ball problem with bisection on a = U(0)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    sh = _Shooter(params, tol)
    a_lo, a_hi, scan = _bracket(sh, *a_range)
    history = []
    widths = [a_hi - a_lo]
    for _ in range(BISECTION_BUDGET):
        if a_hi - a_lo <= 4e-16 * a_hi:
            break
        mid = 0.5 * (a_lo + a_hi)
        if mid <= a_lo or mid >= a_hi:
            break
        over = sh.overshoots(mid)
        history.append((mid, over))
        if over:
            a_hi = mid
        else:
            a_lo = mid
        widths.append(a_hi - a_lo)
    else:
        raise ShootingError("bisection budget exhausted")

    traj = sh.run(a_hi, store=True)
    if traj.status != kernels.CROSSED_ZERO:
        raise ShootingError("upper bracket end does not overshoot on re-run")
    m = float(sh.m)
    # the overshoot trajectory vanishes at r0 slightly below 1; stretch r -> r * r0 so U(1) = 0
    omr0 = traj.sig_zero**m
    r0 = 1.0 - omr0
    base = _traj_eval(traj, m, params, a_hi)

    # below C_LIN the interpolant is dominated by rounding next to its root; U is linear there
    u_lin, _ = base(np.array([omr0 + r0 * C_LIN]))
    ratio = float(u_lin[0]) / C_LIN

    def ev(c):
        c = np.asarray(c, dtype=float)
        ct = omr0 + r0 * c
        u, du = base(ct)
        u = np.where(c < C_LIN, ratio * np.maximum(c, 0.0), u)
        return u, r0 * du

    # node samples: integrator steps mapped to the stretched coordinate, then r = 1
    c_nodes = traj.sig**m
    r_nodes = np.concatenate([[0.0], (1.0 - c_nodes) / r0, [1.0]])
    keep = np.concatenate([[True], np.diff(r_nodes) > 0])
    r_nodes = r_nodes[keep]
    u_nodes, du_nodes = ev(1.0 - r_nodes)
    u_nodes[0], du_nodes[0] = a_hi, 0.0
    _, slope = ev(np.array([0.0]))

    prof = RadialProfile(
        params=params,
        grid=r_nodes,
        values=u_nodes,
        derivs=du_nodes,
        shoot_param=float(a_hi),
        boundary_slope=float(slope[0]),
        source="shooting",
        _eval=ev,
    )
    prof.info.update(
        {
            "grading_power": sh.m,
            "rtol": sh.rtol,
            "bracket": (float(a_lo), float(a_hi)),
            "bracket_widths": widths,
            "scan": scan,
            "bisection_history": history,
            "steps": traj.steps,
            "zero_gap": float(omr0),
        }
    )
    res = ode_residual(prof)
    prof.info["residual"] = res
    prof.info["critical_points"] = critical_point_count(prof)
    if not (res < tol):
        raise ShootingError(f"ODE residual {res:.3e} above tol {tol:.1e}")
    return prof


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def ode_residual(profile: RadialProfile, r_max: float = 1 - 1e-6, n_panels: int = 400) -> float:
    """Relative flux-form residual of the radial equation.

    R(r) = r^(N-1) U'(r) + int_0^r 2^s t^(N-1) U^(p-1) (1-t^2)^(-s) dt must vanish;
    the max of |R| over (0, r_max] is divided by the boundary flux |int_0^1 ...|.
    """
    pr = profile.params
    N, s, p = pr.N, pr.s, pr.p
    m = grading_power(pr)
    xg, wg = _gauss(10)
    # panels uniform in sigma (1 - r = sigma^m) so the boundary layer is resolved
    sig_edges = np.linspace(1.0, 0.0, n_panels + 1)
    a_s, b_s = sig_edges[:-1], sig_edges[1:]
    sg = a_s[:, None] + (b_s - a_s)[:, None] * xg[None, :]
    c = sg**m
    r = 1 - c
    u, du = profile.evaluate_c(c)
    u = np.maximum(u, 0.0)
    # integrand times dr/dsigma, assembled in logs: c = sigma^m underflows long before the product does
    with np.errstate(divide="ignore", invalid="ignore"):
        lsg = np.log(sg)
        logf = (p - 1) * np.log(u) + (m - 1 - m * s) * lsg - s * np.log(2 - c) + (N - 1) * np.log(r)
        f = np.where((u > 0) & (sg > 0), 2.0**s * m * np.exp(logf), 0.0)
    panel = np.sum(f * (a_s - b_s)[:, None] * wg[None, :], axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    r_edges = 1 - sig_edges**m
    _, du_e = profile.evaluate_c(sig_edges**m)
    R = r_edges ** (N - 1) * du_e + cum
    mask = (r_edges > 0) & (r_edges <= r_max)
    scale = abs(cum[-1])
    return float(np.max(np.abs(R[mask])) / scale)


def critical_point_count(profile: RadialProfile, n: int = 4000) -> int:
    """Interior sign changes of d/dr[(1+r)^(N-2) U(r)] on a fine grid (reported only)."""
    N = profile.params.N
    r = 0.5 * (1 - np.cos(np.pi * np.arange(1, n) / n))
    u, du = profile.evaluate(r)
    g = (N - 2) * (1 + r) ** (N - 3) * u + (1 + r) ** (N - 2) * du
    sgn = np.sign(g)
    sgn = sgn[sgn != 0]
    return int(np.count_nonzero(np.diff(sgn)))


def profile_for(params: ProblemParams, tol: float = 1e-8) -> RadialProfile:
    """Closed form when available, otherwise shooting."""
    prof = closed_form_profile(params)
    return prof if prof is not None else shoot(params, tol)


def bisection_is_monotone(profile: RadialProfile, last: int = 20) -> bool:
    """Overshoot/undershoot labels of the final bisection probes are a step function of a."""
    hist = profile.info.get("bisection_history", [])[-last:]
    if not hist:
        return True
    pts = sorted(hist)
    labels = [o for _, o in pts]
    return labels == sorted(labels)
