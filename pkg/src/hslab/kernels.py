"""Hot loops: the radial shooting integrator and point-to-polygon distances.

Every function here is written in the subset of Python that numba's nopython
mode accepts, and is passed through :func:`hslab._accel.maybe_njit`.  With
``HSLAB_DISABLE_NUMBA=1`` the same source runs as ordinary Python/numpy.
"""

import math

import numpy as np

from ._accel import maybe_njit

# Dormand-Prince 5(4) tableau with the 4th-order dense-output polynomial
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
DP_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

# status codes returned by shoot_kernel
REACHED_END = 0  # integrated down to sigma_end with U > 0: undershoot
CROSSED_ZERO = 1  # U hit zero first: overshoot
STEP_BUDGET = 2
STEP_UNDERFLOW = 3


@maybe_njit
def _radial_rhs(sig, u, w, N, s, p, m, two_s):
    """Right-hand side in the graded variable sigma, where 1 - r = sigma**m.

    Returns (dU/dsigma, dW/dsigma) for the state (U, W = dU/dr).
    """
    if sig <= 0.0:
        return 0.0, 0.0
    lsig = math.log(sig)
    sm1 = math.exp((m - 1) * lsig)
    omr = sm1 * sig
    r = 1.0 - omr
    jac = m * sm1
    au = abs(u)
    if au > 0.0:
        upow = math.copysign(math.exp((p - 1.0) * math.log(au)), u)
    else:
        upow = 0.0
    # sigma^(m-1) (1-r)^(-s) combined in log form so tiny sigma does not underflow first
    wgt = m * math.exp((m - 1.0 - m * s) * lsig) * (1.0 + r) ** (-s)
    du = -jac * w
    dw = jac * (N - 1.0) * w / r + wgt * two_s * upow
    return du, dw


@maybe_njit
def _dense_u(u0, h, q0, q1, q2, q3, th):
    return u0 + h * th * (q0 + th * (q1 + th * (q2 + th * q3)))


@maybe_njit
def shoot_kernel(N, s, p, m, sig0, u0, w0, sig_end, rtol, atol_u, atol_w, h0, max_steps, store):
    """Integrate the radial ODE from sigma = sig0 down to sig_end with DP5(4).

    Returns (status, n_steps, sig_nodes, y_nodes, dense, sig_zero) where
    ``dense[i]`` holds the 2x4 dense-output coefficients of step i.  When
    ``store`` is False only the first/last node is kept.
    """
    two_s = 2.0**s
    cap = max_steps + 1 if store else 2
    sig_nodes = np.empty(cap)
    y_nodes = np.empty((cap, 2))
    dense = np.empty((cap, 2, 4))
    K = np.empty((7, 2))

    sig = sig0
    u = u0
    w = w0
    h = -abs(h0)
    sig_nodes[0] = sig
    y_nodes[0, 0] = u
    y_nodes[0, 1] = w
    k1u, k1w = _radial_rhs(sig, u, w, N, s, p, m, two_s)
    n = 0
    status = STEP_BUDGET
    sig_zero = -1.0

    while n < max_steps:
        final = False
        if sig + h <= sig_end:
            h = sig_end - sig
            final = True
        if abs(h) < 1e-15 * max(sig, 1e-300):
            status = STEP_UNDERFLOW
            break
        K[0, 0] = k1u
        K[0, 1] = k1w
        for i in range(1, 6):
            du = 0.0
            dw = 0.0
            for j in range(i):
                du += DP_A[i, j] * K[j, 0]
                dw += DP_A[i, j] * K[j, 1]
            K[i, 0], K[i, 1] = _radial_rhs(sig + DP_C[i] * h, u + h * du, w + h * dw, N, s, p, m, two_s)
        un = u
        wn = w
        for j in range(6):
            un += h * DP_B[j] * K[j, 0]
            wn += h * DP_B[j] * K[j, 1]
        sn = sig_end if final else sig + h
        K[6, 0], K[6, 1] = _radial_rhs(sn, un, wn, N, s, p, m, two_s)

        eu = 0.0
        ew = 0.0
        for j in range(7):
            eu += DP_E[j] * K[j, 0]
            ew += DP_E[j] * K[j, 1]
        eu *= h
        ew *= h
        scu = atol_u + rtol * max(abs(u), abs(un))
        scw = atol_w + rtol * max(abs(w), abs(wn))
        err = math.sqrt(0.5 * ((eu / scu) ** 2 + (ew / scw) ** 2))

        if not (err <= 1.0):  # also catches nan
            if err != err or err == math.inf:
                h *= 0.2
            else:
                h *= max(0.2, 0.9 * err ** (-0.2))
            continue

        # accepted step: dense coefficients Q = K^T P
        qu0 = 0.0
        qu1 = 0.0
        qu2 = 0.0
        qu3 = 0.0
        idx = n if store else 0
        for c in range(2):
            for k in range(4):
                acc = 0.0
                for j in range(7):
                    acc += K[j, c] * DP_P[j, k]
                dense[idx, c, k] = acc
        qu0 = dense[idx, 0, 0]
        qu1 = dense[idx, 0, 1]
        qu2 = dense[idx, 0, 2]
        qu3 = dense[idx, 0, 3]

        n += 1
        if un <= 0.0:
            # locate the crossing on the dense interpolant by bisection
            lo = 0.0
            hi = 1.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if _dense_u(u, h, qu0, qu1, qu2, qu3, mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-16:
                    break
            sig_zero = sig + hi * h
            if sig_zero < 0.0:
                sig_zero = 0.0
            j = n if store else 1
            sig_nodes[j] = sn
            y_nodes[j, 0] = un
            y_nodes[j, 1] = wn
            status = CROSSED_ZERO
            break

        j = n if store else 1
        sig_nodes[j] = sn
        y_nodes[j, 0] = un
        y_nodes[j, 1] = wn
        sig = sn
        u = un
        w = wn
        k1u = K[6, 0]
        k1w = K[6, 1]
        if final or sig <= sig_end:
            status = REACHED_END
            break
        fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** (-0.2)))
        h *= fac

    last = n if store else 1
    if n == 0:
        last = 0
    return status, n, sig_nodes[: last + 1], y_nodes[: last + 1], dense[: max(last, 1)], sig_zero


@maybe_njit
def _seg_dist2(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    L2 = dx * dx + dy * dy
    t = 0.0
    if L2 > 0.0:
        t = ((px - ax) * dx + (py - ay) * dy) / L2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    ex = ax + t * dx - px
    ey = ay + t * dy - py
    return ex * ex + ey * ey


@maybe_njit
def polygon_distance_loop(px, py, vx, vy):
    """Distance from each point (px[i], py[i]) to the closed polyline (vx, vy)."""
    n = px.shape[0]
    nv = vx.shape[0]
    out = np.empty(n)
    for i in range(n):
        best = math.inf
        for k in range(nv):
            k2 = k + 1 if k + 1 < nv else 0
            d2 = _seg_dist2(px[i], py[i], vx[k], vy[k], vx[k2], vy[k2])
            if d2 < best:
                best = d2
        out[i] = math.sqrt(best)
    return out


def polygon_distance_numpy(px, py, vx, vy, chunk=4096):
    """Vectorized fallback of :func:`polygon_distance_loop` (same results)."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    ax = np.asarray(vx, dtype=float)[None, :]
    ay = np.asarray(vy, dtype=float)[None, :]
    bx = np.roll(ax, -1, axis=1)
    by = np.roll(ay, -1, axis=1)
    dx = bx - ax
    dy = by - ay
    L2 = dx * dx + dy * dy
    safe = np.where(L2 > 0, L2, 1.0)
    out = np.empty(px.shape[0])
    for i0 in range(0, px.shape[0], chunk):
        qx = px[i0 : i0 + chunk, None]
        qy = py[i0 : i0 + chunk, None]
        t = np.clip(((qx - ax) * dx + (qy - ay) * dy) / safe, 0.0, 1.0)
        t = np.where(L2 > 0, t, 0.0)
        ex = ax + t * dx - qx
        ey = ay + t * dy - qy
        out[i0 : i0 + chunk] = np.sqrt(np.min(ex * ex + ey * ey, axis=1))
    return out


def polygon_distance(px, py, vx, vy):
    """Exact Euclidean distance from points to a closed polygon boundary."""
    from ._accel import USE_NUMBA

    px = np.ascontiguousarray(px, dtype=float).ravel()
    py = np.ascontiguousarray(py, dtype=float).ravel()
    vx = np.ascontiguousarray(vx, dtype=float)
    vy = np.ascontiguousarray(vy, dtype=float)
    if USE_NUMBA:
        return polygon_distance_loop(px, py, vx, vy)
    return polygon_distance_numpy(px, py, vx, vy)
