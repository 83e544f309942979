"""Conformal equivalence between the half-space R^N_+ and the unit ball.

The map is the inversion in the sphere of radius sqrt(2) about -e_N, so it
is its own inverse.  Points are arrays whose last axis holds (x', x_N).
"""

from __future__ import annotations

import numpy as np

SINGULAR_RADIUS = 1e-10


def _shift(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] < 2:
        raise ValueError("points need at least two coordinates (x', x_N)")
    xs = x.copy()
    xs[..., -1] += 1.0
    return xs


def to_ball(x):
    """y' = 2x'/|x+e_N|^2,  y_N = (1 - |x|^2)/|x+e_N|^2."""
    xs = _shift(x)
    if np.any(xs[..., -1] < 1.0):
        raise ValueError("half-space points need x_N >= 0")
    d = np.sum(xs * xs, axis=-1, keepdims=True)
    y = 2.0 * xs / d
    y[..., -1] -= 1.0
    return y


def from_ball(y):
    """Inverse of :func:`to_ball`; rejects points within 1e-10 of -e_N (the image of infinity)."""
    y = np.asarray(y, dtype=float)
    ys = _shift(y)
    d = np.sum(ys * ys, axis=-1, keepdims=True)
    if np.any(d < SINGULAR_RADIUS**2):
        raise ValueError("point too close to -e_N, the image of infinity")
    x = 2.0 * ys / d
    x[..., -1] -= 1.0
    return x


def conformal_factor(x):
    """|f'|(x) = 2/|x+e_N|^2."""
    xs = _shift(x)
    return 2.0 / np.sum(xs * xs, axis=-1)


def ball_radius_cyl(rho, t):
    """(|y|, 1-|y|^2, 1-|y|) for x with |x'| = rho, x_N = t, all cancellation-free."""
    D = rho * rho + (1 + t) ** 2
    rb2 = (rho * rho + (1 - t) ** 2) / D
    rb = np.sqrt(rb2)
    om2 = 4 * t / D
    return rb, om2, om2 / (1 + rb)


def pullback_profile(profile, x, N: int | None = None):
    """U(x) = 2^((N-2)/2) |x+e_N|^(2-N) U~(|to_ball(x)|)."""
    x = np.asarray(x, dtype=float)
    if N is None:
        N = profile.params.N
    if x.shape[-1] != N:
        raise ValueError(f"points must have {N} coordinates")
    rho = np.sqrt(np.sum(x[..., :-1] ** 2, axis=-1))
    t = x[..., -1]
    return cylinder_fields(profile, rho, t, N)["U"]


def cylinder_fields(profile, rho, t, N: int | None = None, hat: bool = False):
    """U and its cylindrical gradient (U_rho, U_t) from a ball profile.

    With ``hat=True`` the common factor D^(-(N-2)/2), D = |x+e_N|^2, is left
    out of U, U_rho, U_t and returned as ``logD`` so callers can combine
    powers without overflow.
    """
    if N is None:
        N = profile.params.N
    rho = np.asarray(rho, dtype=float)
    t = np.asarray(t, dtype=float)
    D = rho * rho + (1 + t) ** 2
    rb, _, c = ball_radius_cyl(rho, t)
    ut, _ = profile.evaluate_c(c)
    G = 0.5 * profile.slope_over_r(rb, c)
    k = 2.0 ** ((N - 2) / 2)
    Uh = k * ut
    Urh = k * (-(N - 2) * rho * ut / D + G * 8 * t * rho / D**2)
    Uth = k * (-(N - 2) * (1 + t) * ut / D + G * (-4 / D + 8 * t * (1 + t) / D**2))
    if hat:
        return {"U": Uh, "Ur": Urh, "Ut": Uth, "logD": np.log(D)}
    f = D ** (-(N - 2) / 2)
    return {"U": Uh * f, "Ur": Urh * f, "Ut": Uth * f}
