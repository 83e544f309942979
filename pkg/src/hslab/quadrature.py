"""Tanh-sinh rules on [0, 1] and a compactified product rule on the quarter plane."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

TAU_MAX = 4.0  # x(1-x) ~ 1e-37 at the ends; integrands here vanish long before that


class QuadratureError(RuntimeError):
    """Refinement did not reach the requested tolerance."""


@dataclass
class IntegralResult:
    """Quadrature value with an a posteriori error estimate.

    ``truncation_radius`` is ``inf`` for the compactified rules: the
    half-line is mapped onto [0, 1) and nothing is cut off.
    """

    value: float | np.ndarray
    error_estimate: float | np.ndarray
    truncation_radius: float
    refinement_levels: int

    def __float__(self):
        return float(self.value)


def tanh_sinh(level: int, tau_max: float = TAU_MAX):
    """Nodes x, complements 1 - x and weights of the level-``level`` rule on [0, 1].

    Step h = 2**-level in the tanh-sinh variable.  Complements are formed
    directly so that endpoint singular factors can be evaluated without
    cancellation.
    """
    h = 2.0**-level
    n = int(math.ceil(tau_max / h))
    tau = h * np.arange(-n, n + 1)
    z = math.pi * np.sinh(tau)
    x = expit(z)
    cx = expit(-z)
    w = h * math.pi * np.cosh(tau) * x * cx
    return x, cx, w


def gauss_legendre01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def quarter_plane_nodes(level: int):
    """Polar product nodes (rho, t, weight) covering (0, inf)^2.

    R = u/(1-u) and phi = (pi/2) v with (u, v) tanh-sinh nodes; the weight
    includes the polar Jacobian R dR dphi.
    """
    u, cu, wu = tanh_sinh(level)
    v, cv, wv = tanh_sinh(level)
    R = u / cu
    dR = wu / (cu * cu)
    half_pi = 0.5 * math.pi
    sinp = np.sin(half_pi * v)
    cosp = np.sin(half_pi * cv)  # cos(pi v / 2) via the complement
    rho = R[:, None] * cosp[None, :]
    t = R[:, None] * sinp[None, :]
    w = (R * dR)[:, None] * (half_pi * wv)[None, :]
    return rho.ravel(), t.ravel(), w.ravel()


ROUNDING_FACTOR = 256


def integrate_quarter_plane(g, tol=1e-10, min_level=3, max_level=7, abs_floor=0.0) -> IntegralResult:
    """Integrate g(rho, t) over the open quarter plane (no measure added).

    ``g`` may return shape (npts,) or (k, npts) for k integrands evaluated
    together.  Levels are refined until successive values agree to ``tol``
    relative (componentwise, floored by ``abs_floor``).
    """
    prev = None
    err = None
    for level in range(1, max_level + 1):
        rho, t, w = quarter_plane_nodes(level)
        vals = np.asarray(g(rho, t), dtype=float)
        vals = np.where(np.isfinite(vals), vals, np.nan)
        if np.isnan(vals).any():
            raise QuadratureError("integrand returned non-finite values")
        cur = vals @ w if vals.ndim == 2 else float(vals @ w)
        if prev is not None:
            err = np.abs(np.asarray(cur) - np.asarray(prev))
            scale = np.maximum(np.abs(np.asarray(cur)), abs_floor)
            # changes at the rounding level of the sum itself count as converged
            noise = ROUNDING_FACTOR * np.finfo(float).eps * (np.abs(vals) @ w)
            if level >= min_level and np.all(err <= np.maximum(tol * scale, noise)):
                return IntegralResult(cur, err if np.ndim(err) else float(err), math.inf, level)
        prev = cur
    raise QuadratureError(f"quarter-plane quadrature not converged after level {max_level}; last change {err}")


def integrate_interval(f, a, b, tol=1e-12, max_level=9):
    """Tanh-sinh on [a, b]; ``f`` receives (x, x - a, b - x)."""
    prev = None
    for level in range(1, max_level + 1):
        x, cx, w = tanh_sinh(level)
        L = b - a
        xs = a + L * x
        val = float(np.asarray(f(xs, L * x, L * cx)) @ (w * L))
        if prev is not None and level >= 3 and abs(val - prev) <= tol * max(abs(val), 1e-300):
            return IntegralResult(val, abs(val - prev), math.inf, level)
        prev = val
    raise QuadratureError("interval quadrature not converged")
