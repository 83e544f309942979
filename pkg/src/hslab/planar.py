"""Harmonic radius and the conformally invariant quotient on explicit planar domains.

Points are complex numbers z = x1 + i x2.  Each gallery domain carries a
closed-form Riemann map onto the unit disk, and the harmonic radius follows
from the Liouville formula r(z) = (1 - |f(z)|^2)/|f'(z)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import ProblemParams, log_gamma_fn
from .quadrature import QuadratureError, tanh_sinh


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class ConformalDomain:
    """One of: disk, half_plane, strip (0 < x2 < height), sector (0 < arg z < angle)."""

    kind: str
    height: float = 1.0
    angle: float = math.pi / 2

    def __post_init__(self):
        if self.kind not in ("disk", "half_plane", "strip", "sector"):
            raise DomainError(f"unknown domain {self.kind!r}")
        if self.kind == "strip" and not self.height > 0:
            raise DomainError("strip height must be positive")
        if self.kind == "sector" and not 0 < self.angle < 2 * math.pi:
            raise DomainError("sector angle must lie in (0, 2 pi)")

    @property
    def convex(self) -> bool:
        return self.kind != "sector" or self.angle <= math.pi

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return np.abs(z) < 1
        if self.kind == "half_plane":
            return z.imag > 0
        if self.kind == "strip":
            return (z.imag > 0) & (z.imag < self.height)
        th = np.angle(z) % (2 * math.pi)
        return (np.abs(z) > 0) & (th > 0) & (th < self.angle)

    # intermediate map to the upper half-plane (identity for the half-plane itself)
    def _to_hp(self, z):
        if self.kind == "half_plane":
            return z, np.ones_like(z)
        if self.kind == "strip":
            k = math.pi / self.height
            g = np.exp(k * z)
            return g, k * g
        k = math.pi / self.angle
        g = np.exp(k * np.log(z))
        return g, k * g / z

    def _from_hp(self, g):
        if self.kind == "half_plane":
            return g
        if self.kind == "strip":
            return np.log(g) * (self.height / math.pi)
        return np.exp(np.log(g) * (self.angle / math.pi))

    def map(self, z):
        """Riemann map f onto the unit disk and its derivative f'."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return z, np.ones_like(z)
        g, dg = self._to_hp(z)
        f = (g - 1j) / (g + 1j)
        return f, 2j / (g + 1j) ** 2 * dg

    def inverse(self, w):
        w = np.asarray(w, dtype=complex)
        if self.kind == "disk":
            return w
        return self._from_hp(1j * (1 + w) / (1 - w))

    def delta(self, z):
        """Euclidean distance to the boundary."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return 1 - np.abs(z)
        if self.kind == "half_plane":
            return z.imag
        if self.kind == "strip":
            return np.minimum(z.imag, self.height - z.imag)
        rho = np.abs(z)
        th = np.angle(z) % (2 * math.pi)

        def to_ray(d):
            d = np.abs(d)
            return np.where(d <= math.pi / 2, rho * np.sin(np.minimum(d, math.pi / 2)), rho)

        return np.minimum(to_ray(th), to_ray(th - self.angle))

    def closed_form_radius(self, z):
        """Printed/derived radius formulas used as oracles."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return 1 - np.abs(z) ** 2
        if self.kind == "half_plane":
            return 2 * z.imag
        if self.kind == "strip":
            return 2 * self.height / math.pi * np.sin(math.pi * z.imag / self.height)
        th = np.angle(z) % (2 * math.pi)
        return 2 * self.angle / math.pi * np.abs(z) * np.sin(math.pi * th / self.angle)


def make_domain(name: str, **kw) -> ConformalDomain:
    return ConformalDomain(name, **kw)


def harmonic_radius(domain: ConformalDomain, z):
    """(1 - |f|^2)/|f'| at interior points; boundary points are rejected."""
    z = np.asarray(z, dtype=complex)
    if not np.all(domain.contains(z)):
        raise DomainError("harmonic radius needs interior points")
    f, df = domain.map(z)
    if domain.kind == "disk":
        return (1 - np.abs(f) ** 2) / np.abs(df)
    # 1 - |f|^2 = 4 Im(g)/|g+i|^2 for f = (g-i)/(g+i); avoids cancellation near the boundary
    g, dg = domain._to_hp(z)
    return 4 * g.imag / np.abs(g + 1j) ** 2 / np.abs(df)


def radius_bounds_check(domain: ConformalDomain, samples) -> dict:
    """delta <= r everywhere; r <= 2 delta as well on convex domains."""
    z = np.asarray(samples, dtype=complex)
    r = harmonic_radius(domain, z)
    d = domain.delta(z)
    ratio = r / d
    lower_ok = bool(np.all(d <= r * (1 + 1e-12)))
    upper_ok = bool(np.all(r <= 2 * d * (1 + 1e-12))) if domain.convex else None
    return {
        "domain": domain.kind,
        "n": int(z.size),
        "lower_ok": lower_ok,
        "upper_ok": upper_ok,
        "min_ratio": float(ratio.min()),
        "max_ratio": float(ratio.max()),
        "max_half_ratio": float((r / (2 * d)).max()),
        "equality_everywhere": bool(np.allclose(r, 2 * d, rtol=1e-12, atol=0)),
    }


# --- test functions and quadrature --------------------------------------------


@dataclass
class TestFunction2D:
    """A function u(z) with gradient, supported in a star-shaped region about ``center``.

    ``extent(theta)`` returns the support radius along direction theta; when
    ``arc`` is given the support is the sector of angles arc[0] < theta < arc[1].
    """

    __test__ = False  # not a pytest class

    fn: object
    center: complex
    extent: object
    arc: tuple | None = None

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=complex))

    def scaled(self, c: float) -> "TestFunction2D":
        fn = self.fn

        def g(z):
            u, gx, gy = fn(z)
            return c * u, c * gx, c * gy

        return TestFunction2D(g, self.center, self.extent, self.arc)


def bump(center: complex, radius: float, amplitude: float = 1.0) -> TestFunction2D:
    """amplitude * exp(1 - 1/(1 - q)), q = |z - center|^2/radius^2, zero for q >= 1."""
    center = complex(center)

    def fn(z):
        d = z - center
        q = np.abs(d) ** 2 / radius**2
        inside = q < 1
        qq = np.where(inside, q, 0.0)
        u = np.where(inside, amplitude * np.exp(1 - 1 / (1 - qq)), 0.0)
        fac = np.where(inside, -u / (1 - qq) ** 2 * 2 / radius**2, 0.0)
        return u, fac * d.real, fac * d.imag

    return TestFunction2D(fn, center, lambda th: radius * np.ones_like(th))


def half_plane_extremal(p: float, cutoff: float = 50.0) -> TestFunction2D:
    """Explicit half-plane extremal for p = 3 or 4 times a smooth radial cutoff."""
    if abs(p - 3) < 1e-12:
        c, b, e = 4.0, 1.0, 0.0  # (2N)^(N/2) x2 / ((1+x2)^2 + x1^2)
    elif abs(p - 4) < 1e-12:
        c, b, e = math.sqrt(8.0), 0.0, 1.0  # sqrt(8) x2 / (1 + |x|^2)
    else:
        raise ValueError("explicit planar extremals exist for p = 3 and p = 4")
    R = cutoff

    def fn(z):
        x, y = z.real, z.imag
        D = x * x + (y + b) ** 2 + e
        U = c * y / D
        Ux = -2 * c * y * x / D**2
        Uy = c / D - 2 * c * y * (y + b) / D**2
        q = (x * x + y * y) / R**2
        inside = q < 1
        qq = np.where(inside, q, 0.0)
        chi = np.where(inside, np.exp(1 - 1 / (1 - qq)), 0.0)
        dchi = np.where(inside, -chi / (1 - qq) ** 2 * 2 / R**2, 0.0)
        return U * chi, Ux * chi + U * dchi * x, Uy * chi + U * dchi * y

    return TestFunction2D(fn, 0j, lambda th: R * np.ones_like(th), arc=(0.0, math.pi))


def _polar_sum(u: TestFunction2D, integrand, level: int):
    """Polar product rule about u.center: tanh-sinh in radius, trapezoid (or tanh-sinh on arcs) in angle."""
    s, cs, ws = tanh_sinh(level)
    if u.arc is None:
        nth = 8 * 2**level
        th = 2 * math.pi * np.arange(nth) / nth
        wth = np.full(nth, 2 * math.pi / nth)
    else:
        a0, a1 = u.arc
        v, _, wv = tanh_sinh(level)
        th = a0 + (a1 - a0) * v
        wth = (a1 - a0) * wv
    ext = np.asarray(u.extent(th), dtype=float)
    rad = ext[:, None] * s[None, :]
    z = u.center + rad * np.exp(1j * th)[:, None]
    w = wth[:, None] * ext[:, None] * ws[None, :] * rad
    vals = integrand(z.ravel())
    vals = np.asarray(vals).reshape((-1,) + z.shape)
    return np.sum(vals * w[None], axis=(1, 2))


def polar_integrals(u: TestFunction2D, integrand, tol=1e-12, min_level=3, max_level=9):
    """Integrals of the rows of integrand(z) over the support of u, refined until stable."""
    prev = None
    for level in range(2, max_level + 1):
        cur = _polar_sum(u, integrand, level)
        if prev is not None and level >= min_level:
            if np.all(np.abs(cur - prev) <= tol * np.maximum(np.abs(cur), 1e-300)):
                return cur
        prev = cur
    raise QuadratureError(f"planar quadrature not converged (last change {np.abs(cur - prev)})")


def _interior_point(domain: ConformalDomain) -> complex:
    return complex(domain.inverse(np.zeros(1, dtype=complex))[0])


def _check_planar(params: ProblemParams):
    if params.N != 2:
        raise ValueError("planar quotients are implemented for N = 2 only")


def energy_terms(domain: ConformalDomain, u: TestFunction2D, params: ProblemParams, tol=1e-12):
    """(int |grad u|^2, int r^-s |u|^p) over the domain."""
    _check_planar(params)
    s, p = params.s, params.p

    def rows(z):
        val, gx, gy = u(z)
        inside = (np.abs(val) > 0) & domain.contains(z)
        r = harmonic_radius(domain, np.where(inside, z, _interior_point(domain)))
        return np.stack([gx * gx + gy * gy, np.where(inside, r ** (-s) * np.abs(val) ** p, 0.0)])

    e, w = polar_integrals(u, rows, tol)
    return float(e), float(w)


def quotient_J(domain: ConformalDomain, u: TestFunction2D, params: ProblemParams, tol=1e-12) -> float:
    """J[u] = int |grad u|^2 / (int r^-s |u|^p)^(2/p)."""
    e, w = energy_terms(domain, u, params, tol)
    if not w > 0:
        raise ValueError("zero denominator: test function vanishes identically")
    return e / w ** (2 / params.p)


def transport(domain_a: ConformalDomain, domain_b: ConformalDomain, u: TestFunction2D) -> TestFunction2D:
    """u~ = u o F^-1 on B with F = f_B^-1 o f_A (N = 2, so no conformal weight)."""

    def F_inv(w):
        fb, _ = domain_b.map(w)
        return domain_a.inverse(fb)

    def dF_inv(w):
        # (f_A^-1 o f_B)' = f_B'(w) / f_A'(z)
        fb, dfb = domain_b.map(w)
        z = domain_a.inverse(fb)
        _, dfa = domain_a.map(z)
        return dfb / dfa

    def fn(w):
        w = np.asarray(w, dtype=complex)
        z = F_inv(w)
        val, gx, gy = u(z)
        g = dF_inv(w)
        # chain rule for a holomorphic change of variables: grad(u o G) = conj(G') (ux + i uy)
        grad = np.conj(g) * (gx + 1j * gy)
        return val, grad.real, grad.imag

    Fa_c = domain_a.map(np.array([u.center]))[0]
    center_b = complex(domain_b.inverse(Fa_c)[0])
    ext_a = u.extent

    def extent(th):
        th = np.atleast_1d(th)
        out = np.empty(th.shape)
        for i, ang in enumerate(th):
            e = np.exp(1j * ang)

            def gap(rr):
                z = F_inv(np.array([center_b + rr * e]))[0]
                d = z - u.center
                return abs(d) - float(ext_a(np.array([np.angle(d)]))[0])

            hi = 1e-3
            while gap(hi) < 0:
                hi *= 1.5
                inside = domain_b.contains(np.array([center_b + hi * e]))[0]
                if not inside:
                    break
            out[i] = brentq(gap, 0.0, hi, xtol=1e-15, rtol=1e-15) if gap(hi) > 0 else hi
        return out

    return TestFunction2D(fn, center_b, extent, None)


def invariance_check(domain_a, domain_b, u: TestFunction2D, params: ProblemParams, tol=1e-12) -> dict:
    """Relative differences of the Dirichlet energies and weighted p-norms under transport A -> B."""
    _check_planar(params)
    if u.arc is not None:
        raise ValueError("transport needs a compactly supported bump")
    ea, wa = energy_terms(domain_a, u, params, tol)
    ut = transport(domain_a, domain_b, u)
    eb, wb = energy_terms(domain_b, ut, params, tol)
    return {
        "energy_A": ea,
        "energy_B": eb,
        "weighted_A": wa,
        "weighted_B": wb,
        "energy_residual": abs(ea - eb) / abs(ea),
        "weighted_residual": abs(wa - wb) / abs(wa),
    }


def conformal_hardy_check(domain: ConformalDomain, u: TestFunction2D, tol=1e-12) -> dict:
    """Margin int |grad u|^2 - int u^2/r^2 of the conformal Hardy inequality (must be >= 0)."""

    def rows(z):
        val, gx, gy = u(z)
        inside = (np.abs(val) > 0) & domain.contains(z)
        r = harmonic_radius(domain, np.where(inside, z, _interior_point(domain)))
        return np.stack([gx * gx + gy * gy, np.where(inside, val * val / r**2, 0.0)])

    e, h = polar_integrals(u, rows, tol)
    return {"energy": float(e), "hardy": float(h), "margin": float(e - h), "relative_margin": float((e - h) / e)}


def _beta(a, b):
    return math.exp(log_gamma_fn(a) + log_gamma_fn(b) - log_gamma_fn(a + b))


def hardy_half_plane_margin(eps: float, width: float = 1.0) -> dict:
    """Separable near-extremal u = psi(x1) x2^(1/2+eps) (1-x2)^2 on the half-plane.

    Returns the Hardy margin int |grad u|^2 - int u^2/(2 x2)^2 and its size
    relative to the energy.  The x2 factors are Beta integrals (the integrand
    x2^(2 eps - 1) defeats any fixed quadrature as eps -> 0); the x1 factors
    use tanh-sinh.
    """
    from .quadrature import integrate_interval

    a = 0.5 + eps
    L = width
    P0 = integrate_interval(lambda x, lo, hi: (1 - (x / L) ** 2) ** 4, -L, L).value
    P1 = integrate_interval(lambda x, lo, hi: (4 * x / L**2 * (1 - (x / L) ** 2)) ** 2, -L, L).value
    F0 = _beta(2 * a + 1, 5)
    F1 = a * a * _beta(2 * a - 1, 5) - 4 * a * _beta(2 * a, 4) + 4 * _beta(2 * a + 1, 3)
    F2 = 0.25 * _beta(2 * a - 1, 5)
    energy = P1 * F0 + P0 * F1
    hardy = P0 * F2
    return {"energy": energy, "hardy": hardy, "margin": energy - hardy, "relative_margin": (energy - hardy) / energy}
