"""Exponent bookkeeping and a couple of special functions shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

GENERAL = "general"
FAMILY_2N = "explicit_2_over_N"
FAMILY_4N = "explicit_4_over_N"

FAMILY_ALIASES = {
    "2overn": FAMILY_2N,
    "2/n": FAMILY_2N,
    FAMILY_2N: FAMILY_2N,
    "4overn": FAMILY_4N,
    "4/n": FAMILY_4N,
    FAMILY_4N: FAMILY_4N,
}

FAMILY_TOL = 1e-12


class ParameterError(ValueError):
    """Raised when (N, s, p) violate the admissible exponent relations."""


def _as_number(x):
    """Keep exact rationals exact; parse 'a/b' strings; everything else becomes float."""
    if isinstance(x, bool):
        raise ParameterError("exponent must be numeric")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        x = x.strip()
        if "/" in x:
            return Fraction(x)
        return float(x)
    return float(x)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension N with singularity exponent s and power p.

    ``s_exact``/``p_exact`` hold :class:`fractions.Fraction` values whenever
    the inputs were rational, floats otherwise. Use ``s`` and ``p`` for
    arithmetic.
    """

    N: int
    s_exact: Fraction | float
    p_exact: Fraction | float
    family: str = GENERAL

    @property
    def s(self) -> float:
        return float(self.s_exact)

    @property
    def p(self) -> float:
        return float(self.p_exact)

    @property
    def explicit(self) -> bool:
        return self.family != GENERAL

    def critical_exponent(self) -> float:
        """2^*(s) = 2(N-s)/(N-2); only meaningful for N >= 3."""
        if self.N < 3:
            raise ParameterError("2^*(s) is defined for N >= 3 only")
        return 2.0 * (self.N - self.s) / (self.N - 2)

    def as_dict(self) -> dict:
        return {"N": self.N, "s": self.s, "p": self.p, "family": self.family}

    def label(self) -> str:
        return f"N={self.N}, s={self.s_exact}, p={self.p_exact} ({self.family})"


def _detect_family(N, p):
    for fam, target in ((FAMILY_2N, Fraction(2) + Fraction(2, N)), (FAMILY_4N, Fraction(2) + Fraction(4, N))):
        if isinstance(p, Fraction):
            if p == target:
                return fam, target
        elif abs(p - float(target)) <= FAMILY_TOL * float(target):
            return fam, target
    return GENERAL, None


def make_params(N: int, s=None, p=None, *, endpoint: bool = False) -> ProblemParams:
    """Build admissible parameters from ``N`` and exactly one of ``s`` or ``p``.

    For N >= 3 the power is tied to the singularity by p = 2(N-s)/(N-2) with
    s in (0, 2); for N = 2 the singularity is fixed at s = 2 and p > 2.
    ``endpoint=True`` admits the closed ranges s in [0, 2] / p >= 2 used by
    the conformally invariant quotient.
    """
    if isinstance(N, bool) or int(N) != N:
        raise ParameterError(f"dimension must be an integer, got {N!r}")
    N = int(N)
    if N < 2:
        raise ParameterError(f"dimension N={N} must be >= 2")
    if (s is None) == (p is None) and N >= 3:
        raise ParameterError("give exactly one of s or p")

    if N == 2:
        if s is not None and p is None:
            raise ParameterError("for N=2 the power p must be given (s is fixed at 2)")
        if s is not None and float(_as_number(s)) != 2.0:
            raise ParameterError("s out of range: N=2 requires s = 2")
        p = _as_number(p)
        if not (p > 2 or (endpoint and p == 2)):
            raise ParameterError(f"p out of range: N=2 requires p > 2, got {p}")
        s = Fraction(2)
    elif s is not None:
        s = _as_number(s)
        ok = (0 < s < 2) or (endpoint and 0 <= s <= 2)
        if not ok:
            raise ParameterError(f"s out of range: need 0 < s < 2 for N={N}, got {s}")
        p = Fraction(2 * (N - s), N - 2) if isinstance(s, Fraction) else 2.0 * (N - s) / (N - 2)
    else:
        p = _as_number(p)
        lo, hi = 2, Fraction(2 * N, N - 2)
        ok = (lo < p < hi) or (endpoint and lo <= p <= hi)
        if not ok:
            raise ParameterError(f"p out of range: need 2 < p < {float(hi)} for N={N}, got {p}")
        s = N - p * Fraction(N - 2, 2) if isinstance(p, Fraction) else N - p * (N - 2) / 2.0

    family, exact_p = _detect_family(N, p)
    if exact_p is not None:
        p = exact_p
        if N >= 3:
            s = N - exact_p * Fraction(N - 2, 2)
    return ProblemParams(N=N, s_exact=s, p_exact=p, family=family)


def family_params(N: int, family: str) -> ProblemParams:
    """Parameters of one of the two explicitly solvable families."""
    fam = FAMILY_ALIASES.get(family.lower() if family not in FAMILY_ALIASES else family)
    if fam is None:
        raise ParameterError(f"unknown family {family!r}")
    k = 2 if fam == FAMILY_2N else 4
    return make_params(N, p=Fraction(2) + Fraction(k, N))


# Lanczos approximation, g = 7, nine terms (relative error ~1e-15 for x >= 0.5)
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos_sum(z):
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (z + i)
    return acc


def log_gamma_fn(x: float) -> float:
    """log Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"log_gamma_fn requires x > 0, got {x}")
    if x < 0.5:
        return log_gamma_fn(x + 1.0) - math.log(x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma_fn(x: float) -> float:
    """Gamma(x) for real x > 0."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma_fn requires x > 0, got {x}")
    if x < 0.5:
        return gamma_fn(x + 1.0) / x
    if x > 140.0:
        return math.exp(log_gamma_fn(x))
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _lanczos_sum(z)


def sphere_area(m: int) -> float:
    """Surface measure of the unit m-sphere S^m in R^{m+1}; S^0 counts two points."""
    if isinstance(m, bool) or int(m) != m or m < 0:
        raise ValueError(f"sphere dimension must be a non-negative integer, got {m!r}")
    m = int(m)
    return 2.0 * math.pi ** ((m + 1) / 2.0) / gamma_fn((m + 1) / 2.0)


def harmonic_dimension(N: int, k: int) -> int:
    """Number of linearly independent degree-k spherical harmonics on S^{N-1}."""
    if k == 0:
        return 1
    return math.comb(k + N - 1, N - 1) - math.comb(k + N - 3, N - 1)
