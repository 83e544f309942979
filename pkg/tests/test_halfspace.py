import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from conftest import closed, shot
from hslab.core import family_params, make_params
from hslab.halfspace import (
    angular_identity_residual,
    curvature_slope,
    discriminant_closed_forms,
    discriminant_report,
    energy_integrals,
    integrate_cylindrical,
    mu_half_space,
    pohozaev_report,
)

MU3_HALF_PLANE = 1.8452701486440282


def test_cylindrical_gaussian():
    par = make_params(3, s=1.0)
    res = integrate_cylindrical(lambda rho, t: np.exp(-(rho**2) - t**2), par, tol=1e-12)
    assert math.isclose(res.value, math.pi**1.5 / 2, rel_tol=1e-12)


def _dblquad_energies(N, c, b, e, p, s):
    """Oracle on (rho, t) with scipy's adaptive Gauss-Kronrod; U = c t D^(-N/2)."""

    def D(r, t):
        return r * r + (t + b) ** 2 + e

    def grad2(t, r):
        d = D(r, t)
        ur = -N * c * t * r * d ** (-N / 2 - 1)
        ut = c * d ** (-N / 2) - N * c * t * (t + b) * d ** (-N / 2 - 1)
        return (ur * ur + ut * ut) * r ** (N - 2)

    def weighted(t, r):
        return t ** (-s) * (c * t * D(r, t) ** (-N / 2)) ** p * r ** (N - 2)

    om = 2.0 if N == 2 else 2 * math.pi ** ((N - 1) / 2) / math.gamma((N - 1) / 2)
    opts = dict(epsabs=0, epsrel=1e-11)
    g = dblquad(grad2, 0, np.inf, 0, np.inf, **opts)[0] * om
    w = dblquad(weighted, 0, np.inf, 0, np.inf, **opts)[0] * om
    return g, w


@pytest.mark.parametrize("N, family", [(2, "2overN"), (2, "4overN"), (3, "2overN"), (3, "4overN")])
def test_energies_against_adaptive_oracle(N, family):
    par, prof = closed(N, family)
    c = (2.0 * N) ** (N / 2) if family == "2overN" else (N * (N + 2.0)) ** (N / 4)
    b, e = (1.0, 0.0) if family == "2overN" else (0.0, 1.0)
    g, w = _dblquad_energies(N, c, b, e, par.p, par.s)
    v = energy_integrals(par, prof)["values"]
    assert math.isclose(v["grad2"], g, rel_tol=1e-8)
    assert math.isclose(v["weighted_p"], w, rel_tol=1e-8)


def test_mu4_half_plane_closed_value():
    # with U = sqrt(8) t/(|x|^2 + 1): int |grad U|^2 = 8 pi/3, so mu_4 = (8 pi/3)^(1/2)
    par, prof = closed(2, "4overN")
    assert math.isclose(mu_half_space(par, prof), math.sqrt(8 * math.pi / 3), rel_tol=1e-12)


def test_mu3_half_plane_both_routes():
    par, prof = closed(2, "2overN")
    rep = mu_half_space(par, prof, report=True)
    assert rep["duality_residual"] < 1e-12
    assert math.isclose(rep["mu"], MU3_HALF_PLANE, rel_tol=1e-12)
    assert math.isclose(rep["mu"], rep["mu_weighted"], rel_tol=1e-12)


@settings(max_examples=12)
@given(st.integers(2, 10), st.sampled_from(["2overN", "4overN"]))
def test_pohozaev_explicit(N, family):
    par, prof = closed(N, family)
    rep = pohozaev_report(par, prof)
    assert max(rep.residual_main, rep.residual_tv1, rep.residual_shear) < 1e-10


@pytest.mark.parametrize("N, s", [(3, 0.5), (3, 1.0), (5, 1.3)])
def test_pohozaev_and_slope_shooting(N, s):
    par, prof = shot(N, s)
    rep = pohozaev_report(par, prof)
    assert max(rep.residual_main, rep.residual_tv1, rep.residual_shear) < 1e-8
    slope = curvature_slope(par, prof)
    assert slope > 0
    assert math.isclose(slope, s / ((N - 1) * par.p) * rep.I2, rel_tol=1e-8)
    assert rep.as_dict()["I2"] == rep.I2


@pytest.mark.parametrize("N", [3, 10, 17, 18, 30])
def test_discriminant_matches_closed_forms(N):
    for fam in ("2overN", "4overN"):
        rep = discriminant_report(family_params(N, fam))
        assert rep.D_rel_err < 1e-10
        assert rep.const_rel_err < 1e-10
        assert math.isclose(rep.D, rep.D_closed_form, rel_tol=1e-10)


def test_discriminant_sign_threshold():
    signs = {N: discriminant_report(family_params(N, "2overN")).D > 0 for N in (16, 17, 18, 19, 40)}
    assert signs == {16: False, 17: False, 18: True, 19: True, 40: True}
    assert all(discriminant_report(family_params(N, "4overN")).D < 0 for N in (3, 18, 40))


def test_discriminant_internal_consistency():
    rep = discriminant_report(family_params(7, "2overN"))
    M = 7 * 7 - 1
    assert math.isclose(rep.D, M / 2 * (rep.lin_coeff**2 / 4 - rep.const_coeff * rep.quad_coeff), rel_tol=1e-12)
    q = rep.const_coeff + rep.lin_coeff * rep.A_star + rep.quad_coeff * rep.A_star**2
    assert math.isclose(q, rep.min_value, rel_tol=1e-10)
    four = discriminant_report(family_params(7, "4overN"))
    assert four.const_alt is not None and four.D_alt is not None
    assert rep.const_alt is None


def test_discriminant_domain_errors():
    with pytest.raises(ValueError):
        discriminant_report(make_params(3, s=1.0))
    with pytest.raises(ValueError):
        discriminant_report(family_params(2, "2overN"))
    with pytest.raises(ValueError):
        discriminant_closed_forms(family_params(2, "4overN"))


@pytest.mark.parametrize("N", [3, 4, 8, 20])
def test_angular_identity(N):
    assert angular_identity_residual(N) < 1e-13
