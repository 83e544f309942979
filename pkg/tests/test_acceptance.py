"""Acceptance criteria, each at its stated tolerance.

Every test records one ``CRITERION n: PASS|FAIL`` line; the lines are echoed
at the end of the pytest run and by ``python tests/test_acceptance.py``.
"""

import functools
import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))
import conftest  # noqa: E402

from hslab.core import family_params, make_params  # noqa: E402
from hslab.fem2d import domain_gallery, refine_study, richardson_estimate  # noqa: E402
from hslab.halfspace import discriminant_report, energy_integrals, mu_half_space, pohozaev_report  # noqa: E402
from hslab.planar import bump, harmonic_radius, invariance_check, make_domain, radius_bounds_check  # noqa: E402
from hslab.radial import closed_form_profile, profile_for, shoot  # noqa: E402
from hslab.spectral import eigenfunction_similarity, nondegeneracy_certificate  # noqa: E402

FAMILIES = ("2overN", "4overN")
SHOOTING_CASES = [(3, 0.5), (3, 1.0), (3, 1.5), (4, 1.0), (5, 0.5)]


def _record(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@functools.lru_cache(maxsize=None)
def criterion_1():
    r = np.linspace(0.0, 1.0, 2001)
    worst, slowest = 0.0, 0.0
    for N in (2, 3, 4, 5, 10):
        for fam in FAMILIES:
            par = family_params(N, fam)
            ref = closed_form_profile(par)
            t0 = time.perf_counter()
            got = shoot(par, tol=1e-9)
            slowest = max(slowest, time.perf_counter() - t0)
            worst = max(worst, float(np.max(np.abs(got.evaluate(r)[0] - ref.evaluate(r)[0]))))
    ok = worst <= 1e-7 and slowest <= 10
    return ok, f"max|U_shoot - U_closed| = {worst:.2e} (tol 1e-7), slowest case {slowest:.2f} s (limit 10 s)"


def _pohozaev_cases():
    cases = [(family_params(N, fam), 1e-6) for fam in FAMILIES for N in range(2, 11)]
    cases += [(make_params(N, s=s), 1e-4) for N, s in SHOOTING_CASES]
    return cases


@functools.lru_cache(maxsize=None)
def criterion_2():
    t0 = time.perf_counter()
    worst = {1e-6: 0.0, 1e-4: 0.0}
    ok = True
    for par, tol in _pohozaev_cases():
        rep = pohozaev_report(par, profile_for(par, tol=1e-9))
        res = max(rep.residual_main, rep.residual_tv1, rep.residual_shear)
        worst[tol] = max(worst[tol], res)
        ok &= res < tol
    dt = time.perf_counter() - t0
    ok &= dt <= 60
    return ok, (f"explicit families N=2..10 max residual {worst[1e-6]:.2e} (tol 1e-6); "
                f"{len(SHOOTING_CASES)} shooting cases max {worst[1e-4]:.2e} (tol 1e-4); {dt:.1f} s (limit 60 s)")


@functools.lru_cache(maxsize=None)
def criterion_3():
    worst, smallest, ok = 0.0, math.inf, True
    for par, _ in _pohozaev_cases():
        if par.N < 3:
            continue
        v = energy_integrals(par, profile_for(par, tol=1e-9))["values"]
        slope = v["I1"] + 2 / par.p * v["I2"]
        expected = par.s / ((par.N - 1) * par.p) * v["I2"]
        rel = abs(slope - expected) / abs(expected)
        worst, smallest = max(worst, rel), min(smallest, slope)
        ok &= rel <= 1e-6 and slope > 0
    return ok, f"slope identity max rel err {worst:.2e} (tol 1e-6), min slope {smallest:.4g} > 0"


@functools.lru_cache(maxsize=None)
def criterion_4():
    t0 = time.perf_counter()
    rows = {fam: {N: discriminant_report(family_params(N, fam)) for N in range(3, 41)} for fam in FAMILIES}
    dt = time.perf_counter() - t0
    two, four = rows["2overN"], rows["4overN"]
    signs_2 = all((two[N].D < 0) == (N <= 17) and two[N].D != 0 for N in two)
    signs_4 = all(four[N].D < 0 for N in four)
    spot = max(rows[f][N].D_rel_err for f in FAMILIES for N in (10, 17, 18, 30))
    ok = signs_2 and signs_4 and spot <= 1e-6 and dt <= 120
    first_pos = min((N for N in two if two[N].D > 0), default=None)
    return ok, (f"2+2/N first D>0 at N={first_pos}, 2+4/N all D<0: {signs_4}; "
                f"spot rel err {spot:.2e} (tol 1e-6); {dt:.1f} s (limit 120 s)")


@functools.lru_cache(maxsize=None)
def criterion_5():
    t0 = time.perf_counter()
    ok, worst, min_sim, min_margin = True, 0.0, 1.0, math.inf
    for N in (2, 3, 4):
        for fam in FAMILIES:
            par = family_params(N, fam)
            prof = closed_form_profile(par)
            cert = nondegeneracy_certificate(par, prof, k_max=2, n_grid=800, tol=1e-4)
            rows = cert["rows"]
            e0 = abs(rows[0]["lambda1"] - 1)
            e1 = abs(rows[1]["lambda1"] - (par.p - 1))
            sim = abs(eigenfunction_similarity(par, prof, 1, n_grid=800))
            margin = rows[2]["margin"]
            worst, min_sim, min_margin = max(worst, e0, e1), min(min_sim, sim), min(min_margin, margin)
            ok &= e0 <= 1e-4 and e1 <= 1e-4 and sim > 0.999 and margin > 0
    dt = time.perf_counter() - t0
    ok &= dt <= 60
    return ok, (f"|lambda - target| max {worst:.2e} (tol 1e-4), xi similarity min {min_sim:.8f} (> 0.999), "
                f"k=2 margin min {min_margin:.4f} (> 0); {dt:.1f} s (limit 60 s)")


def _samples(kind, n, rng):
    if kind == "disk":
        rad = np.sqrt(rng.uniform(0, 0.999, n))
        return rad * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    if kind == "half_plane":
        return rng.uniform(-5, 5, n) + 1j * rng.uniform(1e-3, 5, n)
    if kind == "strip":
        return rng.uniform(-3, 3, n) + 1j * rng.uniform(1e-3, 1 - 1e-3, n)
    rad = rng.uniform(1e-2, 3, n)
    return rad * np.exp(0.5j * np.pi * rng.uniform(1e-3, 1 - 1e-3, n))


@functools.lru_cache(maxsize=None)
def criterion_6():
    t0 = time.perf_counter()
    par = make_params(2, p=3)
    hp, dk, st = make_domain("half_plane"), make_domain("disk"), make_domain("strip", height=1.0)
    worst_inv = 0.0
    for a, b, bumps in ((hp, dk, [(0.3 + 1.2j, 0.8), (-1 + 2j, 1.5), (0.5 + 0.4j, 0.3)]),
                        (st, hp, [(0.2 + 0.5j, 0.4), (-1 + 0.3j, 0.25), (2 + 0.6j, 0.35)])):
        for c, r in bumps:
            res = invariance_check(a, b, bump(c, r), par)
            worst_inv = max(worst_inv, res["energy_residual"], res["weighted_residual"])
    rng = np.random.default_rng(6)
    oracles = {
        "disk": (dk, lambda z: 1 - np.abs(z) ** 2, 1e-12),
        "half_plane": (hp, lambda z: 2 * z.imag, 1e-12),
        "strip": (st, lambda z: 2 / np.pi * np.sin(np.pi * z.imag), 1e-10),
    }
    ok = worst_inv < 1e-8
    parts = [f"invariance max {worst_inv:.2e} (tol 1e-8)"]
    for kind, (dom, fn, tol) in oracles.items():
        z = _samples(kind, 200, rng)
        err = float(np.max(np.abs(harmonic_radius(dom, z) / fn(z) - 1)))
        ok &= err <= tol
        parts.append(f"{kind} radius {err:.1e} (tol {tol:.0e})")
    dt = time.perf_counter() - t0
    ok &= dt <= 10
    return ok, ", ".join(parts) + f"; {dt:.1f} s (limit 10 s)"


@functools.lru_cache(maxsize=None)
def criterion_7():
    rng = np.random.default_rng(7)
    doms = [make_domain("disk"), make_domain("half_plane"), make_domain("strip", height=1.0),
            make_domain("sector", angle=math.pi / 2)]
    ok, parts = True, []
    for dom in doms:
        rb = radius_bounds_check(dom, _samples(dom.kind, 200, rng))
        eq_ok = rb["equality_everywhere"] == (dom.kind == "half_plane")
        ok &= rb["lower_ok"] and rb["upper_ok"] and eq_ok
        parts.append(f"{dom.kind} r/delta in [{rb['min_ratio']:.4f}, {rb['max_ratio']:.4f}]")
    return ok, "; ".join(parts) + "; ratio == 2 (r = 2 delta) on the half-plane only"


@functools.lru_cache(maxsize=None)
def criterion_8():
    t0 = time.perf_counter()
    par = make_params(2, p=3)
    ref = mu_half_space(par, profile_for(par, tol=1e-10), report=True)
    mu3 = ref["mu"]
    dual = abs(ref["mu"] - ref["mu_weighted"]) / ref["mu"]
    ok = dual < 1e-6
    parts = [f"mu_3 = {mu3:.10f} (dual agreement {dual:.1e})"]
    solver_tol = 1e-8
    for name in ("square", "disk", "kidney"):
        rows, _ = refine_study(domain_gallery(name, 256), par, [0.08, 0.04, 0.02])
        mus = [r.mu_h for r in rows]
        mono = all(b < a for a, b in zip(mus, mus[1:]))
        ok &= mono
        if name == "kidney":
            est = richardson_estimate(mus)
            bound = mu3 - 3 * est["error"]
            ok &= mus[-1] < bound
            parts.append(f"kidney mu_h {mus[-1]:.6f} < {bound:.6f} (rate {est['rate']:.2f}, err {est['error']:.4f})")
        else:
            above = min(mus) >= mu3 - solver_tol
            ok &= above
            parts.append(f"{name} min mu_h {min(mus):.6f} >= mu_3")
        if not mono:
            parts.append(f"{name} not monotone: {mus}")
    dt = time.perf_counter() - t0
    ok &= dt <= 600
    return ok, "; ".join(parts) + f"; {dt:.0f} s (limit 600 s)"


def criterion_9():
    ok4, ok5 = criterion_4()[0], criterion_5()[0]
    return ok4 and ok5, ("large-N and blow-up claims covered by substitutes: "
                         f"closed-form/quadrature identities (criterion 4: {ok4}), "
                         f"non-degeneracy (criterion 5: {ok5})")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n):
    ok, detail = CRITERIA[n - 1]()
    assert _record(n, ok, detail), detail


if __name__ == "__main__":
    results = [_record(i + 1, *fn()) for i, fn in enumerate(CRITERIA)]
    sys.exit(0 if all(results) else 1)
