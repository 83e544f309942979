"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 solver failure,
3 non-convergence of the planar minimizer, 64 bad usage.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import FAMILY_ALIASES, ParameterError, family_params, make_params
from .report import csv_text, fmt_float, load_config, profile_table, to_json, write_text

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_SOLVER = 2
EXIT_NOCONV = 3
EXIT_USAGE = 64

SUITES = ("pohozaev", "discriminant", "spectrum", "planar")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- helpers ----------------------------------------------------------------------


def _out_dir(args) -> Path:
    d = args.out_dir or os.environ.get("HSLAB_OUT") or "."
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _target(args, default_name: str) -> Path:
    if args.output:
        p = Path(args.output)
        return p if p.is_absolute() else _out_dir(args) / p
    return _out_dir(args) / default_name


def _tag(x) -> str:
    """Shortest round-trip text of a float, for file names."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def _params(args):
    fam = getattr(args, "family", None)
    if fam:
        if fam.lower() not in FAMILY_ALIASES and fam not in FAMILY_ALIASES:
            raise UsageError(f"unknown family {fam!r}")
        if args.dim is None:
            raise UsageError("--family needs --dim")
        return family_params(args.dim, fam)
    if args.dim is None:
        raise UsageError("--dim is required")
    return make_params(args.dim, s=args.s, p=args.p)


def _check(name, value, tol, passed=None, **extra):
    ok = bool(value < tol) if passed is None else bool(passed)
    row = {"name": name, "value": float(value), "tolerance": float(tol), "passed": ok}
    row.update(extra)
    return row


def _emit_report(args, stem, report, table=None):
    """Write the report (json or csv) and print one line per check."""
    fmt = args.format
    path = _target(args, f"{stem}.{fmt}")
    if fmt == "json":
        write_text(path, to_json(report) + "\n")
    else:
        rows = [(c["name"], c["value"], c["tolerance"], c["passed"]) for c in report["checks"]]
        write_text(path, csv_text(["name", "value", "tolerance", "passed"], rows))
        if table:
            keys = list(table[0].keys())
            tpath = path.with_name(path.stem + "-table.csv")
            write_text(tpath, csv_text(keys, [[r[k] for k in keys] for r in table]))
    if not args.quiet:
        for c in report["checks"]:
            flag = "ok  " if c["passed"] else "FAIL"
            print(f"{flag} {c['name']}: {fmt_float(c['value'])} (tol {fmt_float(c['tolerance'])})")
        print(f"report: {path}")
    failing = [c for c in report["checks"] if not c["passed"]]
    if failing:
        print(f"FAILED: {failing[0]['name']}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# --- commands ---------------------------------------------------------------------


def cmd_solve_radial(args) -> int:
    from .radial import ShootingError, closed_form_profile, ode_residual, shoot

    params = _params(args)
    try:
        prof = closed_form_profile(params)
        if prof is None:
            prof = shoot(params, tol=args.tol)
        res = prof.info.get("residual")
        if res is None:
            res = ode_residual(prof)
            prof.info["residual"] = res
    except ShootingError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if not res < args.tol:
        print(f"solver failure: residual {fmt_float(res)} >= tol {fmt_float(args.tol)}", file=sys.stderr)
        return EXIT_SOLVER
    r = np.linspace(0.0, 1.0, args.points)
    fmt = args.format
    path = _target(args, f"profile-N{params.N}.{fmt}")
    if fmt == "txt":
        write_text(path, profile_table(prof, r))
    elif fmt == "csv":
        u, du = prof.evaluate(r)
        write_text(path, csv_text(["r", "U", "dU"], zip(r, u, du)))
    else:
        u, du = prof.evaluate(r)
        body = {
            "params": params.as_dict(),
            "source": prof.source,
            "shoot_param": prof.shoot_param,
            "boundary_slope": prof.boundary_slope,
            "residual": res,
            "r": r,
            "U": u,
            "dU": du,
        }
        write_text(path, to_json(body) + "\n")
    if not args.quiet:
        print(f"{params.label()} source={prof.source} residual={fmt_float(res)}")
        print(f"profile: {path}")
    return EXIT_OK


def _verify_pohozaev(args):
    from .halfspace import pohozaev_report
    from .radial import profile_for

    params = _params(args)
    prof = profile_for(params, tol=min(1e-9, max(args.tol, 1e-11)))
    rep = pohozaev_report(params, prof)
    checks = [
        _check("residual_main", rep.residual_main, args.tol),
        _check("residual_tv1", rep.residual_tv1, args.tol),
        _check("residual_shear", rep.residual_shear, args.tol),
    ]
    if params.N >= 3:
        slope = rep.I1 + 2 / params.p * rep.I2
        expected = params.s / ((params.N - 1) * params.p) * rep.I2
        checks.append(_check("curvature_slope_identity", abs(slope - expected) / abs(expected), args.tol))
        checks.append(_check("curvature_slope_positive", slope, 0.0, passed=slope > 0))
    body = {"suite": "pohozaev", "params": params.as_dict(), "source": prof.source, "I1": rep.I1, "I2": rep.I2}
    return f"verify-pohozaev-N{params.N}", body, checks, None


def _scan_range(text):
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError as exc:
        raise UsageError(f"bad --scan {text!r}; expected LO..HI") from exc
    if lo < 3 or hi < lo:
        raise UsageError("--scan needs 3 <= LO <= HI")
    return range(lo, hi + 1)


def _disc_row(job):
    from .halfspace import discriminant_report

    N, fam = job
    return discriminant_report(family_params(N, fam)).as_dict()


def _verify_discriminant(args):
    if not args.family:
        raise UsageError("verify discriminant needs --family")
    Ns = _scan_range(args.scan)
    jobs = [(N, args.family) for N in Ns]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_disc_row, jobs))
    else:
        rows = [_disc_row(j) for j in jobs]
    table, checks = [], []
    threshold = None
    prev = None
    for row in rows:
        sign = 1 if row["D"] > 0 else -1
        if prev is not None and sign != prev and threshold is None:
            threshold = row["N"]
        prev = sign
        same = (row["D"] > 0) == (row["D_closed_form"] > 0)
        table.append(
            {
                "N": row["N"],
                "D": row["D"],
                "D_closed_form": row["D_closed_form"],
                "D_rel_err": row["D_rel_err"],
                "const_rel_err": row["const_rel_err"],
                "sign": "+" if sign > 0 else "-",
                "threshold": False,
            }
        )
        checks.append(_check(f"D_rel_err[N={row['N']}]", row["D_rel_err"], args.tol))
        checks.append(_check(f"sign_agrees[N={row['N']}]", 0.0, 0.0, passed=same))
    for t in table:
        t["threshold"] = t["N"] == threshold
    fam = rows[0]["family"]
    body = {"suite": "discriminant", "family": fam, "threshold_N": threshold, "rows": table}
    if not args.quiet:
        for t in table:
            mark = "  <- sign change" if t["threshold"] else ""
            print(f"N={t['N']:3d} D={fmt_float(t['D'])} ({t['sign']}){mark}")
    return f"verify-discriminant-{fam}", body, checks, table


def _verify_spectrum(args):
    from .radial import profile_for
    from .spectral import eigenfunction_similarity, nondegeneracy_certificate

    params = _params(args)
    prof = profile_for(params, tol=1e-9)
    cert = nondegeneracy_certificate(params, prof, k_max=args.kmax, n_grid=args.n_grid, tol=args.tol)
    p = params.p
    rows = cert["rows"]
    checks = [
        _check("lambda1_k0_minus_1", abs(rows[0]["lambda1"] - 1), args.tol),
        _check("lambda1_k1_minus_p_minus_1", abs(rows[1]["lambda1"] - (p - 1)), args.tol),
        _check("k2_margin_positive", cert["k2_margin"], 0.0, passed=cert["k2_margin"] > 0),
        _check("multiplicity_equals_N", cert["multiplicity_at_p_minus_1"], params.N,
               passed=cert["multiplicity_at_p_minus_1"] == params.N),
        _check("certified", float(cert["certified"]), 1.0, passed=cert["certified"]),
    ]
    if params.N >= 2:
        sim = eigenfunction_similarity(params, prof, 1, n_grid=args.n_grid)
        checks.append(_check("xi_cosine_similarity", sim, 0.999, passed=sim > 0.999))
    table = [
        {"k": r["k"], "mu_k": r["mu_k"], "lambda1": r["lambda1"], "lambda2": r["lambda2"], "margin": r["margin"],
         "multiplicity": r["multiplicity"]}
        for r in rows
    ]
    body = {"suite": "spectrum", "params": params.as_dict(), "p_minus_1": p - 1, "rows": table}
    if not args.quiet:
        for r in table:
            print(f"k={r['k']} lambda1={fmt_float(r['lambda1'])} lambda2={fmt_float(r['lambda2'])}")
    return f"verify-spectrum-N{params.N}", body, checks, table


def _planar_samples(dom, n, rng):
    if dom.kind == "disk":
        rad = 0.999 * np.sqrt(rng.random(n))
        return rad * np.exp(2j * np.pi * rng.random(n))
    if dom.kind == "half_plane":
        return rng.uniform(-5, 5, n) + 1j * rng.uniform(1e-3, 5, n)
    if dom.kind == "strip":
        return rng.uniform(-3, 3, n) + 1j * dom.height * rng.uniform(1e-3, 1 - 1e-3, n)
    rad = rng.uniform(1e-2, 3, n)
    return rad * np.exp(1j * dom.angle * rng.uniform(1e-3, 1 - 1e-3, n))


def planar_checks(tol=1e-8, n_samples=200, seed=20240611):
    from .planar import bump, conformal_hardy_check, harmonic_radius, invariance_check, make_domain, radius_bounds_check

    par = make_params(2, p=3)
    hp, dk, st = make_domain("half_plane"), make_domain("disk"), make_domain("strip", height=1.0)
    checks = []
    pairs = [
        ("half_plane->disk", hp, dk, [(0.3 + 1.2j, 0.8), (-1 + 2j, 1.5), (0.5 + 0.4j, 0.3)]),
        ("strip->half_plane", st, hp, [(0.2 + 0.5j, 0.4), (-1 + 0.3j, 0.25), (2 + 0.6j, 0.35)]),
    ]
    for label, a, b, bumps in pairs:
        for i, (c, r) in enumerate(bumps):
            res = invariance_check(a, b, bump(c, r), par)
            checks.append(_check(f"invariance[{label}, bump {i}] energy", res["energy_residual"], tol))
            checks.append(_check(f"invariance[{label}, bump {i}] weighted", res["weighted_residual"], tol))
    rng = np.random.default_rng(seed)
    sector = make_domain("sector", angle=math.pi / 2)
    for dom, rtol in ((dk, 1e-12), (hp, 1e-12), (st, 1e-10), (sector, 1e-10)):
        z = _planar_samples(dom, n_samples, rng)
        err = np.max(np.abs(harmonic_radius(dom, z) / dom.closed_form_radius(z) - 1))
        checks.append(_check(f"radius_closed_form[{dom.kind}]", err, rtol))
    for dom in (dk, hp, st, sector):
        z = _planar_samples(dom, n_samples, rng)
        rb = radius_bounds_check(dom, z)
        checks.append(_check(f"delta<=r[{dom.kind}]", rb["min_ratio"], 1.0, passed=rb["lower_ok"]))
        checks.append(_check(f"r<=2delta[{dom.kind}]", rb["max_ratio"], 2.0, passed=rb["upper_ok"]))
        want_eq = dom.kind == "half_plane"
        checks.append(_check(f"equality_r=2delta[{dom.kind}]", float(rb["equality_everywhere"]), float(want_eq),
                             passed=rb["equality_everywhere"] == want_eq))
    hc = conformal_hardy_check(dk, bump(0.1 + 0.1j, 0.8))
    checks.append(_check("conformal_hardy_margin[disk]", hc["margin"], 0.0, passed=hc["margin"] >= 0))
    return checks


def _verify_planar(args):
    checks = planar_checks(tol=args.tol, n_samples=args.samples)
    return "verify-planar", {"suite": "planar"}, checks, None


_VERIFY = {
    "pohozaev": _verify_pohozaev,
    "discriminant": _verify_discriminant,
    "spectrum": _verify_spectrum,
    "planar": _verify_planar,
}

_DEFAULT_TOL = {"pohozaev": 1e-6, "discriminant": 1e-6, "spectrum": 1e-4, "planar": 1e-8}


def cmd_verify(args) -> int:
    from .halfspace import IdentityError
    from .quadrature import QuadratureError
    from .radial import ShootingError
    from .spectral import SpectralError

    if args.tol is None:
        args.tol = _DEFAULT_TOL[args.suite]
    try:
        stem, body, checks, table = _VERIFY[args.suite](args)
    except IdentityError as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ShootingError, SpectralError, QuadratureError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    body["checks"] = checks
    body["passed"] = all(c["passed"] for c in checks)
    return _emit_report(args, stem, body, table)


def reference_mu(p: float) -> dict:
    """mu_p of the half-plane with both evaluation routes."""
    from .halfspace import mu_half_space
    from .radial import profile_for

    par = make_params(2, p=p)
    return mu_half_space(par, profile_for(par, tol=1e-10), report=True)


def cmd_minimize(args) -> int:
    from .fem2d import GALLERY, FemConvergenceError, FemError, SolverOptions, domain_gallery, minimize_quotient, write_mesh
    from .radial import ShootingError

    if args.domain not in GALLERY:
        raise UsageError(f"unknown domain {args.domain!r}; choose from {', '.join(GALLERY)}")
    params = make_params(2, p=args.p)
    domain = domain_gallery(args.domain, args.resolution)
    opts = SolverOptions(tol=args.tol, max_iter=args.max_iter)
    stem = f"minimize-{args.domain}-p{_tag(params.p)}-h{_tag(args.h)}"
    out = _out_dir(args)
    try:
        sol = minimize_quotient(domain, params, args.h, opts)
    except FemConvergenceError as exc:
        write_text(out / f"{stem}-trace.csv", csv_text(["iteration", "quotient"], enumerate(exc.trace)))
        print(f"non-convergence: {exc} (trace in {out / (stem + '-trace.csv')})", file=sys.stderr)
        return EXIT_NOCONV
    except FemError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        ref = reference_mu(params.p)
    except ShootingError as exc:
        print(f"solver failure (reference profile): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    gap = sol.mu_h - ref["mu"]
    write_mesh(out / f"{stem}-solution.txt", sol.mesh, sol.u)
    write_text(out / f"{stem}-trace.csv", csv_text(["iteration", "quotient"], sol.trace_rows()))
    summary = {
        "domain": args.domain,
        "p": params.p,
        "h": args.h,
        "mu_h": sol.mu_h,
        "reference": ref["mu"],
        "gap": gap,
        "iterations": sol.iterations,
        "el_residual": sol.residual,
        "nodes": sol.mesh.n_nodes,
    }
    path = _target(args, f"{stem}-summary.{args.format}")
    if args.format == "json":
        write_text(path, to_json(summary) + "\n")
    else:
        write_text(path, csv_text(list(summary), [list(summary.values())]))
    if not args.quiet:
        print(f"domain={args.domain} p={fmt_float(params.p)} h={fmt_float(args.h)} mu_h={fmt_float(sol.mu_h)} "
              f"reference={fmt_float(ref['mu'])} gap={fmt_float(gap)}")
        print(f"summary: {path}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="INI file; flags override its values")
    p.add_argument("--out-dir", help="output directory (default $HSLAB_OUT or .)")
    p.add_argument("-o", "--output", help="output file (relative paths go under the output directory)")
    p.add_argument("--format", choices=("json", "csv", "txt"), default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker processes for scans")
    p.add_argument("-q", "--quiet", action="store_true", default=None)


def _param_flags(p):
    p.add_argument("--dim", type=int)
    p.add_argument("--s")
    p.add_argument("--p")
    p.add_argument("--family")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hslab", description="Hardy-Sobolev extremal laboratory")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sr = sub.add_parser("solve-radial", help="radial extremal on the unit ball")
    _param_flags(sr)
    sr.add_argument("--tol", type=float)
    sr.add_argument("--points", type=int)
    _common(sr)

    vf = sub.add_parser("verify", help="run a verification suite")
    vf.add_argument("suite", choices=SUITES)
    _param_flags(vf)
    vf.add_argument("--tol", type=float)
    vf.add_argument("--scan", help="dimension range LO..HI (discriminant)")
    vf.add_argument("--kmax", type=int)
    vf.add_argument("--n-grid", type=int)
    vf.add_argument("--samples", type=int)
    _common(vf)

    mn = sub.add_parser("minimize", help="minimize the planar quotient on a gallery domain")
    mn.add_argument("--domain")
    mn.add_argument("--p")
    mn.add_argument("--h", type=float)
    mn.add_argument("--tol", type=float)
    mn.add_argument("--max-iter", type=int)
    mn.add_argument("--resolution", type=int)
    _common(mn)
    return parser


_DEFAULTS = {
    "format": "json",
    "jobs": 1,
    "quiet": False,
    "tol": None,
    "points": 201,
    "scan": "3..40",
    "kmax": 4,
    "n_grid": 800,
    "samples": 200,
    "domain": None,
    "p": None,
    "h": 0.02,
    "max_iter": 4000,
    "resolution": 256,
}

_CONFIG_TYPES = {"dim": int, "tol": float, "points": int, "kmax": int, "n_grid": int, "samples": int, "h": float,
                 "max_iter": int, "resolution": int, "jobs": int, "quiet": lambda v: v.lower() in ("1", "true", "yes")}


def _merge_config(args):
    if not args.config:
        return
    try:
        sections = load_config(args.config)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from exc
    merged = dict(sections.get("defaults", {}))
    merged.update(sections.get(args.command, {}))
    if args.command == "verify":
        merged.update(sections.get(f"verify.{args.suite}", {}))
    for key, raw in merged.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("command", "suite", "config"):
            continue
        if getattr(args, attr) is None:
            conv = _CONFIG_TYPES.get(attr, str)
            try:
                setattr(args, attr, conv(raw))
            except ValueError as exc:
                raise UsageError(f"bad config value {key} = {raw!r}") from exc


def _apply_defaults(args):
    if args.command == "solve-radial" and args.format is None:
        suffix = Path(args.output).suffix.lstrip(".") if args.output else ""
        args.format = suffix if suffix in ("json", "csv") else "txt"
    for k, v in _DEFAULTS.items():
        if hasattr(args, k) and getattr(args, k) is None:
            setattr(args, k, v)
    if args.command == "solve-radial" and args.tol is None:
        args.tol = 1e-8
    if args.command == "minimize":
        if args.tol is None:
            args.tol = 1e-8
        if args.p is None:
            args.p = "3"
    if args.format == "txt" and args.command != "solve-radial":
        raise UsageError("--format txt applies to solve-radial only")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve-radial": cmd_solve_radial, "verify": cmd_verify, "minimize": cmd_minimize}
    try:
        _merge_config(args)
        _apply_defaults(args)
        if args.command == "minimize" and args.domain is None:
            raise UsageError("minimize needs --domain")
        return handlers[args.command](args)
    except (UsageError, ParameterError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
