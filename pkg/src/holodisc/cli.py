"""Command-line front end.

    holodisc <kind> --config <path> [--out <dir>] [--tol <float>] [--grid NRxNA]

Kinds: transforms-check, solve, reflect, analyticity, lift-check, converge.
Each run writes report.json, series.csv, summary.txt and one or more .dat
files.  Exit status: 0 when every criterion passes, 1 when one fails, 2 for a
config that cannot be read or parsed, 3 for a config that fails validation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as hio
from .acs import AlmostComplexStructure, DeformationTensor, StructureError, load_structure
from .diagnostics import RegularityIndex, convergence_study, scaled_sequence
from .grid import BoundaryFunction, GridError, GridFunction, make_disc_grid, trace_of
from .lift import check_lift, lift_structure
from .polynomial import PolarizedPolynomial
from .reflection import (analyticity_experiment, constant_a_halfdisc, solve_halfdisc,
                         vanishing_target, verify_reflection)
from .rh_solver import RHProblem, SolverError, solve_rh
from .transforms import cauchy_green, cauchy_green_poly, cauchy_poly, schwarz_poly

KINDS = ("transforms-check", "solve", "reflect", "analyticity", "lift-check", "converge")


class ConfigError(ValueError):
    """Validation failure (exit status 3)."""


# ---------------------------------------------------------------------------
# config parsing


def load_config(path):
    """Read JSON; raises OSError or json.JSONDecodeError (exit status 2)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return json.loads(text)


def _get(cfg, key, typ, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"field '{key}': missing")
        return default
    val = cfg[key]
    if typ is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, typ) or isinstance(val, bool) and typ is not bool:
        raise ConfigError(f"field '{key}': expected {typ.__name__}")
    return val


def _positive(name, x):
    if not x > 0:
        raise ConfigError(f"field '{name}': must be positive")
    return x


def parse_boundary(spec, n):
    """Real boundary data: {"modes": [[m, re, im], ...]} and/or {"cos": [[m, c]], "sin": [[m, c]]};
    a list of such objects for n > 1."""
    if n > 1:
        if not isinstance(spec, list) or len(spec) != n:
            raise ConfigError(f"field 'boundary': expected a list of {n} component objects")
        parts = [parse_boundary(s, 1) for s in spec]
        M = max(p.max_mode for p in parts)
        return BoundaryFunction(np.concatenate([p.padded(M).fourier for p in parts]), True)
    if not isinstance(spec, dict):
        raise ConfigError("field 'boundary': expected an object")
    modes = {}
    try:
        for m, re, im in spec.get("modes", []):
            modes[int(m)] = modes.get(int(m), 0) + complex(re, im)
        for m, c in spec.get("cos", []):
            m = int(m)
            if m == 0:
                modes[0] = modes.get(0, 0) + c
            else:
                modes[m] = modes.get(m, 0) + c / 2
                modes[-m] = modes.get(-m, 0) + c / 2
        for m, c in spec.get("sin", []):
            m = int(m)
            if m != 0:
                modes[m] = modes.get(m, 0) + c / 2j
                modes[-m] = modes.get(-m, 0) - c / 2j
    except (TypeError, ValueError):
        raise ConfigError("field 'boundary': malformed mode list") from None
    if not modes:
        modes = {0: 0.0}
    phi = BoundaryFunction.from_modes(modes)
    if not phi.is_real():
        raise ConfigError("field 'boundary': data must be real (c_{-m} = conj c_m)")
    return BoundaryFunction(phi.fourier, True)


def validate(cfg, kind, overrides):
    """Normalized settings for ``kind``; raises ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    schema = cfg.get("schema")
    if schema != hio.SCHEMA:
        raise ConfigError(f"field 'schema': expected \"{hio.SCHEMA}\"")
    ck = cfg.get("kind", kind)
    if ck != kind:
        raise ConfigError(f"field 'kind': config is for '{ck}', command asked for '{kind}'")
    s = {"kind": kind}
    grid = cfg.get("grid", [16, 64])
    if overrides.get("grid"):
        grid = overrides["grid"]
    if not (isinstance(grid, list) and len(grid) == 2 and all(isinstance(v, int) for v in grid)):
        raise ConfigError("field 'grid': expected [n_radial, n_angular]")
    try:
        s["grid"] = make_disc_grid(*grid)
    except GridError as exc:
        raise ConfigError(f"field 'grid': {exc}") from None
    tol = _get(cfg, "tolerance", float, 1e-9)
    if overrides.get("tol") is not None:
        tol = overrides["tol"]
    s["tol"] = _positive("tolerance", tol)
    s["max_iter"] = int(_positive("max_iter", _get(cfg, "max_iter", int, 50)))
    s["cap"] = int(_positive("cap", _get(cfg, "cap", int, 32)))
    s["seed"] = _get(cfg, "seed", int, 0)
    method = _get(cfg, "method", str, "newton")
    if method not in ("newton", "picard", "both"):
        raise ConfigError("field 'method': expected newton, picard or both")
    s["method"] = method
    reg = _get(cfg, "regularity", dict, {})
    try:
        s["idx"] = RegularityIndex(int(reg.get("k", 0)), float(reg.get("alpha", 0.5)),
                                   float(reg.get("p", 4.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'regularity': {exc}") from None

    needs_structure = kind in ("solve", "reflect", "analyticity", "lift-check", "converge")
    if needs_structure:
        st = cfg.get("structure")
        if st is None:
            raise ConfigError("field 'structure': missing")
        try:
            s["A"] = load_structure(st)
        except (StructureError, TypeError, ValueError) as exc:
            raise ConfigError(f"field 'structure': {exc}") from None
        n = s["A"].n
        if kind in ("solve", "lift-check", "converge"):
            s["phi"] = parse_boundary(cfg.get("boundary", {"cos": [[1, 1.0]]}), n)
            anchor = cfg.get("anchor", [0.0] * n)
            if not (isinstance(anchor, list) and len(anchor) == n):
                raise ConfigError(f"field 'anchor': expected a list of {n} numbers")
            s["anchor"] = np.array(anchor, dtype=float)
            if s["phi"].max_mode > s["cap"]:
                raise ConfigError("field 'boundary': more Fourier modes than 'cap'")
        if kind in ("reflect", "analyticity"):
            hd = _get(cfg, "halfdisc", dict, {})
            s["target_scale"] = float(hd.get("scale", 0.3))
            s["target_order"] = int(hd.get("order", 16))
            s["halfdisc_cap"] = int(_positive("halfdisc.cap", int(hd.get("cap", 128))))
            s["radius"] = float(hd.get("radius", 0.5))
            if not 0 < s["radius"] < 1:
                raise ConfigError("field 'halfdisc.radius': must lie in (0, 1)")
            s["threshold"] = _positive("threshold", _get(cfg, "threshold", float, 1e-6))
        if kind == "converge":
            ns = cfg.get("n", [4, 32])
            if not (isinstance(ns, list) and len(ns) == 2 and ns[0] >= 1 and ns[1] >= ns[0] + 2):
                raise ConfigError("field 'n': expected [first, last] with at least 3 values")
            s["ns"] = list(range(int(ns[0]), int(ns[1]) + 1))
            s["min_exponent"] = _get(cfg, "min_exponent", float, 0.9)
        if kind == "lift-check":
            s["samples"] = int(_positive("samples", _get(cfg, "samples", int, 100)))
            s["levels"] = int(_get(cfg, "levels", int, 2))
            if s["levels"] not in (1, 2):
                raise ConfigError("field 'levels': 1 or 2")
    if kind == "transforms-check":
        s["degree"] = int(_positive("degree", _get(cfg, "degree", int, 12)))
        s["samples"] = int(_positive("samples", _get(cfg, "samples", int, 50)))
        s["schwarz_modes"] = int(_positive("schwarz_modes", _get(cfg, "schwarz_modes", int, 32)))
    return s


# ---------------------------------------------------------------------------
# experiments; each returns (criteria, results, series, dat)


def _crit(name, value, threshold, passed=None):
    ok = bool(value <= threshold) if passed is None else bool(passed)
    return {"name": name, "value": float(value), "threshold": float(threshold), "pass": ok}


def _random_poly(rng, degree, n=1):
    c = np.zeros((n, degree + 1, degree + 1), dtype=np.complex128)
    for k in range(degree + 1):
        for l in range(degree + 1 - k):
            c[:, k, l] = rng.normal(size=n) + 1j * rng.normal(size=n)
    return PolarizedPolynomial(c)


def run_transforms(s):
    grid = s["grid"]
    rng = np.random.default_rng(s["seed"])
    nodes = grid.nodes
    D = s["degree"]
    # ∂̄ ∘ T^CG on monomials
    worst = 0.0
    for k in range(D + 1):
        for l in range(D + 1 - k):
            h = PolarizedPolynomial.monomial(k, l)
            worst = max(worst, float(np.max(np.abs(cauchy_green_poly(h).dbar()(nodes) - h(nodes)))))
    # Schwarz: Re trace = ψ exactly in Fourier space, Im g(0) = 0
    M = s["schwarz_modes"]
    c = rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)
    psi = BoundaryFunction(c, True)
    g = schwarz_poly(psi)
    tr = trace_of(g).real.padded(M)
    sw_err = float(np.max(np.abs(tr.fourier - psi.fourier)))
    sw_im = float(abs(g.coeffs[0, 0, 0].imag))
    # Cauchy-Green formula u = K(u|_S) + T^CG(u_ζ̄) on random spectral u
    cg_formula = 0.0
    for _ in range(s["samples"]):
        u = _random_poly(rng, int(rng.integers(1, D + 1)))
        v = cauchy_poly(trace_of(u)) + cauchy_green_poly(u.dbar())
        cg_formula = max(cg_formula, float(np.max(np.abs(v(nodes) - u(nodes)))))
    # dispatch path vs exact oracle
    dispatch = 0.0
    for _ in range(2 * s["samples"]):
        h = _random_poly(rng, int(rng.integers(0, 11)))
        gf = GridFunction.from_spectral(grid, h)
        dispatch = max(dispatch, float(np.max(np.abs(cauchy_green(gf).values - cauchy_green_poly(h)(nodes)))))
    criteria = [
        _crit("dbar_cauchy_green_identity", worst, 1e-10),
        _crit("schwarz_real_trace", sw_err, 1e-13),
        _crit("schwarz_imag_at_zero", sw_im, 0.0),
        _crit("cauchy_green_formula", cg_formula, 1e-9),
        _crit("cauchy_green_dispatch", dispatch, 1e-10),
    ]
    results = {"degree": D, "schwarz_modes": M, "samples": s["samples"]}
    series = (["criterion", "value"], [[c["name"], c["value"]] for c in criteria])
    dat = {"schwarz_trace.dat": ("mode  |c_m(Re g|S) - c_m(psi)|", np.arange(-M, M + 1),
                                 np.abs(tr.fourier[0] - psi.fourier[0]))}
    return criteria, results, series, dat


def _closed_form(A, phi, a):
    """u = f + A conj f with f = T^SW(φ)/(1 + A) + i a/(1 - A) for scalar real A."""
    f = schwarz_poly(phi) * (1.0 / (1.0 + A)) + PolarizedPolynomial.constant([1j * a[0] / (1.0 - A)])
    return f + f.conj() * A


def _solve(s, method):
    return solve_rh(RHProblem(s["A"], s["phi"], s["anchor"]), method=method, tol=s["tol"],
                    max_iter=s["max_iter"], cap=s["cap"], grid=s["grid"])


def run_solve(s):
    methods = ["newton", "picard"] if s["method"] == "both" else [s["method"]]
    criteria, results = [], {}
    reps = {}
    for m in methods:
        try:
            rep = _solve(s, m)
            ok = True
        except SolverError as exc:
            rep, ok = exc.report, False
            results[f"{m}_error"] = str(exc)
        reps[m] = rep
        results[m] = rep.summary()
        criteria.append(_crit(f"{m}_converged", 0.0 if ok else 1.0, 0.0))
        criteria.append(_crit(f"{m}_residual", rep.residual, s["tol"]))
        criteria.append(_crit(f"{m}_boundary_error", rep.boundary_error, s["tol"]))
        criteria.append(_crit(f"{m}_anchor_error", rep.anchor_error, s["tol"]))
    A = s["A"]
    nodes = s["grid"].nodes
    if A.is_constant() and A.n == 1 and A.constant_value()[0, 0].imag == 0:
        exact = _closed_form(float(A.constant_value()[0, 0].real), s["phi"], s["anchor"])
        for m, rep in reps.items():
            err = float(np.max(np.abs(rep.solution.spectral(nodes) - exact(nodes))))
            criteria.append(_crit(f"{m}_closed_form_match", err, 1e-8))
    if len(reps) == 2:
        diff = float(np.max(np.abs(reps["newton"].solution.values - reps["picard"].solution.values)))
        criteria.append(_crit("newton_picard_agreement", diff, 1e-7))
    first = reps[methods[0]]
    rows = []
    for m, rep in reps.items():
        rows += [[m, i, r] for i, r in enumerate(rep.residual_history)]
    theta = s["grid"].angles
    dat = {
        "residual.dat": ("iteration  residual", np.arange(len(first.residual_history)),
                         first.residual_history),
        "boundary.dat": ("theta  Re u(e^{i theta})", theta,
                         first.solution.spectral(np.exp(1j * theta))[0].real),
    }
    results["solution"] = first.solution.to_json(atol=1e-15)
    return criteria, results, (["method", "iteration", "residual"], rows), dat


def run_reflect(s):
    A = s["A"]
    grid = s["grid"]
    target = vanishing_target(s["target_scale"], s["target_order"])
    h0 = complex(0.0, np.tan(np.pi / 8))
    if A.is_constant() and A.n == 1 and A.constant_value()[0, 0].imag == 0:
        _, psi, anchor = constant_a_halfdisc(float(A.constant_value()[0, 0].real), target)
    else:
        psi = lambda w: np.atleast_2d(np.imag(target(w)))  # noqa: E731
        anchor = float(np.real(target(np.array([h0]))[0]))
    sol = solve_halfdisc(A, psi, anchor, grid=grid, cap=s["halfdisc_cap"], tol=s["tol"])
    J = AlmostComplexStructure.from_deformation(A)
    rep = verify_reflection(sol.u, J)
    # classical case: holomorphic target with the standard structure
    classical = solve_halfdisc(DeformationTensor.zero(A.n), lambda w: np.atleast_2d(np.imag(target(w))),
                               float(np.real(target(np.array([h0]))[0])), grid=grid,
                               cap=s["halfdisc_cap"], tol=s["tol"])
    crep = verify_reflection(classical.u, AlmostComplexStructure.standard(A.n))
    criteria = [
        _crit("reflected_vs_base", rep.reflected_residual, 10 * max(rep.base_residual, rep.floor)),
        _crit("straddle_vs_base", rep.straddle_residual,
              10 * max(rep.base_residual, rep.floor) + rep.jump_allowance),
        _crit("classical_reflected_residual", crep.reflected_residual, 1e-10),
    ]
    results = {"reflection": rep.to_dict(), "classical": crep.to_dict(),
               "halfdisc_solver": sol.report.summary()}
    rows = [["reflection", k, v] for k, v in rep.to_dict().items() if not isinstance(v, bool)]
    x = np.linspace(-0.99, 0.99, 199)
    dat = {"beta_trace.dat": ("x  Im u(x) on the diameter", x, sol.u(x + 0j)[0].imag)}
    return criteria, results, (["part", "quantity", "value"], rows), dat


def run_analyticity(s):
    target = vanishing_target(s["target_scale"], s["target_order"])
    psi = lambda w: np.atleast_2d(np.imag(target(w)))  # noqa: E731
    h0 = complex(0.0, np.tan(np.pi / 8))
    anchor = float(np.real(target(np.array([h0]))[0]))
    A = s["A"]
    if A.is_constant() and A.n == 1 and A.constant_value()[0, 0].imag == 0:
        _, psi, anchor = constant_a_halfdisc(float(A.constant_value()[0, 0].real), target)
    rep = analyticity_experiment(A, psi, anchor, radius=s["radius"], halfdisc_cap=s["halfdisc_cap"],
                                 threshold=s["threshold"], grid=s["grid"])
    criteria = [
        _crit("two_path_disagreement", rep["disagreement"], s["threshold"]),
        _crit("reflected_vs_base", rep["reflection"]["reflected_residual"],
              10 * max(rep["reflection"]["base_residual"], rep["reflection"]["ratio_floor"])),
    ]
    rows = [["disagreement", rep["disagreement"]], ["structure_consistency", rep["structure_consistency"]]]
    hist = rep["halfdisc_solver"]["residual_history"]
    dat = {"halfdisc_residual.dat": ("iteration  residual", np.arange(len(hist)), hist)}
    return criteria, rep, (["quantity", "value"], rows), dat


def run_lift(s):
    A = s["A"]
    J = AlmostComplexStructure.from_deformation(A)
    rng = np.random.default_rng(s["seed"])
    n = A.n
    pts = 0.5 * (rng.uniform(-1, 1, size=(s["samples"], 2 * n)) + 1j * rng.uniform(-1, 1, size=(s["samples"], 2 * n)))
    Jc = lift_structure(J)
    sq = Jc.square_defect(pts)
    rep = _solve(s, "newton")
    chk = check_lift(rep.solution, J, levels=s["levels"])
    criteria = [_crit("lifted_square", sq, 1e-12)]
    for lev in chk["levels"]:
        criteria.append(_crit(f"lift_level_{lev['level']}_residual", lev["residual"], lev["bound"]))
    rows = [[0, chk["base_residual"]]] + [[lev["level"], lev["residual"]] for lev in chk["levels"]]
    dat = {"lift_residuals.dat": ("level  residual", [r[0] for r in rows], [r[1] for r in rows])}
    return criteria, {"square_defect": sq, "lift": chk, "solver": rep.summary()}, (["level", "residual"], rows), dat


def run_converge(s):
    A = s["A"]
    seq = scaled_sequence(A, s["ns"])
    rep = convergence_study(seq, A, s["phi"], s["anchor"], s["idx"], tol=min(s["tol"], 1e-11),
                            grid=s["grid"], cap=s["cap"])
    criteria = [
        _crit("e_n_monotone", 0.0 if rep.monotone else 1.0, 0.0),
        _crit("fitted_exponent", -rep.exponent, -s["min_exponent"],
              passed=rep.exponent >= s["min_exponent"]),
    ]
    if A.is_constant() and A.n == 1 and A.constant_value()[0, 0].imag == 0:
        from .diagnostics import holder_norm

        a0 = float(A.constant_value()[0, 0].real)
        u = _closed_form(a0, s["phi"], s["anchor"])
        worst = 0.0
        for (n, An), e in zip(seq, rep.e):
            un = _closed_form(float(An.constant_value()[0, 0].real), s["phi"], s["anchor"])
            diff = GridFunction.from_spectral(s["grid"], un - u)
            e_exact = holder_norm(diff, RegularityIndex(s["idx"].k + 1, s["idx"].alpha)).value
            worst = max(worst, abs(e - e_exact))
        criteria.append(_crit("e_n_closed_form_check", worst, 1e-7))
    rows = [[n, d, e] for n, d, e in zip(rep.ns, rep.d, rep.e)]
    dat = {"rate.dat": ("d_n  e_n", rep.d, rep.e)}
    return criteria, rep.to_dict(), (["n", "d_n", "e_n"], rows), dat


RUNNERS = {
    "transforms-check": run_transforms,
    "solve": run_solve,
    "reflect": run_reflect,
    "analyticity": run_analyticity,
    "lift-check": run_lift,
    "converge": run_converge,
}


def _summary_text(kind, criteria, passed):
    lines = [f"holodisc {kind}: {'PASS' if passed else 'FAIL'}"]
    for c in criteria:
        mark = "PASS" if c["pass"] else "FAIL"
        lines.append(f"  [{mark}] {c['name']}: {hio.fmt(c['value'])} (threshold {hio.fmt(c['threshold'])})")
    return "\n".join(lines) + "\n"


def run(kind, cfg, out_dir, overrides=None):
    """Validate, run and write artifacts; returns the exit status (0 or 1)."""
    s = validate(cfg, kind, overrides or {})
    try:
        criteria, results, series, dat = RUNNERS[kind](s)
    except SolverError as exc:
        criteria = [_crit("solver", 1.0, 0.0)]
        results = {"error": str(exc)}
        if exc.report is not None:
            results["solver"] = exc.report.summary()
        series, dat = (["quantity", "value"], []), {}
    passed = all(c["pass"] for c in criteria)
    report = {
        "schema": hio.REPORT_SCHEMA,
        "kind": kind,
        "grid": [s["grid"].n_radial, s["grid"].n_angular],
        "tolerance": s["tol"],
        "pass": passed,
        "criteria": criteria,
        "results": results,
    }
    hio.write_json(os.path.join(out_dir, "report.json"), report)
    hio.write_text(os.path.join(out_dir, "series.csv"), hio.csv_text(*series))
    hio.write_text(os.path.join(out_dir, "summary.txt"), _summary_text(kind, criteria, passed))
    for name, (header, xs, ys) in dat.items():
        hio.write_text(os.path.join(out_dir, name), hio.dat_text(header, xs, ys))
    return 0 if passed else 1


def _parse_grid(text):
    try:
        a, b = text.lower().split("x")
        return [int(a), int(b)]
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like 16x64") from None


def main(argv=None):
    parser = argparse.ArgumentParser(prog="holodisc", description=__doc__.split("\n\n")[0])
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--grid", type=_parse_grid, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except json.JSONDecodeError as exc:
        print(f"{args.config}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{args.config}: cannot read config ({exc.strerror})", file=sys.stderr)
        return 2
    out = args.out or (cfg.get("output") if isinstance(cfg, dict) else None) or os.path.join("holodisc-out", args.kind)
    if args.tol is not None and not args.tol > 0:
        print("--tol: must be positive", file=sys.stderr)
        return 3
    try:
        status = run(args.kind, cfg, out, {"tol": args.tol, "grid": args.grid})
    except ConfigError as exc:
        print(f"{args.config}: invalid config: {exc}", file=sys.stderr)
        return 3
    with open(os.path.join(out, "summary.txt"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return status


if __name__ == "__main__":
    sys.exit(main())
