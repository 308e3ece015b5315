"""Command-line front end.

Every verb maps to one library operation:

    algebra KIND M N                   superalg.algebra_to_json
    rmatrix build ...                  rfield.ev_zero_coupling / ev_nonzero_coupling / schiffmann_super
    verify CHECK R.json                verify.<check>_residual
    gauge apply R.json ...             verify.gauge_apply
    quantum qdybe|hecke|slope FILE     quantum.qdybe_residual / hecke_check / semiclassical_slope
    hopfoid rll|calibrate [R.json]     hopfoid.rll_residual / calibrate
    corpus run [CONFIG.json]           corpus.corpus_run

Exit codes: 0 pass, 1 residual failure, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from importlib import metadata as importlib_metadata

import numpy as np

from . import corpus as cp
from . import hopfoid as hp
from . import lambdafn as lf
from . import quantum as qm
from . import rfield as rf
from . import serialize as sz
from . import verify as vf
from .superalg import DegenerateFormError, algebra_to_json, build_algebra

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

TOLERANCE_ENV = {
    "cdybe": "SUPERDYN_TOL_CDYBE",
    "unitarity": "SUPERDYN_TOL_UNITARITY",
    "invariance": "SUPERDYN_TOL_INVARIANCE",
    "lskew": "SUPERDYN_TOL_LSKEW",
    "cybe": "SUPERDYN_TOL_CYBE",
    "derivative": "SUPERDYN_TOL_DERIVATIVE",
    "qdybe": "SUPERDYN_TOL_QDYBE",
    "hecke": "SUPERDYN_TOL_HECKE",
    "rll": "SUPERDYN_TOL_RLL",
}
DEFAULT_TOL = {"cdybe": 1e-9, "unitarity": 1e-12, "invariance": 1e-12, "lskew": 1e-12, "cybe": 1e-12,
               "derivative": 1e-6, "qdybe": 1e-12, "hecke": 1e-9, "rll": 1e-12}


class InputError(ValueError):
    pass


def version():
    try:
        return importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        return "0+unknown"


def tolerance(name, cli_value=None):
    if cli_value is not None:
        return float(cli_value)
    env = os.environ.get(TOLERANCE_ENV[name])
    if env is not None:
        try:
            return float(env)
        except ValueError as exc:
            raise InputError(f"{TOLERANCE_ENV[name]} is not a number: {env!r}") from exc
    return DEFAULT_TOL[name]


def parse_algebra(text):
    m = re.fullmatch(r"\s*(gl|sl)\s*\(\s*(\d+)\s*(?:[,|]\s*(\d+))?\s*\)\s*", text)
    if not m:
        raise InputError(f"cannot parse algebra {text!r}; expected e.g. sl(2,1)")
    return build_algebra(m.group(1), int(m.group(2)), int(m.group(3) or 0))


def _floats(text, name):
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"--{name}: expected comma separated numbers") from exc


def _ints(text, name):
    if text is None or text.strip() == "":
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"--{name}: expected comma separated integers") from exc


def _rows(text, name):
    """'1,0;0,1' -> rational rows; '' -> no rows."""
    if text is None:
        return None
    if text.strip() in ("", "0", "none"):
        return []
    try:
        return [[Fraction(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError as exc:
        raise InputError(f"--{name}: expected rows like '1,0;0,1'") from exc


def _root_pairs(text):
    """'1-2,2-1' (1-based) -> [(0, 1), (1, 0)]."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            a, b = tok.split("-")
            out.append((int(a) - 1, int(b) - 1))
        except ValueError as exc:
            raise InputError(f"--roots: bad root {tok!r}; expected a-b with 1-based indices") from exc
    return out


def _load_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def manifest(command, seed, tolerances, inputs, verdicts):
    return {
        "command": command,
        "seed": seed,
        "tolerances": tolerances,
        "inputs": {name: sz.digest(obj) for name, obj in inputs.items()},
        "version": version(),
        "verdicts": verdicts,
    }


def emit(obj, out_path=None):
    text = sz.canonical_dumps(obj) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- verbs ----------------------------------------------------------------------------------------

def cmd_algebra(args):
    alg = build_algebra(args.kind, args.m, args.n)
    emit(algebra_to_json(alg), args.out)
    return EXIT_PASS


def cmd_rmatrix_build(args):
    alg = parse_algebra(args.algebra)
    if alg.is_degenerate():
        raise DegenerateFormError(1, "algebra")
    D = json.loads(args.two_form) if args.two_form else None
    nu = _floats(args.nu, "nu")
    if args.constructor in ("ev_zero_coupling", "ev_nonzero_coupling"):
        if args.roots is not None:
            X = rf.roots_from_pairs(alg, _root_pairs(args.roots))
        else:
            X = rf.span_roots(alg, [k - 1 for k in _ints(args.span, "span")])
        if args.constructor == "ev_zero_coupling":
            r = rf.ev_zero_coupling(alg, X, nu, D)
        else:
            r = rf.ev_nonzero_coupling(alg, X, nu, D, eps=args.eps, branch=args.branch)
    else:
        tau = {}
        for tok in (args.tau or "").split(","):
            if tok.strip():
                try:
                    a, b = tok.split(":")
                except ValueError as exc:
                    raise InputError(f"--tau: bad pair {tok!r}; expected i:j (1-based)") from exc
                tau[int(a) - 1] = int(b) - 1
        t = rf.AdmissibleTriple.make(tau)
        r = rf.schiffmann_super(alg, t, l=_rows(args.l, "l"))
    emit(sz.field_to_json(r), args.out)
    return EXIT_PASS


def _report_exit(reports):
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


def cmd_verify(args):
    obj = _load_json(args.file)
    r = sz.field_from_json(obj)
    tol = tolerance(args.check, args.tol)
    if args.check == "cdybe":
        rep = vf.cdybe_residual(r, args.samples, args.seed, tol)
    elif args.check == "unitarity":
        eps = args.eps if args.eps is not None else float(r.metadata.get("epsilon", 0.0))
        rep = vf.unitarity_residual(r, eps, args.samples, args.seed, tol)
    elif args.check == "invariance":
        rep = vf.invariance_residual(r, _rows(args.l, "l"), args.samples, args.seed, tol)
    elif args.check == "lskew":
        rep = vf.l_skew_residual(r, _rows(args.l, "l"), args.samples, args.seed, tol)
    elif args.check == "derivative":
        rep = vf.derivative_residual(r, args.samples, args.seed, tol)
    else:
        if not r.is_constant():
            raise InputError("cybe needs a constant field")
        rep = vf.cybe_residual(r.alg, r.evaluate(np.zeros(r.dim_l)), tol)
    emit({"report": rep.to_json(),
          "manifest": manifest(f"verify {args.check}", args.seed, {args.check: tol}, {"field": obj},
                               {args.check: rep.verdict})}, args.out)
    return _report_exit([rep])


def cmd_gauge_apply(args):
    obj = _load_json(args.file)
    r = sz.field_from_json(obj)
    chosen = [x is not None for x in (args.translate, args.two_form, args.weyl)]
    if sum(chosen) != 1:
        raise InputError("give exactly one of --translate, --two-form, --weyl")
    if args.translate is not None:
        g = vf.Translate(tuple(_floats(args.translate, "translate")))
    elif args.two_form is not None:
        raw = json.loads(args.two_form)
        g = vf.TwoFormShift(tuple(tuple(lf.from_json(v) if isinstance(v, dict) else float(v) for v in row)
                                  for row in raw))
    else:
        g = vf.Weyl(tuple(k - 1 for k in _ints(args.weyl, "weyl")))
    out = vf.gauge_apply(r, g)
    emit(sz.field_to_json(out), args.out)
    return EXIT_PASS


def cmd_quantum(args):
    obj = _load_json(args.file)
    if args.check == "slope":
        r = sz.field_from_json(obj)
        rep = qm.semiclassical_slope(r, seed=args.seed)
        verdict = "inconclusive" if rep.inconclusive else ("pass" if 1.9 <= rep.slope <= 2.1 else "fail")
        emit({"report": {"gammas": rep.gammas, "residuals": rep.residuals, "slope": rep.slope,
                         "intercept": rep.intercept, "inconclusive": rep.inconclusive, "lambda": rep.lam},
              "manifest": manifest("quantum slope", args.seed, {}, {"field": obj}, {"slope": verdict})}, args.out)
        return EXIT_FAIL if verdict == "fail" else EXIT_PASS
    R = sz.dynr_from_json(obj)
    if args.check == "qdybe":
        tol = tolerance("qdybe", args.tol)
        rep = qm.qdybe_residual(R, args.gamma, args.samples, args.seed, tol)
        emit({"report": rep.to_json(),
              "manifest": manifest("quantum qdybe", args.seed, {"qdybe": tol}, {"R": obj},
                                   {"qdybe": rep.verdict})}, args.out)
        return _report_exit([rep])
    tol = tolerance("hecke", args.tol)
    lam = np.array(_floats(args.lam, "lam")) if args.lam else \
        lf.sample_lambda(R.dim_lambda, args.seed, R.poles)
    ok, blocks = qm.hecke_check(R, args.q, lam, tol)
    table = [{"kind": b.kind, "vectors": list(b.vectors), "parities": list(b.parities),
              "expected": list(b.expected), "trace": b.trace, "det": b.det, "passed": b.passed} for b in blocks]
    verdict = "pass" if ok else "fail"
    emit({"report": {"lambda": lam.tolist(), "q": args.q, "blocks": table, "verdict": verdict},
          "manifest": manifest("quantum hecke", args.seed, {"hecke": tol}, {"R": obj}, {"hecke": verdict})},
         args.out)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_hopfoid(args):
    if args.check == "calibrate":
        battery = hp.calibration_battery()
        inputs = {}
        if args.file:
            obj = _load_json(args.file)
            battery.append(sz.dynr_from_json(obj))
            inputs["R"] = obj
        conv, table = hp.calibrate(battery, seed=args.seed)
        emit({"convention": list(conv),
              "table": [{"convention": list(c), "residuals": v} for c, v in table.items()],
              "manifest": manifest("hopfoid calibrate", args.seed, {}, inputs, {"calibration": "pass"})}, args.out)
        return EXIT_PASS
    if not args.file:
        raise InputError("hopfoid rll needs an R.json file")
    obj = _load_json(args.file)
    R = sz.dynr_from_json(obj)
    tol = tolerance("rll", args.tol)
    L = hp.build_L_rep(R)
    rep = hp.rll_residual(R, args.samples, args.seed, tol, L=L)
    emit({"report": rep.to_json(), "convention": list(L.convention),
          "manifest": manifest("hopfoid rll", args.seed, {"rll": tol}, {"R": obj}, {"rll": rep.verdict})},
         args.out)
    return _report_exit([rep])


def cmd_corpus_run(args):
    config = dict(cp.DEFAULT_CORPUS) if args.config is None else _load_json(args.config)
    if not isinstance(config, dict):
        raise InputError("corpus config must be a JSON object")
    if args.seed is not None:
        config["master_seed"] = args.seed
    if args.samples is not None:
        config["samples"] = args.samples
    tol = {k: tolerance(k) for k in cp.DEFAULT_TOLERANCES}
    summary = cp.corpus_run(config, tol)
    ok = cp.corpus_ok(summary)
    summary["manifest"] = manifest("corpus run", summary["master_seed"], tol, {"config": config},
                                   {"corpus": "pass" if ok else "fail"})
    emit(summary, args.out)
    return EXIT_PASS if ok else EXIT_FAIL


# -- parser ---------------------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="superdyn", description="Super dynamical r- and R-matrix verification")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, samples=20):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--samples", type=int, default=samples)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out", default=None)

    a = sub.add_parser("algebra", help="structure data of gl(m,n) or sl(m,n)")
    a.add_argument("kind", choices=["gl", "sl"])
    a.add_argument("m", type=int)
    a.add_argument("n", type=int)
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_algebra)

    rm = sub.add_parser("rmatrix", help="build an r-matrix field").add_subparsers(dest="action", required=True)
    b = rm.add_parser("build")
    b.add_argument("--algebra", required=True, help="e.g. sl(2,1)")
    b.add_argument("--constructor", required=True,
                   choices=["ev_zero_coupling", "ev_nonzero_coupling", "schiffmann_super"])
    b.add_argument("--roots", default=None, help="explicit X as 1-based pairs a-b, e.g. 1-2,2-1")
    b.add_argument("--span", default=None, help="X = roots in the span of these simple roots (1-based)")
    b.add_argument("--nu", default=None)
    b.add_argument("--two-form", default=None, help="JSON k x k antisymmetric grid")
    b.add_argument("--eps", type=float, default=1.0)
    b.add_argument("--branch", type=int, default=-1, choices=[-1, 1])
    b.add_argument("--tau", default=None, help="pairs i:j of simple roots (1-based)")
    b.add_argument("--l", default=None, help="Cartan rows '1,0;0,1'; empty string for l = 0")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_rmatrix_build)

    v = sub.add_parser("verify", help="residual checks on a field")
    v.add_argument("check", choices=["cdybe", "unitarity", "invariance", "lskew", "cybe", "derivative"])
    v.add_argument("file")
    v.add_argument("--eps", type=float, default=None)
    v.add_argument("--l", default=None)
    common(v)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gauge", help="gauge transformations").add_subparsers(dest="action", required=True)
    ga = g.add_parser("apply")
    ga.add_argument("file")
    ga.add_argument("--translate", default=None)
    ga.add_argument("--two-form", default=None)
    ga.add_argument("--weyl", default=None, help="1-based permutation of the standard basis")
    ga.add_argument("--out", default=None)
    ga.set_defaults(func=cmd_gauge_apply)

    qn = sub.add_parser("quantum", help="quantum layer checks")
    qn.add_argument("check", choices=["qdybe", "hecke", "slope"])
    qn.add_argument("file")
    qn.add_argument("--gamma", type=float, default=1.0)
    qn.add_argument("--q", type=float, default=1.0)
    qn.add_argument("--lam", default=None)
    common(qn)
    qn.set_defaults(func=cmd_quantum)

    h = sub.add_parser("hopfoid", help="RLL relation and calibration")
    h.add_argument("check", choices=["rll", "calibrate"])
    h.add_argument("file", nargs="?")
    common(h, samples=5)
    h.set_defaults(func=cmd_hopfoid)

    c = sub.add_parser("corpus", help="regression corpus").add_subparsers(dest="action", required=True)
    cr = c.add_parser("run")
    cr.add_argument("config", nargs="?")
    cr.add_argument("--seed", type=int, default=None)
    cr.add_argument("--samples", type=int, default=None)
    cr.add_argument("--out", default=None)
    cr.set_defaults(func=cmd_corpus_run)
    return p


INPUT_ERRORS = (InputError, sz.SchemaError, DegenerateFormError, rf.InvalidRootSubset, rf.DomainError,
                rf.Unsupported, rf.InfeasibleR00, rf.TwoFormError, vf.GaugeError, lf.ExprSchemaError,
                json.JSONDecodeError, ValueError)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        sys.stderr.write(f"superdyn: input error: {exc}\n")
        return EXIT_INPUT
    except hp.CalibrationError as exc:
        sys.stderr.write(f"superdyn: calibration failed: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
