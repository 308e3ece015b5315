"""Regression corpus: a grid of constructor cells, each run through the verifiers."""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np

from . import rfield as rf
from . import verify as vf
from .superalg import DegenerateFormError, build_algebra

DEFAULT_TOLERANCES = {"cdybe": 1e-9, "unitarity": 1e-12, "derivative": 1e-6, "invariance": 1e-12, "lskew": 1e-12}

DEFAULT_CORPUS = {
    "master_seed": 0,
    "samples": 8,
    "algebras": [{"kind": "sl", "m": 2, "n": 0}, {"kind": "sl", "m": 2, "n": 1},
                 {"kind": "gl", "m": 2, "n": 1}, {"kind": "sl", "m": 3, "n": 1}],
    "constructors": ["ev_zero_coupling", "ev_nonzero_coupling", "schiffmann_super"],
    "subsets_per_algebra": 2,
    "eps": [1.0, 0.5],
    "branches": [-1, 1],
    "schiffmann_limit": 6,
}


@lru_cache(maxsize=None)
def _configurations(kind, m, n):
    return tuple(rf.admissible_configurations(build_algebra(kind, m, n)))


def cell_seed(master, cell_id):
    h = hashlib.sha256(f"{master}:{cell_id}".encode()).digest()
    return int.from_bytes(h[:4], "little")


def _alg_name(spec):
    return f"{spec['kind']}({spec['m']},{spec['n']})"


def random_two_form(k, rng, scale=0.5):
    """Constant antisymmetric k x k matrix (trivially closed)."""
    A = np.round(rng.normal(scale=scale, size=(k, k)), 6)
    return (A - A.T).tolist()


def expand_cells(config):
    """List of cell descriptors in a fixed order."""
    cells = []
    for spec in config.get("algebras", []):
        name = _alg_name(spec)
        for ctor in config.get("constructors", []):
            if ctor == "ev_zero_coupling":
                for s in range(config.get("subsets_per_algebra", 1)):
                    cells.append({"algebra": spec, "constructor": ctor, "params": {"draw": s},
                                  "id": f"{name}/{ctor}/draw={s}"})
            elif ctor == "ev_nonzero_coupling":
                for s in range(config.get("subsets_per_algebra", 1)):
                    for eps in config.get("eps", [1.0]):
                        for b in config.get("branches", [-1]):
                            cells.append({"algebra": spec, "constructor": ctor,
                                          "params": {"draw": s, "eps": eps, "branch": b},
                                          "id": f"{name}/{ctor}/draw={s}/eps={eps}/branch={b}"})
            elif ctor == "schiffmann_super":
                for c in range(config.get("schiffmann_limit", 4)):
                    cells.append({"algebra": spec, "constructor": ctor, "params": {"config": c},
                                  "id": f"{name}/{ctor}/config={c}"})
            else:
                cells.append({"algebra": spec, "constructor": ctor, "params": {}, "id": f"{name}/{ctor}",
                              "invalid": f"unknown constructor {ctor!r}"})
    return cells


def build_cell(cell, seed):
    """Construct the field for a cell; returns (field, epsilon)."""
    spec = cell["algebra"]
    alg = build_algebra(spec["kind"], spec["m"], spec["n"])
    if alg.is_degenerate():
        raise DegenerateFormError(1, "algebra")
    rng = np.random.default_rng(seed)
    ctor, p = cell["constructor"], cell["params"]
    if ctor in ("ev_zero_coupling", "ev_nonzero_coupling"):
        pool = rf.closed_root_subsets(alg) if ctor == "ev_zero_coupling" else rf.simple_span_subsets(alg)
        X = pool[int(rng.integers(len(pool)))]
        nu = np.round(rng.normal(size=alg.rank), 6)
        D = random_two_form(alg.rank, rng)
        if ctor == "ev_zero_coupling":
            return rf.ev_zero_coupling(alg, X, nu, D), 0.0
        return rf.ev_nonzero_coupling(alg, X, nu, D, eps=p["eps"], branch=p["branch"]), float(p["eps"])
    configs = _configurations(spec["kind"], spec["m"], spec["n"])
    if p["config"] >= len(configs):
        return None, 1.0
    t, Y, r = configs[p["config"]]
    return r, 1.0


def _quantiles(rows):
    vals = np.array([v for _, v in rows]) if rows else np.zeros(1)
    return {"q50": float(np.quantile(vals, 0.5)), "q90": float(np.quantile(vals, 0.9))}


def run_cell(cell, master_seed, samples, tolerances):
    seed = cell_seed(master_seed, cell["id"])
    out = {"id": cell["id"], "algebra": _alg_name(cell["algebra"]), "constructor": cell["constructor"],
           "params": cell["params"], "seed": seed, "checks": {}}
    if "invalid" in cell:
        return {**out, "status": "error", "reason": cell["invalid"]}
    try:
        r, eps = build_cell(cell, seed)
    except DegenerateFormError:
        return {**out, "status": "skipped", "reason": "degenerate form"}
    except Exception as exc:  # reported per cell, the run continues
        return {**out, "status": "error", "reason": f"{type(exc).__name__}: {exc}"}
    if r is None:
        return {**out, "status": "skipped", "reason": "no such configuration"}
    reports = [
        vf.cdybe_residual(r, samples, seed, tolerances["cdybe"]),
        vf.unitarity_residual(r, eps, samples, seed, tolerances["unitarity"]),
        vf.derivative_residual(r, samples, seed, tolerances["derivative"]),
        vf.invariance_residual(r, None, samples, seed, tolerances["invariance"]),
    ]
    if cell["constructor"] == "schiffmann_super":
        reports.append(vf.l_skew_residual(r, None, samples, seed, tolerances["lskew"]))
    for rep in reports:
        out["checks"][rep.name] = {"max_abs": rep.max_abs, "tolerance": rep.tolerance, "verdict": rep.verdict,
                                   **_quantiles(rep.samples)}
    out["terms"] = len(r.terms)
    out["status"] = "pass" if all(rep.passed for rep in reports) else "fail"
    return out


def corpus_run(config, tolerances=None, workers=4):
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    master = int(config.get("master_seed", 0))
    samples = int(config.get("samples", 8))
    cells = expand_cells(config)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda c: run_cell(c, master, samples, tol), cells))
    matrix = {}
    for row in rows:
        slot = matrix.setdefault(row["algebra"], {}).setdefault(row["constructor"], {"pass": 0, "fail": 0,
                                                                                     "skipped": 0, "error": 0})
        slot[row["status"]] += 1
    return {"schema": "superdyn.corpus/1", "master_seed": master, "samples": samples, "tolerances": tol,
            "cells": rows, "matrix": matrix}


def corpus_ok(summary):
    return all(row["status"] in ("pass", "skipped") for row in summary["cells"])
