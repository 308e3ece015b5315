"""JSON forms of r-matrix fields and quantum R-matrices.

Errors carry a JSON pointer to the offending node.  Exact Cartan rows are
written as rational strings so that a roundtrip reproduces them.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction

import numpy as np

from . import lambdafn as lf
from .quantum import DynR, constant_R, dense_R, template_R
from .rfield import RMatrixField
from .superalg import DegenerateFormError, build_algebra

FIELD_SCHEMA = "superdyn.rmatrix/1"
DYNR_SCHEMA = "superdyn.dynr/1"


class SchemaError(ValueError):
    def __init__(self, path, msg):
        self.path = path or "/"
        super().__init__(f"{self.path}: {msg}")


def _require(obj, key, path, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(path, f"missing field {key!r}")
    v = obj[key]
    if kind is not None and not isinstance(v, kind):
        raise SchemaError(f"{path}/{key}", f"expected {getattr(kind, '__name__', kind)}")
    return v


def _algebra(obj, path):
    kind = _require(obj, "kind", path, str)
    m = _require(obj, "m", path, int)
    n = _require(obj, "n", path, int)
    if kind not in ("gl", "sl"):
        raise SchemaError(f"{path}/kind", f"unknown algebra kind {kind!r}")
    try:
        return build_algebra(kind, m, n)
    except DegenerateFormError:
        raise
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from exc


def _expr(obj, path):
    try:
        return lf.from_json(obj, path)
    except lf.ExprSchemaError as exc:
        raise SchemaError(exc.path, str(exc)) from exc


def canonical_dumps(obj):
    """Deterministic JSON text (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": "))


def digest(obj):
    return hashlib.sha256(canonical_dumps(obj).encode()).hexdigest()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, Fraction):
        return str(v)
    return v


# -- r-matrix fields ------------------------------------------------------------------------------

def field_to_json(r):
    alg = r.alg
    p = alg.parity
    return {
        "schema": FIELD_SCHEMA,
        "algebra": {"kind": alg.kind, "m": alg.m, "n": alg.n},
        "l": [[str(Fraction(x)) for x in row] for row in r.l],
        "terms": [
            {"i": int(i), "j": int(j), "left": alg.labels[i], "right": alg.labels[j],
             "parity": int((p[i] + p[j]) % 2), "coeff": lf.to_json(e)}
            for (i, j), e in r.sorted_terms()
        ],
        "metadata": _jsonable(r.metadata),
    }


def field_from_json(obj):
    if not isinstance(obj, dict):
        raise SchemaError("/", "expected an object")
    if obj.get("schema") != FIELD_SCHEMA:
        raise SchemaError("/schema", f"expected {FIELD_SCHEMA!r}")
    alg = _algebra(_require(obj, "algebra", "", dict), "/algebra")
    rows = _require(obj, "l", "", list)
    l = np.empty((len(rows), alg.rank), dtype=object)
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != alg.rank:
            raise SchemaError(f"/l/{k}", f"expected {alg.rank} Cartan coordinates")
        for c, v in enumerate(row):
            try:
                l[k, c] = Fraction(v)
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"/l/{k}/{c}", f"not a rational number: {v!r}") from exc
    out = RMatrixField(alg, l, {}, dict(obj.get("metadata", {})))
    p = alg.parity
    for t, term in enumerate(_require(obj, "terms", "", list)):
        path = f"/terms/{t}"
        i = _require(term, "i", path, int)
        j = _require(term, "j", path, int)
        for key, v in (("i", i), ("j", j)):
            if not 0 <= v < alg.dim:
                raise SchemaError(f"{path}/{key}", f"basis index {v} out of range")
        par = _require(term, "parity", path, int)
        if par != (p[i] + p[j]) % 2:
            raise SchemaError(f"{path}/parity", f"declared parity {par} disagrees with the basis")
        if par:
            raise SchemaError(f"{path}/parity", "odd terms are not allowed in an even field")
        if (i, j) in out.terms:
            raise SchemaError(path, f"duplicate term ({i}, {j})")
        out.terms[(i, j)] = _expr(_require(term, "coeff", path), f"{path}/coeff")
    return out


# -- quantum R-matrices -----------------------------------------------------------------------------

def _pairs_to_json(d):
    return [{"a": int(a), "b": int(b), "coeff": lf.to_json(e)} for (a, b), e in sorted(d.items())]


def dynr_to_json(R):
    out = {"schema": DYNR_SCHEMA, "m": R.m, "n": R.n, "weights": R.weights.tolist(),
           "metadata": _jsonable(R.metadata)}
    if R.template is not None:
        out["template"] = {"alpha": _pairs_to_json(R.template["alpha"]),
                           "beta": _pairs_to_json(R.template["beta"])}
    elif R.entries is not None:
        out["dense"] = [{"row": int(i), "col": int(j), "coeff": lf.to_json(e)}
                        for (i, j), e in sorted(R.entries.items())]
    else:
        raise ValueError("R has no serializable representation")
    return out


def _pairs_from_json(items, path, N):
    out = {}
    for k, it in enumerate(items):
        a = _require(it, "a", f"{path}/{k}", int)
        b = _require(it, "b", f"{path}/{k}", int)
        if not (0 <= a < N and 0 <= b < N) or a == b:
            raise SchemaError(f"{path}/{k}", f"bad index pair ({a}, {b})")
        out[(a, b)] = _expr(_require(it, "coeff", f"{path}/{k}"), f"{path}/{k}/coeff")
    return out


def dynr_from_json(obj):
    if not isinstance(obj, dict):
        raise SchemaError("/", "expected an object")
    if obj.get("schema") != DYNR_SCHEMA:
        raise SchemaError("/schema", f"expected {DYNR_SCHEMA!r}")
    m = _require(obj, "m", "", int)
    n = _require(obj, "n", "", int)
    N = m + n
    weights = np.asarray(obj.get("weights", np.eye(N).tolist()), dtype=float)
    if weights.ndim != 2 or weights.shape[0] != N:
        raise SchemaError("/weights", f"expected {N} weight rows")
    if "template" in obj:
        tpl = _require(obj, "template", "", dict)
        R = template_R(m, n, _pairs_from_json(tpl.get("alpha", []), "/template/alpha", N),
                       _pairs_from_json(tpl.get("beta", []), "/template/beta", N), weights)
    elif "dense" in obj:
        entries = {}
        p = np.array([0] * m + [1] * n)
        for k, it in enumerate(_require(obj, "dense", "", list)):
            path = f"/dense/{k}"
            i = _require(it, "row", path, int)
            j = _require(it, "col", path, int)
            if not (0 <= i < N * N and 0 <= j < N * N):
                raise SchemaError(path, "entry index out of range")
            if (p[i // N] + p[i % N] + p[j // N] + p[j % N]) % 2:
                raise SchemaError(path, "odd entry in an even R-matrix")
            entries[(i, j)] = _expr(_require(it, "coeff", path), f"{path}/coeff")
        if all(isinstance(e, lf.Const) for e in entries.values()):
            M = np.zeros((N * N, N * N))
            for (i, j), e in entries.items():
                M[i, j] = e.value
            R = constant_R(m, n, M, weights)
        else:
            R = dense_R(m, n, entries, weights)
    else:
        raise SchemaError("/", "expected 'template' or 'dense'")
    R.metadata.update(obj.get("metadata", {}))
    return R


def load(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("/", f"invalid JSON ({exc})") from exc
    return obj


def load_any(obj):
    """Field or R-matrix according to the schema tag."""
    tag = obj.get("schema") if isinstance(obj, dict) else None
    if tag == FIELD_SCHEMA:
        return field_from_json(obj)
    if tag == DYNR_SCHEMA:
        return dynr_from_json(obj)
    raise SchemaError("/schema", f"unknown schema {tag!r}")
