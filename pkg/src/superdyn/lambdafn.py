"""Scalar functions of lambda as small expression trees.

The grammar is closed: constants, affine pairings (mu, lambda - nu), negation,
sums, products, reciprocals, coth and exp.  Differentiation is symbolic with
only zero pruning; evaluation guards against poles of Recip and Coth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

POLE_GUARD = 1e-3


class PoleProximity(ArithmeticError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"pole argument {value!r} within guard {POLE_GUARD}")


def _tup(v):
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Pairing:
    """(mu, lambda - nu) with mu a covector and nu a point, both in coordinates."""

    mu: tuple
    nu: tuple

    def __post_init__(self):
        object.__setattr__(self, "mu", _tup(self.mu))
        object.__setattr__(self, "nu", _tup(self.nu))
        if len(self.mu) != len(self.nu):
            raise ValueError("mu and nu dimensions differ")


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    args: tuple


@dataclass(frozen=True)
class Mul:
    args: tuple


@dataclass(frozen=True)
class Recip:
    arg: "Expr"


@dataclass(frozen=True)
class Coth:
    arg: "Expr"


@dataclass(frozen=True)
class Exp:
    arg: "Expr"


Expr = Union[Const, Pairing, Neg, Add, Mul, Recip, Coth, Exp]

ZERO = Const(0.0)
ONE = Const(1.0)


def const(c):
    return Const(float(c))


def is_zero(e):
    return isinstance(e, Const) and e.value == 0.0


def add(*args):
    terms = tuple(a for a in args if not is_zero(a))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(terms)


def mul(*args):
    if any(is_zero(a) for a in args):
        return ZERO
    c = 1.0
    for a in args:
        if isinstance(a, Const):
            c *= a.value
    rest = tuple(a for a in args if not isinstance(a, Const))
    factors = rest if c == 1.0 else (Const(c),) + rest
    if not factors:
        return ONE
    if len(factors) == 1:
        return factors[0]
    return Mul(factors)


def neg(e):
    if is_zero(e):
        return ZERO
    if isinstance(e, Const):
        return Const(-e.value)
    return Neg(e)


def scale(c, e):
    return mul(const(c), e)


def pairing(mu, nu=None):
    mu = _tup(mu)
    return Pairing(mu, _tup(nu) if nu is not None else (0.0,) * len(mu))


# -- evaluation -----------------------------------------------------------------

def evaluate(e, lam, guard=POLE_GUARD):
    """Float value of ``e`` at ``lam``; raises PoleProximity near Recip/Coth poles."""
    lam = np.asarray(lam, dtype=float)
    return _ev(e, lam, guard)


def pole_scale(e):
    """Product of the constant factors in front of ``e``.

    The guard compares |e| / |scale| so that coth(c (alpha, lambda)) with a
    small c is judged by the distance of lambda to the hyperplane.
    """
    if isinstance(e, Neg):
        return pole_scale(e.arg)
    if isinstance(e, Mul):
        c = 1.0
        for a in e.args:
            c *= abs(a.value) if isinstance(a, Const) else pole_scale(a)
        return c
    return 1.0


def _near_pole(x, arg, guard):
    sc = pole_scale(arg)
    return abs(x) < guard * (sc if sc > 0 else 1.0)


def _ev(e, lam, guard):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Pairing):
        if not e.mu:
            return 0.0
        return float(np.dot(e.mu, lam - np.asarray(e.nu)))
    if isinstance(e, Neg):
        return -_ev(e.arg, lam, guard)
    if isinstance(e, Add):
        return math.fsum(_ev(a, lam, guard) for a in e.args)
    if isinstance(e, Mul):
        out = 1.0
        for a in e.args:
            out *= _ev(a, lam, guard)
        return out
    if isinstance(e, Recip):
        x = _ev(e.arg, lam, guard)
        if _near_pole(x, e.arg, guard):
            raise PoleProximity(x)
        return 1.0 / x
    if isinstance(e, Coth):
        x = _ev(e.arg, lam, guard)
        if _near_pole(x, e.arg, guard):
            raise PoleProximity(x)
        return 1.0 / math.tanh(x)
    if isinstance(e, Exp):
        return math.exp(_ev(e.arg, lam, guard))
    raise TypeError(f"not an expression: {e!r}")


def pole_arguments(e):
    """All subexpressions appearing as Recip/Coth arguments."""
    out = []

    def walk(x):
        if isinstance(x, (Recip, Coth)):
            out.append(x.arg)
            walk(x.arg)
        elif isinstance(x, (Neg, Exp)):
            walk(x.arg)
        elif isinstance(x, (Add, Mul)):
            for a in x.args:
                walk(a)

    walk(e)
    return out


# -- differentiation ------------------------------------------------------------

def differentiate(e, i):
    """Partial derivative in coordinate ``i``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Pairing):
        return const(e.mu[i]) if e.mu else ZERO
    if isinstance(e, Neg):
        return neg(differentiate(e.arg, i))
    if isinstance(e, Add):
        return add(*(differentiate(a, i) for a in e.args))
    if isinstance(e, Mul):
        terms = []
        for k, a in enumerate(e.args):
            da = differentiate(a, i)
            if not is_zero(da):
                terms.append(mul(*e.args[:k], da, *e.args[k + 1:]))
        return add(*terms)
    if isinstance(e, Recip):
        da = differentiate(e.arg, i)
        if is_zero(da):
            return ZERO
        return neg(mul(da, Recip(e.arg), Recip(e.arg)))
    if isinstance(e, Coth):
        da = differentiate(e.arg, i)
        if is_zero(da):
            return ZERO
        return mul(da, add(ONE, neg(mul(Coth(e.arg), Coth(e.arg)))))
    if isinstance(e, Exp):
        da = differentiate(e.arg, i)
        if is_zero(da):
            return ZERO
        return mul(da, e)
    raise TypeError(f"not an expression: {e!r}")


# -- coordinate changes -----------------------------------------------------------

def substitute_linear(e, B):
    """Expression for lambda -> e(B lambda) with B invertible."""
    B = np.asarray(B, dtype=float)
    Binv = np.linalg.inv(B) if B.size else B

    def sub(x):
        if isinstance(x, Const):
            return x
        if isinstance(x, Pairing):
            if not x.mu:
                return x
            return Pairing(B.T.dot(x.mu), Binv.dot(x.nu))
        if isinstance(x, (Neg, Recip, Coth, Exp)):
            return type(x)(sub(x.arg))
        if isinstance(x, (Add, Mul)):
            return type(x)(tuple(sub(a) for a in x.args))
        raise TypeError(f"not an expression: {x!r}")

    return sub(e)


def translate(e, nu):
    """Expression for lambda -> e(lambda - nu)."""
    nu = np.asarray(nu, dtype=float)

    def sub(x):
        if isinstance(x, Const):
            return x
        if isinstance(x, Pairing):
            return Pairing(x.mu, np.asarray(x.nu) + nu)
        if isinstance(x, (Neg, Recip, Coth, Exp)):
            return type(x)(sub(x.arg))
        if isinstance(x, (Add, Mul)):
            return type(x)(tuple(sub(a) for a in x.args))
        raise TypeError(f"not an expression: {x!r}")

    return sub(e)


# -- serialization ------------------------------------------------------------------

def to_json(e):
    if isinstance(e, Const):
        return {"op": "const", "value": e.value}
    if isinstance(e, Pairing):
        return {"op": "pairing", "mu": list(e.mu), "nu": list(e.nu)}
    if isinstance(e, (Neg, Recip, Coth, Exp)):
        return {"op": type(e).__name__.lower(), "arg": to_json(e.arg)}
    if isinstance(e, (Add, Mul)):
        return {"op": type(e).__name__.lower(), "args": [to_json(a) for a in e.args]}
    raise TypeError(f"not an expression: {e!r}")


_UNARY = {"neg": Neg, "recip": Recip, "coth": Coth, "exp": Exp}
_NARY = {"add": Add, "mul": Mul}


class ExprSchemaError(ValueError):
    def __init__(self, path, msg):
        self.path = path
        super().__init__(f"{path}: {msg}")


def from_json(obj, path=""):
    if not isinstance(obj, dict) or "op" not in obj:
        raise ExprSchemaError(path or "/", "expected an object with 'op'")
    op = obj["op"]
    try:
        if op == "const":
            return Const(float(obj["value"]))
        if op == "pairing":
            return Pairing(tuple(obj["mu"]), tuple(obj["nu"]))
        if op in _UNARY:
            return _UNARY[op](from_json(obj["arg"], f"{path}/arg"))
        if op in _NARY:
            return _NARY[op](tuple(from_json(a, f"{path}/args/{k}") for k, a in enumerate(obj["args"])))
    except ExprSchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ExprSchemaError(path or "/", f"malformed {op!r} node ({exc})") from exc
    raise ExprSchemaError(f"{path}/op", f"unknown op {op!r}")


# -- sampling -------------------------------------------------------------------------

class SamplingError(RuntimeError):
    pass


def sample_lambda(dim, seed, pole_set=(), max_tries=1000, guard=POLE_GUARD, rng=None):
    """Uniform point of [-2, 2]^dim keeping every pole argument at least ``guard`` away.

    ``pole_set`` holds expressions whose absolute value must stay above the guard.
    Pass ``rng`` to draw a sequence of samples from one generator.
    """
    rng = rng if rng is not None else np.random.default_rng(seed)
    for _ in range(max_tries):
        lam = rng.uniform(-2.0, 2.0, size=dim)
        try:
            if not any(_near_pole(_ev(p, lam, guard), p, guard) for p in pole_set):
                return lam
        except PoleProximity:
            continue
    raise SamplingError(f"no admissible lambda after {max_tries} draws")
