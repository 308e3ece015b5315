"""Residuals of the classical equations and gauge transformations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lambdafn as lf
from .graded import alt_s, super_twist, yb_bracket
from .rfield import (
    RMatrixField,
    TwoFormError,
    add_two_form,
    embed_cartan,
    normalize_two_form,
    sample_points,
    two_form_closed_residual,
)
from .superalg import casimir, to_float

TOL_STRUCT = 1e-12
TOL_RESIDUAL = 1e-9


@dataclass
class ResidualReport:
    name: str
    max_abs: float
    tolerance: float
    samples: list = field(default_factory=list)  # (lambda, value) rows

    @property
    def verdict(self):
        return "pass" if self.max_abs <= self.tolerance else "fail"

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_json(self):
        return {
            "check": self.name,
            "max_abs": self.max_abs,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "samples": [{"lambda": [float(x) for x in lam], "value": v} for lam, v in self.samples],
        }


def _scan(name, r, fn, n_samples, seed, tol):
    if r.is_constant():
        lam = np.zeros(r.dim_l)
        v = float(fn(lam))
        return ResidualReport(name, v, tol, [(lam, v)])
    rows = [(lam, float(fn(lam))) for lam in sample_points(r, r.dim_l, n_samples, seed)]
    return ResidualReport(name, max(v for _, v in rows), tol, rows)


def cdybe_tensor(r, lam):
    """Alt_s(dr) + [[r, r]] at lam."""
    t = r.evaluate(lam)
    out = yb_bracket(r.alg, t, t)
    if r.dim_l:
        out = out + alt_s(r.alg, r.dr(lam))
    return out


def cdybe_residual(r, n_samples=20, seed=0, tol=TOL_RESIDUAL):
    return _scan("cdybe", r, lambda lam: np.max(np.abs(cdybe_tensor(r, lam))), n_samples, seed, tol)


def dr_finite_difference(r, lam, h=1e-6):
    Yf = embed_cartan(r.alg, r.l)
    out = np.zeros((r.alg.dim,) * 3)
    for k in range(r.dim_l):
        e = np.zeros(r.dim_l)
        e[k] = h
        d = (r.evaluate(lam + e) - r.evaluate(lam - e)) / (2 * h)
        out += np.einsum("a,bc->abc", Yf[k], d)
    return out


def derivative_residual(r, n_samples=20, seed=0, tol=1e-6, h=1e-6):
    """Relative gap between symbolic and central-difference Alt_s(dr)."""

    def fn(lam):
        a = alt_s(r.alg, r.dr(lam))
        b = alt_s(r.alg, dr_finite_difference(r, lam, h))
        return np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(a)))

    return _scan("derivative", r, fn, n_samples, seed, tol)


def unitarity_residual(r, eps, n_samples=20, seed=0, tol=TOL_STRUCT):
    Om = casimir(r.alg)

    def fn(lam):
        t = r.evaluate(lam)
        return np.max(np.abs(t + super_twist(r.alg, t) - eps * Om))

    return _scan("unitarity", r, fn, n_samples, seed, tol)


def _ad_cartan(alg, y):
    """Matrix M with [y, x_j] = sum_k M[k, j] x_k."""
    return np.einsum("i,ijk->kj", y, alg.c_float)


def invariance_residual(r, l=None, n_samples=20, seed=0, tol=TOL_STRUCT):
    """max |[y (x) 1 + 1 (x) y, r]| over a basis y of l (defaults to the field's l)."""
    Y = r.l if l is None else np.asarray(l, dtype=object).reshape(-1, r.alg.rank)
    Ms = [_ad_cartan(r.alg, y) for y in embed_cartan(r.alg, Y)]

    def fn(lam):
        t = r.evaluate(lam)
        return max((np.max(np.abs(M.dot(t) + t.dot(M.T))) for M in Ms), default=0.0)

    return _scan("invariance", r, fn, n_samples, seed, tol)


def l_skew_residual(r, l=None, n_samples=20, seed=0, tol=TOL_STRUCT):
    """Components of r - T_s(r) with a leg pairing nontrivially with l."""
    Y = r.l if l is None else np.asarray(l, dtype=object).reshape(-1, r.alg.rank)
    P = embed_cartan(r.alg, Y).dot(r.alg.gram_float)  # functionals (y, .)

    def fn(lam):
        t = r.evaluate(lam)
        a = t - super_twist(r.alg, t)
        if P.shape[0] == 0:
            return 0.0
        return max(np.max(np.abs(P.dot(a))), np.max(np.abs(a.dot(P.T))))

    return _scan("lskew", r, fn, n_samples, seed, tol)


def cybe_residual(alg, t, tol=TOL_STRUCT):
    t = np.asarray(t, dtype=float)
    v = float(np.max(np.abs(yb_bracket(alg, t, t))))
    return ResidualReport("cybe", v, tol, [(np.zeros(0), v)])


# -- gauge transformations ------------------------------------------------------------------

@dataclass(frozen=True)
class TwoFormShift:
    C: tuple  # k x k grid of floats or expressions


@dataclass(frozen=True)
class Translate:
    nu: tuple


@dataclass(frozen=True)
class Weyl:
    """A permutation of the standard basis of C^{m|n} preserving parities.

    It acts on the algebra by conjugation and on lambda by the induced map.
    """

    perm: tuple


class GaugeError(ValueError):
    pass


def _perm_matrix(perm):
    n = len(perm)
    P = np.zeros((n, n))
    for a, b in enumerate(perm):
        P[b, a] = 1.0  # v_a -> v_perm(a)
    return P


def weyl_algebra_matrix(alg, perm):
    """Matrix A on algebra coordinates of x -> P x P^{-1}, and its Cartan block."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(alg.N)):
        raise GaugeError("not a permutation")
    if any(alg.vparity[a] != alg.vparity[b] for a, b in enumerate(perm)):
        raise GaugeError("permutation mixes even and odd basis vectors")
    from .superalg import _sparse_add

    A = np.zeros((alg.dim, alg.dim))
    for j in range(alg.dim):
        img = {}
        for (a, b), v in alg.basis_sparse(j).items():
            img = _sparse_add(img, {(perm[a], perm[b]): v})
        A[:, j] = to_float(alg.coords(img))
    return A


def gauge_apply(r, g, closed_tol=1e-9):
    alg = r.alg
    if isinstance(g, Translate):
        nu = np.asarray(g.nu, dtype=float)
        terms = {k: lf.translate(e, nu) for k, e in r.terms.items()}
        return r.copy_with_terms(terms)
    if isinstance(g, TwoFormShift):
        grid = normalize_two_form(g.C, r.dim_l)
        if two_form_closed_residual(grid) > closed_tol:
            raise TwoFormError("gauge two-form is not closed")
        out = r.copy_with_terms(r.terms)
        add_two_form(out, grid)
        return out
    if isinstance(g, Weyl):
        A = weyl_algebra_matrix(alg, g.perm)
        Ah = A[: alg.rank, : alg.rank]
        Yf = to_float(r.l) if r.l.size else np.zeros((0, alg.rank))
        # r'(lambda) = (A (x) A) r(lambda o A); needs A l = l, A y_i = sum_j B[i, j] y_j
        if Yf.shape[0]:
            img = Yf.dot(Ah.T)
            B, res, *_ = np.linalg.lstsq(Yf.T, img.T, rcond=None)
            if np.max(np.abs(Yf.T.dot(B) - img.T)) > 1e-12:
                raise GaugeError("Weyl element does not preserve l")
            B = B.T
        else:
            B = np.zeros((0, 0))
        out = RMatrixField(alg, r.l, {}, dict(r.metadata))
        for (i, j), e in r.terms.items():
            e2 = lf.substitute_linear(e, B) if B.size else e
            for a in np.nonzero(np.abs(A[:, i]) > 0)[0]:
                for b in np.nonzero(np.abs(A[:, j]) > 0)[0]:
                    w = A[a, i] * A[b, j]
                    out.add_term(a, b, lf.scale(w, e2) if w != 1.0 else e2)
        return out
    raise TypeError(f"unknown gauge transform {g!r}")


def inverse_gauge(g):
    if isinstance(g, Translate):
        return Translate(tuple(-float(x) for x in g.nu))
    if isinstance(g, TwoFormShift):
        return TwoFormShift(tuple(tuple(lf.neg(lf.const(v)) if isinstance(v, (int, float)) else lf.neg(v)
                                        for v in row) for row in g.C))
    if isinstance(g, Weyl):
        inv = [0] * len(g.perm)
        for a, b in enumerate(g.perm):
            inv[b] = a
        return Weyl(tuple(inv))
    raise TypeError(f"unknown gauge transform {g!r}")
