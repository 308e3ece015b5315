"""Koszul-signed operations on g (x) g and g (x) g (x) g.

Tensors are plain numpy arrays of coefficients over basis pairs/triples of an
algebra, so ``t[i, j]`` is the coefficient of ``x_i (x) x_j``.
"""
from __future__ import annotations

import numpy as np


def super_twist(alg, t):
    """T_s(a (x) b) = (-1)^{|a||b|} b (x) a."""
    t = np.asarray(t)
    return (alg.sign2 * t).T


def is_even(alg, t, tol=0.0):
    p = alg.parity
    odd_mask = (p[:, None] + p[None, :]) % 2 == 1
    return bool(np.all(np.abs(np.asarray(t, dtype=complex)[odd_mask]) <= tol))


def alt_s(alg, t):
    """Signed cyclic sum a(x)b(x)c + (-1)^{|a|(|b|+|c|)} b(x)c(x)a + (-1)^{|c|(|a|+|b|)} c(x)a(x)b."""
    t = np.asarray(t)
    p = alg.parity
    pi, pj, pk = np.ix_(p, p, p)
    s_bca = np.where((pi * (pj + pk)) % 2 == 1, -1.0, 1.0)
    s_cab = np.where((pk * (pi + pj)) % 2 == 1, -1.0, 1.0)
    # coefficient t[i,j,k] of x_i x_j x_k lands at (j,k,i) and (k,i,j)
    return t + np.transpose(s_bca * t, (1, 2, 0)) + np.transpose(s_cab * t, (2, 0, 1))


def wedge(alg, a, b):
    """a ^ b := a (x) b - T_s(a (x) b) for coordinate vectors a, b."""
    ab = np.outer(a, b)
    return ab - super_twist(alg, ab)


def yb_bracket(alg, r, s):
    """[r12, s13] + [r12, s23] + [r13, s23] for even tensors r, s.

    Products in the three-slot graded algebra reduce, for even r and s, to
    brackets in a single slot times a Koszul sign; see the free-word oracle in
    the tests for the derivation.
    """
    c = alg.c_float
    S = alg.sign2
    r = np.asarray(r)
    s = np.asarray(s)
    if r.shape != (alg.dim, alg.dim) or s.shape != (alg.dim, alg.dim):
        raise ValueError("tensors do not match the algebra dimension")
    out = np.einsum("ij,kl,ik,ikm->mjl", r, s, S, c, optimize=True)
    out = out + np.einsum("ij,kl,jkm->iml", r, s, c, optimize=True)
    out = out + np.einsum("ij,kl,jl,jlm->ikm", r, s, S, c, optimize=True)
    return out
