"""Dynamical r-matrix fields and their constructors.

A field lives on l* for a commutative subspace l of the Cartan, given by rows
of Cartan coordinates y_1..y_k.  The dynamical variable is stored in the
coordinates lambda_i = lambda(y_i); pairings (alpha, lambda) use the form
restricted to l.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import lambdafn as lf
from .graded import super_twist
from .superalg import (
    DegenerateFormError,
    _exact_inverse,
    _exact_nullspace,
    _exact_rank,
    casimir,
    casimir_block,
    to_float,
)


class InvalidRootSubset(ValueError):
    pass


class DomainError(ValueError):
    pass


class Unsupported(NotImplementedError):
    pass


class InfeasibleR00(ValueError):
    pass


class TwoFormError(ValueError):
    pass


# -- the dynamical subspace ----------------------------------------------------------

def full_cartan(alg):
    """Rows of the identity: l = h."""
    return np.eye(alg.rank, dtype=object) * Fraction(1)


def _as_exact_rows(alg, l):
    if l is None:
        return full_cartan(alg)
    Y = np.array(l, dtype=object).reshape(-1, alg.rank)
    out = np.empty(Y.shape, dtype=object)
    for idx, v in np.ndenumerate(Y):
        out[idx] = Fraction(v).limit_denominator(10**12) if isinstance(v, float) else Fraction(v)
    return out


def l_gram(alg, Y):
    return Y.dot(alg.cartan_gram).dot(Y.T)


def pairing_covector(alg, Y, root):
    """c with (alpha|_l, lambda) = c . lambda in the coordinates lambda_i = lambda(y_i)."""
    if Y.shape[0] == 0:
        return np.zeros(0)
    a = np.array(root.vector, dtype=object)
    Gl = l_gram(alg, Y)
    if _exact_rank(Gl) < Y.shape[0]:
        raise DegenerateFormError(Y.shape[0] - _exact_rank(Gl), "l")
    return to_float(_exact_inverse(Gl).dot(Y.dot(a)))


def orthogonal_complement(alg, Y):
    """Rows spanning the orthogonal complement of l inside the Cartan."""
    if Y.shape[0] == 0:
        return full_cartan(alg)
    M = Y.dot(alg.cartan_gram)
    null = _exact_nullspace(M)
    if null.shape[0] + Y.shape[0] != alg.rank:
        raise DegenerateFormError(null.shape[0] + Y.shape[0] - alg.rank, "l")
    G0 = null.dot(alg.cartan_gram).dot(null.T) if null.shape[0] else null
    if null.shape[0] and _exact_rank(G0) < null.shape[0]:
        raise DegenerateFormError(null.shape[0] - _exact_rank(G0), "h0")
    return null


def embed_cartan(alg, Y):
    """Algebra coordinates (float) of Cartan rows."""
    out = np.zeros((Y.shape[0], alg.dim))
    out[:, : alg.rank] = to_float(Y) if Y.size else 0.0
    return out


# -- the field --------------------------------------------------------------------------

def _fold(e1, e2):
    if isinstance(e1, lf.Const) and isinstance(e2, lf.Const):
        return lf.Const(e1.value + e2.value)
    return lf.add(e1, e2)


@dataclass
class RMatrixField:
    alg: object
    l: np.ndarray  # (k, rank) exact Cartan rows
    terms: dict = field(default_factory=dict)  # (i, j) -> Expr
    metadata: dict = field(default_factory=dict)

    @property
    def dim_l(self):
        return self.l.shape[0]

    def add_term(self, i, j, coeff):
        if lf.is_zero(coeff):
            return
        key = (int(i), int(j))
        new = _fold(self.terms[key], coeff) if key in self.terms else coeff
        if lf.is_zero(new):
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    def add_constant(self, t, scale=1.0):
        for i, j in zip(*np.nonzero(np.abs(t) > 0)):
            self.add_term(i, j, lf.const(scale * t[i, j]))

    def sorted_terms(self):
        return sorted(self.terms.items())

    def check_even(self):
        p = self.alg.parity
        bad = [(i, j) for (i, j) in self.terms if (p[i] + p[j]) % 2]
        if bad:
            raise ValueError(f"odd terms in field: {bad[:3]}")

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros((self.alg.dim, self.alg.dim))
        for (i, j), e in self.terms.items():
            out[i, j] += lf.evaluate(e, lam)
        return out

    def partials(self, lam):
        """List over l coordinates of the partial derivative tensors."""
        lam = np.asarray(lam, dtype=float)
        out = [np.zeros((self.alg.dim, self.alg.dim)) for _ in range(self.dim_l)]
        for (i, j), e in self.terms.items():
            for k in range(self.dim_l):
                out[k][i, j] += lf.evaluate(self._derivative(e, k), lam)
        return out

    def _derivative(self, e, k):
        cache = self.__dict__.setdefault("_dcache", {})
        key = (id(e), k)
        if key not in cache:
            cache[key] = (e, lf.differentiate(e, k))
        return cache[key][1]

    def dr(self, lam):
        """sum_i y_i (x) d r / d lambda_i as a 3-tensor."""
        Yf = embed_cartan(self.alg, self.l)
        out = np.zeros((self.alg.dim,) * 3)
        for k, P in enumerate(self.partials(lam)):
            out += np.einsum("a,bc->abc", Yf[k], P)
        return out

    def pole_set(self):
        seen, out = set(), []
        for _, e in self.sorted_terms():
            for p in lf.pole_arguments(e):
                if p not in seen:
                    seen.add(p)
                    out.append(p)
        return out

    def copy_with_terms(self, terms, **meta):
        md = dict(self.metadata)
        md.update(meta)
        return RMatrixField(self.alg, self.l, dict(terms), md)

    def is_constant(self):
        return self.dim_l == 0 or all(isinstance(e, lf.Const) for e in self.terms.values())


def sample_points(field_or_poles, dim, n_samples, seed):
    """Deterministic list of pole-guarded sample points."""
    poles = field_or_poles.pole_set() if hasattr(field_or_poles, "pole_set") else list(field_or_poles)
    rng = np.random.default_rng(seed)
    return [lf.sample_lambda(dim, seed, poles, rng=rng) for _ in range(n_samples)]


# -- two-forms ---------------------------------------------------------------------------

def _expr(v):
    return v if not isinstance(v, (int, float, Fraction, np.floating, np.integer)) else lf.const(float(v))


def normalize_two_form(D, k):
    """Return a k x k grid of expressions, checking exact antisymmetry."""
    if D is None:
        return None
    grid = [[_expr(D[i][j]) for j in range(k)] for i in range(k)]
    for i in range(k):
        if not lf.is_zero(grid[i][i]) and not (isinstance(grid[i][i], lf.Const) and grid[i][i].value == 0):
            raise TwoFormError(f"diagonal entry ({i},{i}) is nonzero")
        for j in range(i + 1, k):
            a, b = grid[i][j], grid[j][i]
            ok = (isinstance(a, lf.Const) and isinstance(b, lf.Const) and a.value == -b.value) or b == lf.neg(a)
            if not ok:
                raise TwoFormError(f"entries ({i},{j}) and ({j},{i}) are not negatives")
    return grid


def two_form_closed_residual(grid, n_samples=20, seed=0):
    """max |d_k D_ij + d_i D_jk + d_j D_ki| at sampled points."""
    k = len(grid)
    if k < 3:
        return 0.0
    poles = [p for row in grid for e in row for p in lf.pole_arguments(e)]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        lam = lf.sample_lambda(k, seed, poles, rng=rng)
        for i, j, m in combinations(range(k), 3):
            v = (lf.evaluate(lf.differentiate(grid[i][j], m), lam)
                 + lf.evaluate(lf.differentiate(grid[j][m], i), lam)
                 + lf.evaluate(lf.differentiate(grid[m][i], j), lam))
            worst = max(worst, abs(v))
    return worst


def add_two_form(field_, grid, sign=1.0):
    """Add sum_{ij} D_ij y_i (x) y_j to the field (y_i the l basis)."""
    Yf = to_float(field_.l) if field_.l.size else np.zeros((0, field_.alg.rank))
    k = Yf.shape[0]
    for i in range(k):
        for j in range(k):
            e = grid[i][j]
            if lf.is_zero(e):
                continue
            for a in range(field_.alg.rank):
                for b in range(field_.alg.rank):
                    w = sign * Yf[i, a] * Yf[j, b]
                    if w != 0:
                        field_.add_term(a, b, lf.scale(w, e) if w != 1.0 else e)


# -- root subsets ---------------------------------------------------------------------------

def check_root_subset(alg, X):
    """Closed under negation and under sums that are roots."""
    rd = alg.roots
    Xs = {(r.a, r.b) for r in X}
    for r in X:
        if (r.b, r.a) not in Xs:
            raise InvalidRootSubset(f"{r} in X but its negative is not")
    for r1 in X:
        for r2 in X:
            s = rd.sum_root(r1, r2)
            if s is not None and (s.a, s.b) not in Xs:
                raise InvalidRootSubset(f"{r1} + {r2} = {s} is a root outside X")
    return True


def roots_from_pairs(alg, pairs):
    return [alg.roots.root(a, b) for a, b in pairs]


def span_roots(alg, simple_subset):
    """Roots whose simple support lies inside the given simple-root indices (both signs)."""
    S = set(simple_subset)
    rd = alg.roots
    return [r for r in rd.roots if set(rd.simple_support(r)) <= S]


def _root_pair_coeff(alg, root):
    """Coefficient of x_k (x) x_k' representing e_alpha (x) e_{-alpha}."""
    rv = alg.roots.root_vectors
    k1, s1 = rv[(root.a, root.b)]
    k2, s2 = rv[(root.b, root.a)]
    return k1, k2, s1 * s2


def _ev_base(alg, X, nu, D, constructor):
    X = list(X)
    check_root_subset(alg, X)
    Y = full_cartan(alg)
    f = RMatrixField(alg, Y, {}, {"constructor": constructor})
    nu = np.zeros(alg.rank) if nu is None else np.asarray(nu, dtype=float)
    if D is not None:
        grid = normalize_two_form(D, alg.rank)
        if two_form_closed_residual(grid) > 1e-9:
            raise TwoFormError("D is not closed")
        add_two_form(f, grid)
    return f, X, Y, nu


def ev_zero_coupling(alg, X, nu=None, D=None):
    """Zero weight, zero coupling: D + sum_{alpha in X} A_alpha/(alpha, lambda - nu) e_alpha (x) e_-alpha."""
    f, X, Y, nu = _ev_base(alg, X, nu, D, "ev_zero_coupling")
    rd = alg.roots
    for r in X:
        A = float(rd.norm_constants[(r.a, r.b)])
        k1, k2, s = _root_pair_coeff(alg, r)
        c = pairing_covector(alg, Y, r)
        f.add_term(k1, k2, lf.scale(A * s, lf.Recip(lf.Pairing(c, nu))))
    f.metadata.update({"epsilon": 0.0, "X": sorted([r.a, r.b] for r in X), "nu": nu.tolist()})
    return f


def ev_nonzero_coupling(alg, X, nu=None, D=None, eps=1.0, branch=-1, overrides=None):
    """Zero weight, coupling eps.

    Outside X the coefficient of e_alpha (x) e_-alpha is ``branch * eps/2`` on
    negative roots and ``-branch * (-1)^{|alpha|} eps/2`` on positive ones.
    branch = -1 is the standard choice for the distinguished Borel, +1 the
    opposite one.  ``overrides`` maps a positive root pair (a, b) to its own
    branch sign.  The result solves the CDYBE when X is the set of roots in
    the span of some simple roots; other closed X need a compatible Borel.
    """
    if eps == 0:
        raise ValueError("eps = 0: use ev_zero_coupling")
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    f, X, Y, nu = _ev_base(alg, X, nu, D, "ev_nonzero_coupling")
    overrides = overrides or {}
    rd = alg.roots
    f.add_constant(casimir(alg), eps / 2)
    Xs = {(r.a, r.b) for r in X}
    for r in rd.roots:
        k1, k2, s = _root_pair_coeff(alg, r)
        if (r.a, r.b) in Xs:
            A = float(rd.norm_constants[(r.a, r.b)])
            c = pairing_covector(alg, Y, r)
            phi = lf.scale(eps / 2, lf.Coth(lf.scale(A * eps / 2, lf.Pairing(c, nu))))
        else:
            b = overrides.get((min(r.a, r.b), max(r.a, r.b)), branch)
            phi = lf.const(-b * (-1) ** r.parity * eps / 2 if r.positive else b * eps / 2)
        f.add_term(k1, k2, lf.scale(s, phi) if s != 1 else phi)
    f.metadata.update({"epsilon": float(eps), "branch": int(branch),
                       "X": sorted([r.a, r.b] for r in X), "nu": nu.tolist()})
    return f


# -- admissible triples ------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleTriple:
    """Simple roots are referred to by index k (alpha_k = eps_k - eps_{k+1})."""

    gamma1: tuple
    gamma2: tuple
    tau: tuple  # pairs (k, tau(k))

    @classmethod
    def make(cls, tau):
        tau = dict(tau)
        return cls(tuple(sorted(tau)), tuple(sorted(tau.values())), tuple(sorted(tau.items())))

    @property
    def tau_map(self):
        return dict(self.tau)

    @property
    def inverse_map(self):
        return {v: k for k, v in self.tau}

    def validate(self, alg, Y=None):
        rd = alg.roots
        t = self.tau_map
        if len(set(t.values())) != len(t):
            raise ValueError("tau is not injective")
        nsimple = len(rd.simple_roots)
        if any(k < 0 or k >= nsimple for k in list(t) + list(t.values())):
            raise ValueError("simple root index out of range")
        G = alg.cartan_gram
        Ginv = _exact_inverse(G)
        vec = {k: np.array(rd.simple_roots[k].vector, dtype=object) for k in range(nsimple)}

        def form(i, j):
            return vec[i].dot(Ginv).dot(vec[j])

        for i in t:
            if rd.simple_roots[i].parity != rd.simple_roots[t[i]].parity:
                raise ValueError(f"tau changes the parity of simple root {i + 1}")
            for j in t:
                if form(t[i], t[j]) != form(i, j):
                    raise ValueError(f"tau is not an isometry on ({i + 1},{j + 1})")
        if Y is not None and Y.shape[0]:
            for i in t:
                if any(v != 0 for v in Y.dot(vec[i] - vec[t[i]])):
                    raise ValueError(f"tau does not preserve l-weights at simple root {i + 1}")
        return True


def gamma3(t):
    """Largest subset of gamma1 & gamma2 stable under tau."""
    tm, inv = t.tau_map, t.inverse_map
    S = set(t.gamma1) & set(t.gamma2)
    while True:
        drop = {a for a in S if tm.get(a) not in S or inv.get(a) not in S}
        if not drop:
            return tuple(sorted(S))
        S -= drop


def _tau_root(alg, t, root):
    """Image of a positive root whose support lies in gamma1 (contiguous supports)."""
    tm = t.tau_map
    supp = alg.roots.simple_support(root)
    img = sorted(tm[k] for k in supp)
    if img != list(range(img[0], img[0] + len(img))):
        raise DomainError(f"tau does not map the support of {root} to a root")
    return alg.roots.root(img[0], img[-1] + 1)


def tau_bar(alg, t, root, _cache=None):
    """(tau(alpha), coordinates of tau_bar(e_alpha)) for a positive root in span(gamma1).

    Simple root vectors go to simple root vectors; longer ones are peeled as
    e_alpha = [e_{alpha_a}, e_beta] / c and mapped through the bracket.
    """
    rd = alg.roots
    tm = t.tau_map
    supp = rd.simple_support(root)
    if not root.positive or not set(supp) <= set(tm):
        raise DomainError(f"{root} is not a positive root in the span of gamma1")
    from .superalg import root_vector

    if len(supp) == 1:
        k = supp[0]
        img = rd.simple_roots[tm[k]]
        return img, root_vector(alg, img)
    first = rd.simple_roots[supp[0]]
    rest = rd.root(root.a + 1, root.b)
    br = alg.bracket(root_vector(alg, first), root_vector(alg, rest))
    ea = root_vector(alg, root)
    c = float(br.dot(ea)) / float(ea.dot(ea))
    if abs(c) < 1e-12 or np.max(np.abs(br - c * ea)) > 1e-12:
        raise DomainError(f"{root} is not the bracket of its first simple root and the rest")
    i1, v1 = tau_bar(alg, t, first)
    i2, v2 = tau_bar(alg, t, rest)
    img = _tau_root(alg, t, root)
    out = alg.bracket(v1, v2) / c
    ei = root_vector(alg, img)
    if np.max(np.abs(out - (out.dot(ei) / ei.dot(ei)) * ei)) > 1e-12 or abs(out.dot(ei)) < 1e-12:
        raise DomainError(f"extension of tau does not send e_{root} to a root vector")
    return img, out


def _k_terms(alg, t, root, Y, g3):
    """K(lambda) e_alpha as a list of (coefficient expr, coordinate vector)."""
    from .superalg import root_vector

    rd = alg.roots
    if not t.gamma1:
        raise DomainError("gamma1 is empty")
    supp = set(rd.simple_support(root))
    if not root.positive or not supp <= set(t.gamma1):
        raise DomainError(f"{root} is not a positive root in the span of gamma1")
    A = float(rd.norm_constants[(root.a, root.b)])
    c = pairing_covector(alg, Y, root)
    zeros = np.zeros(Y.shape[0])
    if g3 and supp <= set(g3):
        if any(t.tau_map[k] != k for k in g3):
            raise Unsupported("tau restricted to gamma3 is not the identity")
        if np.allclose(c, 0):
            raise DomainError(f"{root} vanishes on l, so coth((A/2)(alpha, lambda)) is singular")
        return [(lf.scale(0.5, lf.Coth(lf.Pairing(A / 2 * c, zeros))), root_vector(alg, root))]
    out = [(lf.const(0.5), root_vector(alg, root))]
    cur, vec, n = root, root_vector(alg, root), 0
    seen = set()
    while set(rd.simple_support(cur)) <= set(t.gamma1):
        if (cur.a, cur.b) in seen:
            raise Unsupported(f"tau orbit of {root} does not leave gamma1")
        seen.add((cur.a, cur.b))
        img, img_vec_unit = tau_bar(alg, t, cur)
        # tau_bar is linear: scale by the coefficient of the current vector
        eu = root_vector(alg, cur)
        vec = (vec.dot(eu) / eu.dot(eu)) * img_vec_unit
        cur, n = img, n + 1
        coeff = lf.Exp(lf.Pairing(-n * A * c, zeros)) if Y.shape[0] else lf.const(1.0)
        out.append((coeff, vec))
    return out


def k_map(alg, t, root, lam=None, l=None):
    """K(lambda)(e_alpha) as a coordinate vector at ``lam`` (or the symbolic terms if lam is None)."""
    Y = _as_exact_rows(alg, l)
    terms = _k_terms(alg, t, root, Y, gamma3(t))
    if lam is None:
        return terms
    return sum(lf.evaluate(e, lam) * v for e, v in terms)


@dataclass
class R00Solution:
    particular: np.ndarray  # (dim, dim) tensor supported on h0 (x) h0
    homogeneous: list
    residual: float
    h0: np.ndarray


def _r00_system(alg, t, U):
    """Linear map R -> stacked equations, and right-hand side, in h0 coordinates."""
    rd = alg.roots
    Uf = to_float(U)
    k0 = Uf.shape[0]
    if k0 == 0:
        return np.zeros((0, 0)), np.zeros(0), np.zeros((0, 0))
    G0 = to_float(U.dot(alg.cartan_gram).dot(U.T))
    W = np.linalg.inv(G0)  # Omega_00 in the u basis
    rows, rhs = [], []
    for k, tk in t.tau:
        a = Uf.dot(to_float(np.array(rd.simple_roots[k].vector, dtype=object)))
        ta = Uf.dot(to_float(np.array(rd.simple_roots[tk].vector, dtype=object)))
        # component b: sum_a ta_a R_ab + sum_c a_c R_bc = 1/2 sum_a (a + ta)_a W_ab
        for b in range(k0):
            row = np.zeros((k0, k0))
            row[:, b] += ta
            row[b, :] += a
            rows.append(row.ravel())
            rhs.append(0.5 * (a + ta).dot(W[:, b]))
    return np.array(rows).reshape(-1, k0 * k0), np.array(rhs), W


def _embed_h0(alg, U, R):
    Uf = to_float(U)
    out = np.zeros((alg.dim, alg.dim))
    if Uf.shape[0]:
        out[: alg.rank, : alg.rank] = Uf.T.dot(R).dot(Uf)
    return out


def r00_residual(alg, t, U, R):
    M, rhs, _ = _r00_system(alg, t, U)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(M.dot(np.asarray(R).ravel()) - rhs))) if len(rhs) else 0.0


def _skew_basis(k0):
    out = []
    for a in range(k0):
        for b in range(a + 1, k0):
            B = np.zeros((k0, k0))
            B[a, b], B[b, a] = 1.0, -1.0
            out.append(B)
    return out


def solve_r00(alg, t, h0=None, l=None, skew=True, tol=1e-10):
    """Minimal-norm solution of the r00 system plus a basis of its homogeneous part.

    With ``skew`` (the default) the search is restricted to antisymmetric r00,
    the solutions for which the assembled r-matrix satisfies the CDYBE and
    r + T_s(r) = Omega.  ``skew=False`` solves the bare linear system.
    ``h0`` defaults to the orthogonal complement of ``l`` in the Cartan.
    """
    Y = _as_exact_rows(alg, l)
    U = orthogonal_complement(alg, Y) if h0 is None else _as_exact_rows(alg, h0)
    k0 = U.shape[0]
    M, rhs, _ = _r00_system(alg, t, U)
    if k0 == 0:
        return R00Solution(np.zeros((alg.dim, alg.dim)), [], 0.0, U)
    basis = _skew_basis(k0) if skew else [np.eye(k0 * k0)[i].reshape(k0, k0) for i in range(k0 * k0)]
    if not basis:
        x = np.zeros(0)
        Mb = np.zeros((M.shape[0], 0))
    else:
        Mb = M.dot(np.array([B.ravel() for B in basis]).T) if M.shape[0] else np.zeros((0, len(basis)))
    if Mb.shape[0] == 0:
        return R00Solution(np.zeros((alg.dim, alg.dim)), [_embed_h0(alg, U, B) for B in basis], 0.0, U)
    x = np.linalg.lstsq(Mb, rhs, rcond=None)[0] if Mb.shape[1] else np.zeros(0)
    res = np.abs(Mb.dot(x) - rhs) if Mb.shape[1] else np.abs(rhs)
    if np.max(res) > tol:
        bad = int(np.argmax(res)) // k0
        kind = "antisymmetric " if skew else ""
        raise InfeasibleR00(f"no {kind}r00 solves the system at simple root {t.tau[bad][0] + 1}")
    R = sum((xi * B for xi, B in zip(x, basis)), np.zeros((k0, k0)))
    hom = []
    if Mb.shape[1]:
        _, sv, Vt = np.linalg.svd(Mb)
        rank = int(np.sum(sv > tol))
        for v in Vt[rank:]:
            hom.append(_embed_h0(alg, U, sum((vi * B for vi, B in zip(v, basis)), np.zeros((k0, k0)))))
    return R00Solution(_embed_h0(alg, U, R), hom, float(np.max(res)), U)


def schiffmann_super(alg, t, l=None, r00=None):
    """1/2 Omega + r00 + sum K(e_alpha) ^ e_-alpha + sum 1/2 e_alpha ^ e_-alpha.

    The first sum runs over positive roots in the span of gamma1, the second
    over the remaining positive roots.  ``r00`` defaults to the minimal-norm
    solution of its defining system.
    """
    from .graded import wedge
    from .superalg import root_vector

    Y = _as_exact_rows(alg, l)
    t.validate(alg, Y)
    g3 = gamma3(t)
    if r00 is None:
        r00 = solve_r00(alg, t, l=Y).particular
    else:
        r00 = np.asarray(r00, dtype=float)
    f = RMatrixField(alg, Y, {}, {"constructor": "schiffmann_super", "epsilon": 1.0,
                                 "tau": [list(p) for p in t.tau], "gamma3": list(g3)})
    f.add_constant(casimir(alg), 0.5)
    f.add_constant(r00)
    rd = alg.roots
    span1 = set(t.gamma1)
    for r in rd.positive:
        em = root_vector(alg, rd.negative_of(r))
        if set(rd.simple_support(r)) <= span1:
            pieces = _k_terms(alg, t, r, Y, g3)
        else:
            # 1/2 A_alpha: for odd alpha the plain 1/2 would pick a Borel
            # incompatible with the coth terms on gamma1
            pieces = [(lf.const(0.5 * float(rd.norm_constants[(r.a, r.b)])), root_vector(alg, r))]
        for coeff, vec in pieces:
            w = wedge(alg, vec, em)
            for i, j in zip(*np.nonzero(np.abs(w) > 1e-15)):
                f.add_term(i, j, lf.scale(w[i, j], coeff) if w[i, j] != 1.0 else coeff)
    return f


# -- enumeration of admissible configurations --------------------------------------------------

def _candidate_ls(alg, t):
    """h, {0}, coordinate subspaces and the largest l on which tau preserves weights."""
    rank = alg.rank
    rd = alg.roots
    out = [full_cartan(alg), np.zeros((0, rank), dtype=object)]
    for size in range(1, rank):
        for S in combinations(range(rank), size):
            out.append(full_cartan(alg)[list(S)])
    moved = [np.array(rd.simple_roots[k].vector, dtype=object) - np.array(rd.simple_roots[v].vector, dtype=object)
             for k, v in t.tau if k != v]
    if moved:
        null = _exact_nullspace(np.array(moved, dtype=object))
        if 0 < null.shape[0] < rank:
            out.append(null)
    return out


def admissible_configurations(alg, limit=None):
    """All (triple, l) pairs for which the super Schiffmann construction goes through.

    Triples run over parity preserving isometric partial maps between sets of
    simple roots.  Pairs failing a precondition (degenerate l, tau moving
    l-weights, a root of gamma3 vanishing on l, no antisymmetric r00) are
    dropped.
    """
    from itertools import permutations

    nsimple = len(alg.roots.simple_roots)
    out = []
    for size in range(nsimple + 1):
        for g1 in combinations(range(nsimple), size):
            for g2 in permutations(range(nsimple), size):
                t = AdmissibleTriple.make(dict(zip(g1, g2)))
                try:
                    t.validate(alg)
                except ValueError:
                    continue
                seen = set()
                for Y in _candidate_ls(alg, t):
                    key = tuple(map(tuple, Y))
                    if key in seen:
                        continue
                    seen.add(key)
                    try:
                        r = schiffmann_super(alg, t, l=Y)
                    except (DomainError, Unsupported, InfeasibleR00, DegenerateFormError, ValueError):
                        continue
                    out.append((t, Y, r))
                    if limit is not None and len(out) >= limit:
                        return out
    return out


def closed_root_subsets(alg):
    """Every X closed under negation and under root sums, as lists of roots."""
    rd = alg.roots
    pos = rd.positive
    out = []
    for mask in range(1 << len(pos)):
        X = []
        for k, r in enumerate(pos):
            if mask >> k & 1:
                X += [r, rd.negative_of(r)]
        try:
            check_root_subset(alg, X)
        except InvalidRootSubset:
            continue
        out.append(X)
    return out


def simple_span_subsets(alg):
    """X = span(S) & roots for every set S of simple roots."""
    nsimple = len(alg.roots.simple_roots)
    return [span_roots(alg, S) for size in range(nsimple + 1) for S in combinations(range(nsimple), size)]
