"""Matrix Lie superalgebras gl(m,n) and sl(m,n) with exact structure data.

Elements are handled in two forms: sparse matrices ``{(a, b): coeff}`` over
the elementary matrices E_ab of C^{m|n}, and coordinate vectors in the chosen
basis of the algebra.  All structure data (brackets, Gram matrix, roots) is
computed with :class:`fractions.Fraction` and exposed again as float arrays
for the numerical layers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import sympy


class DegenerateFormError(ValueError):
    """The invariant form (or its restriction) has a nontrivial radical."""

    def __init__(self, radical_dim, where="algebra"):
        self.radical_dim = radical_dim
        super().__init__(f"degenerate form on {where}: radical dimension {radical_dim}")


def _rat(v):
    f = Fraction(v) if not isinstance(v, float) else Fraction(v).limit_denominator(10**12)
    return sympy.Rational(f.numerator, f.denominator)


def _exact_inverse(mat):
    M = sympy.Matrix(mat.shape[0], mat.shape[1], lambda i, j: _rat(mat[i, j]))
    inv = M.inv()
    out = np.empty(mat.shape, dtype=object)
    for i in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            v = inv[i, j]
            out[i, j] = Fraction(int(v.p), int(v.q))
    return out


def _exact_rank(mat):
    M = sympy.Matrix(mat.shape[0], mat.shape[1], lambda i, j: _rat(mat[i, j]))
    return M.rank()


def _exact_nullspace(mat):
    """Rows spanning the right nullspace of ``mat`` (exact)."""
    M = sympy.Matrix(mat.shape[0], mat.shape[1], lambda i, j: _rat(mat[i, j]))
    vecs = M.nullspace()
    out = np.empty((len(vecs), mat.shape[1]), dtype=object)
    for r, v in enumerate(vecs):
        for j in range(mat.shape[1]):
            out[r, j] = Fraction(int(v[j].p), int(v[j].q))
    return out


def to_float(arr):
    return np.array(arr, dtype=float)


def _sparse_add(x, y, scale=1):
    out = dict(x)
    for k, v in y.items():
        out[k] = out.get(k, 0) + scale * v
        if out[k] == 0:
            del out[k]
    return out


@dataclass(frozen=True)
class Root:
    """A root eps_a - eps_b, identified by its matrix position (a, b)."""

    a: int
    b: int
    vector: tuple  # values on the Cartan basis, exact
    parity: int

    @property
    def positive(self):
        return self.a < self.b

    @property
    def negative_pair(self):
        return (self.b, self.a)

    def __repr__(self):
        sign = "+" if self.positive else "-"
        return f"Root({self.a + 1},{self.b + 1}{sign}{'odd' if self.parity else 'even'})"


@dataclass
class RootDatum:
    roots: list
    simple_roots: list
    root_vectors: dict  # (a, b) -> (basis index, sign) with e_alpha = sign * basis[index]
    norm_constants: dict  # (a, b) -> A_alpha

    def root(self, a, b):
        return self._by_pair[(a, b)]

    @cached_property
    def _by_pair(self):
        return {(r.a, r.b): r for r in self.roots}

    @property
    def positive(self):
        return [r for r in self.roots if r.positive]

    def negative_of(self, root):
        return self._by_pair[(root.b, root.a)]

    def sum_root(self, r1, r2):
        """The root r1 + r2, or None."""
        if r1.b == r2.a and r1.a != r2.b:
            return self._by_pair[(r1.a, r2.b)]
        if r2.b == r1.a and r2.a != r1.b:
            return self._by_pair[(r2.a, r1.b)]
        return None

    def simple_support(self, root):
        """Indices k of the simple roots alpha_k = eps_k - eps_{k+1} in the expansion."""
        lo, hi = min(root.a, root.b), max(root.a, root.b)
        return tuple(range(lo, hi))


class SuperLieAlgebra:
    """gl(m,n) or sl(m,n) in the basis (Cartan basis, then E_ab with a != b)."""

    def __init__(self, kind, m, n):
        if kind not in ("gl", "sl"):
            raise ValueError(f"unknown kind {kind!r}")
        if m < 0 or n < 0 or m + n < 1:
            raise ValueError("need m, n >= 0 and m + n >= 1")
        if kind == "sl" and m + n < 2:
            raise ValueError("sl(m,n) with m + n = 1 is zero-dimensional")
        self.kind, self.m, self.n = kind, m, n
        N = self.N = m + n
        self.vparity = np.array([0] * m + [1] * n, dtype=int)
        self.metadata = {}
        if kind == "sl" and m == n:
            self.metadata["warning"] = "degenerate form"

        # Cartan basis as diagonal vectors
        if kind == "gl":
            diag = []
            for a in range(N):
                d = [Fraction(0)] * N
                d[a] = Fraction(1)
                diag.append(d)
            cartan_labels = [f"E{a + 1}{a + 1}" for a in range(N)]
        else:
            diag = []
            for i in range(N - 1):
                d = [Fraction(0)] * N
                d[i] = Fraction((-1) ** self.vparity[i])
                d[i + 1] = -Fraction((-1) ** self.vparity[i + 1])
                diag.append(d)
            cartan_labels = [f"H{i + 1}" for i in range(N - 1)]
        self.cartan_diag = np.array(diag, dtype=object)  # rank x N
        self.rank = len(diag)

        self.offdiag = [(a, b) for a in range(N) for b in range(N) if a != b]
        self.labels = cartan_labels + [f"E{a + 1}{b + 1}" for a, b in self.offdiag]
        self.dim = self.rank + len(self.offdiag)
        self.cartan_indices = list(range(self.rank))
        self._off_index = {ab: self.rank + k for k, ab in enumerate(self.offdiag)}
        self.parity = np.array(
            [0] * self.rank + [int(self.vparity[a] ^ self.vparity[b]) for a, b in self.offdiag],
            dtype=int,
        )
        # left inverse used to read diagonal matrices back in Cartan coordinates
        D = self.cartan_diag.T  # N x rank
        DtD = np.array([[sum(D[k, i] * D[k, j] for k in range(N)) for j in range(self.rank)]
                        for i in range(self.rank)], dtype=object)
        self._diag_solver = _exact_inverse(DtD).dot(D.T)

        self.structure_constants = self._compute_structure_constants()
        self.gram = self._compute_gram()

    # -- element conversions -------------------------------------------------

    def basis_sparse(self, i):
        if i < self.rank:
            return {(a, a): self.cartan_diag[i, a] for a in range(self.N) if self.cartan_diag[i, a] != 0}
        return {self.offdiag[i - self.rank]: Fraction(1)}

    def basis_matrix(self, i):
        M = np.zeros((self.N, self.N))
        for (a, b), v in self.basis_sparse(i).items():
            M[a, b] = float(v)
        return M

    def index_of(self, a, b):
        """Basis index of E_ab for a != b."""
        return self._off_index[(a, b)]

    def coords(self, sparse):
        """Exact coordinates of a sparse matrix lying in the algebra."""
        out = np.array([Fraction(0)] * self.dim, dtype=object)
        d = np.array([Fraction(0)] * self.N, dtype=object)
        for (a, b), v in sparse.items():
            if a == b:
                d[a] += v
            else:
                out[self._off_index[(a, b)]] += v
        t = self._diag_solver.dot(d)
        back = self.cartan_diag.T.dot(t)
        if any(back[k] != d[k] for k in range(self.N)):
            raise ValueError("diagonal part is not in the algebra (nonzero supertrace)")
        out[: self.rank] = t
        return out

    def element(self, coords):
        """Sparse matrix for a coordinate vector."""
        out = {}
        for i, c in enumerate(coords):
            if c != 0:
                out = _sparse_add(out, self.basis_sparse(i), c)
        return out

    def sparse_bracket(self, x, y, px, py):
        """Matrix supercommutator of homogeneous sparse matrices."""
        out = {}
        sign = -1 if (px and py) else 1
        for (a, b), u in x.items():
            for (c, d), v in y.items():
                if b == c:
                    out[(a, d)] = out.get((a, d), 0) + u * v
                if d == a:
                    out[(c, b)] = out.get((c, b), 0) - sign * u * v
        return {k: v for k, v in out.items() if v != 0}

    def _compute_structure_constants(self):
        c = np.empty((self.dim, self.dim, self.dim), dtype=object)
        c.fill(Fraction(0))
        sp = [self.basis_sparse(i) for i in range(self.dim)]
        for i in range(self.dim):
            for j in range(self.dim):
                br = self.sparse_bracket(sp[i], sp[j], self.parity[i], self.parity[j])
                if br:
                    c[i, j, :] = self.coords(br)
        return c

    def _compute_gram(self):
        # (x, y) = str(xy)
        G = np.empty((self.dim, self.dim), dtype=object)
        sp = [self.basis_sparse(i) for i in range(self.dim)]
        for i in range(self.dim):
            for j in range(self.dim):
                s = Fraction(0)
                for (a, b), u in sp[i].items():
                    for (c, d), v in sp[j].items():
                        if b == c and a == d:
                            s += (-1) ** int(self.vparity[a]) * u * v
                G[i, j] = s
        return G

    # -- exact operations ------------------------------------------------------

    def bracket(self, x, y):
        """Bracket of coordinate vectors (exact if inputs are exact)."""
        return np.einsum("i,j,ijk->k", x, y, self.structure_constants)

    def form(self, x, y):
        return x.dot(self.gram).dot(y)

    # -- float views -------------------------------------------------------------

    @cached_property
    def c_float(self):
        return to_float(self.structure_constants)

    @cached_property
    def gram_float(self):
        return to_float(self.gram)

    @cached_property
    def cartan_gram(self):
        idx = self.cartan_indices
        return self.gram[np.ix_(idx, idx)]

    @cached_property
    def sign2(self):
        """(-1)^{|x_i||x_j|} for basis pairs."""
        p = self.parity
        return np.where(np.outer(p, p) % 2 == 1, -1.0, 1.0)

    @cached_property
    def rho(self):
        """Vector-representation matrices of the basis, shape (dim, N, N)."""
        return np.array([self.basis_matrix(i) for i in range(self.dim)])

    @cached_property
    def roots(self):
        return root_system(self)

    def is_degenerate(self):
        return _exact_rank(self.gram) < self.dim

    def descriptor(self):
        return {"kind": self.kind, "m": self.m, "n": self.n}

    def __repr__(self):
        return f"{self.kind}({self.m},{self.n})"


_ALGEBRA_CACHE = {}


def build_algebra(kind, m, n):
    """Build (and cache) gl(m,n) or sl(m,n)."""
    key = (kind, m, n)
    if key not in _ALGEBRA_CACHE:
        _ALGEBRA_CACHE[key] = SuperLieAlgebra(kind, m, n)
    return _ALGEBRA_CACHE[key]


def dual_basis(alg):
    """Coordinates of the dual basis {a^i} with (a_i, a^j) = delta_ij, as rows."""
    r = _exact_rank(alg.gram)
    if r < alg.dim:
        raise DegenerateFormError(alg.dim - r)
    # (a_i, a^j) = sum_k G[i,k] D[j,k]  => D = (G^{-1})^T
    return _exact_inverse(alg.gram).T


def casimir(alg, exact=False):
    """The invariant Casimir tensor as a (dim, dim) coefficient array.

    With (a_i, a^j) = delta_ij the ad-invariant element is sum_i a^i (x) a_i,
    which equals sum_i (-1)^{|a_i|} a_i (x) a^i; the two orderings differ on
    odd basis elements.
    """
    D = dual_basis(alg)
    # sum_i (sum_k D[i,k] e_k) (x) e_i
    return D.T.copy() if exact else to_float(D.T)


def casimir_block(alg, subspace, exact=False):
    """Component of Omega in h0 (x) h0 for a subspace h0 of the Cartan.

    ``subspace`` is a (k, rank) array of Cartan-coordinate rows.  The form must
    be nondegenerate on it; the result is the Casimir element of h0, which is
    the orthogonal projection of the Cartan part of Omega when h = l (+) h0 is
    an orthogonal splitting.
    """
    Y = np.array(subspace, dtype=object).reshape(-1, alg.rank)
    out = np.empty((alg.dim, alg.dim), dtype=object)
    out.fill(Fraction(0))
    if Y.shape[0] == 0:
        return out if exact else to_float(out)
    Gh = alg.cartan_gram
    G0 = Y.dot(Gh).dot(Y.T)
    r = _exact_rank(G0)
    if r < Y.shape[0]:
        raise DegenerateFormError(Y.shape[0] - r, "h0")
    G0inv = _exact_inverse(G0)
    block = Y.T.dot(G0inv).dot(Y)  # rank x rank in Cartan coordinates
    out[: alg.rank, : alg.rank] = block
    return out if exact else to_float(out)


def root_system(alg):
    """Roots from the adjoint action of the Cartan on the E_ab (a != b)."""
    roots, vectors, norms = [], {}, {}
    for a, b in alg.offdiag:
        k = alg.index_of(a, b)
        vec = []
        for h in alg.cartan_indices:
            col = alg.structure_constants[h, k, :]
            nz = [j for j in range(alg.dim) if col[j] != 0]
            if nz and nz != [k]:
                raise ValueError("adjoint action of the Cartan is not diagonal on E_ab")
            vec.append(col[k])
        parity = int(alg.vparity[a] ^ alg.vparity[b])
        root = Root(a, b, tuple(vec), parity)
        roots.append(root)
        # e_alpha = (-1)^{|a|} E_ab for alpha positive, e_{-alpha} = E_ba
        sign = (-1) ** int(alg.vparity[a]) if a < b else 1
        vectors[(a, b)] = (k, sign)
    for r in roots:
        ka, sa = vectors[(r.a, r.b)]
        kb, sb = vectors[(r.b, r.a)]
        pairing = sa * sb * alg.gram[ka, kb]
        norms[(r.a, r.b)] = (-1) ** r.parity * pairing
    simple = [next(r for r in roots if (r.a, r.b) == (k, k + 1)) for k in range(alg.N - 1)]
    return RootDatum(roots=roots, simple_roots=simple, root_vectors=vectors, norm_constants=norms)


def root_vector(alg, root):
    """Coordinate vector (float) of e_alpha."""
    k, s = alg.roots.root_vectors[(root.a, root.b)]
    v = np.zeros(alg.dim)
    v[k] = s
    return v


def vector_rep(alg, x):
    """Defining matrix representation on C^{m|n} of a coordinate vector."""
    return np.einsum("i,iab->ab", np.asarray(x, dtype=float), alg.rho)


def weight_of_vector(alg, c):
    """Weight of the standard basis vector v_c on the Cartan basis."""
    return np.array([alg.cartan_diag[i, c] for i in range(alg.rank)], dtype=object)


def algebra_to_json(alg):
    rd = alg.roots
    return {
        **alg.descriptor(),
        "basis": alg.labels,
        "parity": alg.parity.tolist(),
        "cartan_indices": alg.cartan_indices,
        "structure_constants": [
            [i, j, k, str(alg.structure_constants[i, j, k])]
            for i in range(alg.dim) for j in range(alg.dim) for k in range(alg.dim)
            if alg.structure_constants[i, j, k] != 0
        ],
        "gram": [[str(v) for v in row] for row in alg.gram],
        "metadata": alg.metadata,
        "roots": [
            {
                "pair": [r.a + 1, r.b + 1],
                "vector": [str(v) for v in r.vector],
                "parity": r.parity,
                "positive": r.positive,
                "root_vector": {"index": rd.root_vectors[(r.a, r.b)][0],
                                "sign": rd.root_vectors[(r.a, r.b)][1]},
                "A": int(rd.norm_constants[(r.a, r.b)]),
            }
            for r in rd.roots
        ],
        "simple_roots": [[r.a + 1, r.b + 1] for r in rd.simple_roots],
    }
