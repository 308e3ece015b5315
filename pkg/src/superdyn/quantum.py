"""Quantum dynamical R-matrices on V = C^{m|n}: QDYBE with step, super Hecke
condition, the zero-weight template and the semiclassical limit."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import lambdafn as lf
from .verify import ResidualReport


def vparity(m, n):
    return np.array([0] * m + [1] * n, dtype=int)


def super_permutation(m, n):
    """Matrix of v_a (x) v_b -> (-1)^{|a||b|} v_b (x) v_a."""
    p = vparity(m, n)
    N = m + n
    P = np.zeros((N * N, N * N))
    for a in range(N):
        for b in range(N):
            P[b * N + a, a * N + b] = -1.0 if p[a] and p[b] else 1.0
    return P


def standard_weights(m, n):
    """Weights of v_c in the coordinates lambda(E_aa): the unit vectors."""
    return np.eye(m + n)


@dataclass
class DynR:
    """An even operator-valued function lambda -> End(V (x) V).

    ``weights[c]`` is the weight of v_c in the lambda coordinates used by
    ``func``.  Serializable instances also carry ``template`` or ``entries``.
    """

    m: int
    n: int
    weights: np.ndarray
    func: Callable
    kind: str = "function"
    template: Optional[dict] = None
    entries: Optional[dict] = None
    poles: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.m + self.n

    @property
    def parity(self):
        return vparity(self.m, self.n)

    @property
    def dim_lambda(self):
        return self.weights.shape[1]

    def __call__(self, lam):
        return self.func(np.asarray(lam, dtype=float))

    def is_constant(self):
        return self.kind == "constant" or self.dim_lambda == 0


def constant_R(m, n, M, weights=None, name="constant"):
    M = np.array(M, dtype=float)
    w = standard_weights(m, n) if weights is None else np.asarray(weights, dtype=float)
    return DynR(m, n, w, lambda lam: M, kind="constant", metadata={"name": name},
                entries={(i, j): lf.const(M[i, j]) for i, j in zip(*np.nonzero(M))})


def identity_R(m, n):
    return constant_R(m, n, np.eye((m + n) ** 2), name="identity")


def permutation_R(m, n):
    return constant_R(m, n, super_permutation(m, n), name="super permutation")


def _elem(N, a, b):
    E = np.zeros((N, N))
    E[a, b] = 1.0
    return E


def template_matrix(m, n, alpha, beta):
    """sum E_aa (x) E_aa + sum alpha_ab E_aa (x) E_bb + sum beta_ab E_ab (x) E_ba (plain Kronecker)."""
    N = m + n
    M = np.zeros((N * N, N * N))
    for a in range(N):
        M += np.kron(_elem(N, a, a), _elem(N, a, a))
    for (a, b), v in alpha.items():
        M += v * np.kron(_elem(N, a, a), _elem(N, b, b))
    for (a, b), v in beta.items():
        M += v * np.kron(_elem(N, a, b), _elem(N, b, a))
    return M


def template_R(m, n, alpha, beta, weights=None):
    """Zero-weight template with LambdaExpr (or float) coefficients alpha_ab, beta_ab (a != b)."""
    ex = lambda v: v if not isinstance(v, (int, float, np.floating)) else lf.const(float(v))
    alpha = {tuple(k): ex(v) for k, v in alpha.items()}
    beta = {tuple(k): ex(v) for k, v in beta.items()}
    for a, b in list(alpha) + list(beta):
        if a == b:
            raise ValueError("template coefficients need a != b")
    w = standard_weights(m, n) if weights is None else np.asarray(weights, dtype=float)

    def func(lam):
        return template_matrix(m, n, {k: lf.evaluate(e, lam) for k, e in alpha.items()},
                               {k: lf.evaluate(e, lam) for k, e in beta.items()})

    poles = [p for e in list(alpha.values()) + list(beta.values()) for p in lf.pole_arguments(e)]
    return DynR(m, n, w, func, kind="template", template={"alpha": alpha, "beta": beta}, poles=poles)


def dense_R(m, n, entries, weights=None):
    """Entries {(row, col): Expr} of an (N^2 x N^2) matrix."""
    N = m + n
    w = standard_weights(m, n) if weights is None else np.asarray(weights, dtype=float)
    entries = {tuple(k): v for k, v in entries.items()}

    def func(lam):
        M = np.zeros((N * N, N * N))
        for (i, j), e in entries.items():
            M[i, j] = lf.evaluate(e, lam)
        return M

    poles = [p for e in entries.values() for p in lf.pole_arguments(e)]
    return DynR(m, n, w, func, kind="dense", entries=entries, poles=poles)


def rational_R(m, n, shift=1.0):
    """Dynamical rational solution of the QDYBE (step 1) in template form.

    alpha_ab = (x_ab + shift) / x_ab and beta_ab = -(-1)^{|a||b|} / x_ab with
    x_ab = (-1)^{|a|} lambda_a - (-1)^{|b|} lambda_b.  The sign on beta is the
    Koszul sign of E_ab (x) E_ba, which the plain Kronecker template omits.
    """
    N = m + n
    p = vparity(m, n)
    alpha, beta = {}, {}
    for a in range(N):
        for b in range(N):
            if a == b:
                continue
            mu = np.zeros(N)
            mu[a] += -1.0 if p[a] else 1.0
            mu[b] -= -1.0 if p[b] else 1.0
            x = lf.pairing(mu)
            alpha[(a, b)] = lf.mul(lf.add(x, lf.const(shift)), lf.Recip(x))
            beta[(a, b)] = lf.Recip(x) if p[a] and p[b] else lf.neg(lf.Recip(x))
    R = template_R(m, n, alpha, beta)
    R.metadata["name"] = "rational"
    return R


# -- classical to quantum --------------------------------------------------------------------

def rho(r, lam):
    """Matrix of r(lam) on V (x) V with the Koszul sign (A (x) B)(v_c (x) w) = (-1)^{|B||c|} A v_c (x) B w."""
    alg = r.alg
    return rho_tensor(alg, r.evaluate(lam))


def rho_tensor(alg, t):
    N = alg.N
    S = np.where(np.outer(alg.parity, alg.vparity) % 2 == 1, -1.0, 1.0)  # (-1)^{|x_j| p(c)}
    M = np.einsum("ij,iac,jbd,jc->abcd", t, alg.rho, alg.rho, S, optimize=True)
    return M.reshape(N * N, N * N)


def weights_for_field(r):
    """Weights of the v_c on the field's l basis: omega_c(y_i)."""
    alg = r.alg
    Y = r.l
    W = np.zeros((alg.N, Y.shape[0]))
    for c in range(alg.N):
        diag = alg.cartan_diag[:, c]  # H_k -> coefficient of E_cc
        W[c] = [float(sum(Y[i, k] * diag[k] for k in range(alg.rank))) for i in range(Y.shape[0])]
    return W


def from_rfield(r, gamma):
    """R_gamma(lambda) = Id - gamma * rho(r(lambda))."""
    alg = r.alg
    N = alg.N
    I = np.eye(N * N)
    return DynR(alg.m, alg.n, weights_for_field(r), lambda lam: I - gamma * rho(r, lam),
                kind="function", poles=r.pole_set(), metadata={"gamma": gamma})


# -- QDYBE --------------------------------------------------------------------------------------

def _p23(m, n):
    N = m + n
    Ps = super_permutation(m, n)
    return np.kron(np.eye(N), Ps)


def qdybe_tensor(R, gamma, lam):
    """R12(l - g h3) R13(l) R23(l - g h1) - R23(l) R13(l - g h2) R12(l)."""
    N = R.N
    I = np.eye(N)
    lam = np.asarray(lam, dtype=float)
    P23 = _p23(R.m, R.n)
    E = [_elem(N, c, c) for c in range(N)]
    W = R.weights
    R0 = R(lam)
    shifted = [R(lam - gamma * W[c]) for c in range(N)]

    R12 = np.kron(R0, I)
    R23 = np.kron(I, R0)
    R13 = P23 @ R12 @ P23
    R12_h3 = sum(np.kron(shifted[c], E[c]) for c in range(N))
    R23_h1 = sum(np.kron(E[a], shifted[a]) for a in range(N))
    R13_h2 = P23 @ R12_h3 @ P23
    return R12_h3 @ R13 @ R23_h1 - R23 @ R13_h2 @ R12


def _sample(R, n_samples, seed, gamma=0.0):
    # guard the shifted arguments as well
    poles = list(R.poles)
    shifted = []
    for p in poles:
        for c in range(R.N):
            for s in (0.0, -gamma):
                shifted.append(lf.translate(p, -s * R.weights[c]) if R.dim_lambda else p)
    rng = np.random.default_rng(seed)
    return [lf.sample_lambda(R.dim_lambda, seed, shifted, rng=rng) for _ in range(n_samples)]


def qdybe_residual(R, gamma, n_samples=20, seed=0, tol=1e-12):
    if R.is_constant():
        lam = np.zeros(R.dim_lambda)
        v = float(np.max(np.abs(qdybe_tensor(R, gamma, lam))))
        return ResidualReport("qdybe", v, tol, [(lam, v)])
    rows = []
    for lam in _sample(R, n_samples, seed, gamma):
        rows.append((lam, float(np.max(np.abs(qdybe_tensor(R, gamma, lam))))))
    return ResidualReport("qdybe", max(v for _, v in rows), tol, rows)


# -- zero weight and Hecke ------------------------------------------------------------------------

def weight_blocks(R):
    """Diagonal blocks [idx] of V (x) V and pair blocks [idx, idx'] by weights of the factors."""
    N = R.N
    W = np.round(R.weights, 12)
    groups = {}
    for c in range(N):
        groups.setdefault(tuple(W[c]), []).append(c)
    keys = list(groups)
    diag, pairs = [], []
    for i, k in enumerate(keys):
        diag.append(("diag", k, [a * N + b for a in groups[k] for b in groups[k]], groups[k], groups[k]))
        for k2 in keys[i + 1:]:
            idx = [a * N + b for a in groups[k] for b in groups[k2]] + [b * N + a for a in groups[k] for b in groups[k2]]
            pairs.append(("pair", (k, k2), idx, groups[k], groups[k2]))
    return diag + pairs


def zero_weight_residual(R, lam):
    """Max |[R, h (x) 1 + 1 (x) h]| over the coordinate directions of the weights."""
    M = R(lam)
    worst = 0.0
    for i in range(R.dim_lambda):
        h = np.diag(R.weights[:, i])
        H = np.kron(h, np.eye(R.N)) + np.kron(np.eye(R.N), h)
        worst = max(worst, float(np.max(np.abs(M @ H - H @ M))))
    return worst


@dataclass
class HeckeBlock:
    kind: str
    vectors: tuple
    parities: tuple
    expected: tuple
    trace: float
    det: float
    passed: bool


def hecke_check(R, q, lam, tol=1e-9):
    """Super Hecke test on each weight block of T_s R.

    Diagonal blocks need every eigenvalue equal to 1; pair blocks built from
    one-dimensional weight spaces of parities s, t need the eigenvalues
    {1, -(-1)^{st} q}.  Eigenvalues are certified through the characteristic
    polynomial (trace and determinant) rather than a numerical eigensolver.
    """
    lam = np.asarray(lam, dtype=float)
    if zero_weight_residual(R, lam) > tol:
        raise ValueError("R is not zero-weight")
    T = super_permutation(R.m, R.n) @ R(lam)
    p = R.parity
    blocks = []
    for kind, key, idx, A, B in weight_blocks(R):
        sub = T[np.ix_(idx, idx)]
        off = np.delete(T[:, idx], idx, axis=0)
        if off.size and np.max(np.abs(off)) > tol:
            raise ValueError("T_s R does not preserve the weight blocks")
        if kind == "diag":
            k = len(idx)
            ok = np.max(np.abs(sub - np.eye(k))) <= tol if k == 1 else \
                np.allclose(np.poly(sub), np.poly(np.ones(k)), atol=tol)
            blocks.append(HeckeBlock(kind, tuple(idx), tuple(int(p[a]) for a in A), (1.0,) * k,
                                     float(np.trace(sub)), float(np.linalg.det(sub)), bool(ok)))
        else:
            if len(A) != 1 or len(B) != 1:
                raise ValueError("pair blocks need one-dimensional weight spaces")
            s, t = int(p[A[0]]), int(p[B[0]])
            c = -((-1) ** (s * t)) * q
            tr, det = float(np.trace(sub)), float(np.linalg.det(sub))
            ok = abs(tr - (1 + c)) <= tol and abs(det - c) <= tol
            blocks.append(HeckeBlock(kind, tuple(idx), (s, t), (1.0, c), tr, det, bool(ok)))
    return all(b.passed for b in blocks), blocks


# -- semiclassical limit ----------------------------------------------------------------------------

@dataclass
class SlopeReport:
    gammas: list
    residuals: list
    slope: Optional[float]
    intercept: Optional[float]
    inconclusive: bool
    lam: list


def semiclassical_slope(r, gammas=(1e-2, 5e-3, 2.5e-3), seed=0, floor=1e-13):
    """Fit log max|QDYBE(Id - gamma rho(r))| against log gamma at one sampled lambda."""
    from .rfield import sample_points

    lam = sample_points(r, r.dim_l, 1, seed)[0] if r.dim_l else np.zeros(0)
    res = []
    for g in gammas:
        R = from_rfield(r, g)
        res.append(float(np.max(np.abs(qdybe_tensor(R, g, lam)))))
    if min(res) <= floor:
        return SlopeReport(list(gammas), res, None, None, True, lam.tolist())
    slope, intercept = np.polyfit(np.log(gammas), np.log(res), 1)
    return SlopeReport(list(gammas), res, float(slope), float(intercept), False, lam.tolist())
