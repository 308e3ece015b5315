import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superdyn import hopfoid as hp
from superdyn import quantum as qm

DOP = hp.DifferenceOperator


def _rand_dop(rng, dim, k, nterms=2):
    terms = []
    for _ in range(nterms):
        A, B = rng.normal(size=(dim, dim)), rng.normal(size=(dim, dim))
        mu = rng.normal(size=k)
        shift = rng.integers(-2, 3, size=k).astype(float)
        terms.append((lambda lam, A=A, B=B, mu=mu: A + np.sin(mu @ lam) * B, shift))
    return DOP(dim, k, terms)


def _rand_homog(rng, m, n, shift):
    N = m + n
    W, p = np.eye(N), qm.vparity(m, n)
    c, d = rng.integers(N, size=2)
    E = np.zeros((N, N))
    E[c, d] = 1.0
    a0, mu = rng.normal(), rng.normal(size=N)
    return hp.HomogeneousOp(lambda lam: (a0 + np.sin(mu @ lam)) * E, np.asarray(shift, dtype=float),
                            W[c] - W[d], int(p[c] ^ p[d]), W, p)


# -- difference operators ------------------------------------------------------------------

@settings(max_examples=20)
@given(st.integers(0, 2 ** 31 - 1))
def test_identity_is_two_sided_unit(seed):
    rng = np.random.default_rng(seed)
    d = _rand_dop(rng, 3, 2)
    I = DOP.identity(3, 2)
    lam = rng.normal(size=2)
    assert hp.normal_form_distance(I @ d, d, lam) == 0.0
    assert hp.normal_form_distance(d @ I, d, lam) == 0.0


def test_noncommutative():
    rng = np.random.default_rng(1)
    f = DOP(1, 1, [(lambda lam: np.array([[lam[0]]]), np.array([0.0]))])
    s = DOP(1, 1, [(lambda lam: np.eye(1), np.array([1.0]))])
    lam = np.array([0.3])
    # sigma_1 lambda = (lambda + 1) sigma_1
    assert hp.normal_form_distance(s @ f, f @ s, lam) == pytest.approx(1.0)
    a, b = _rand_dop(rng, 2, 1), _rand_dop(rng, 2, 1)
    assert hp.normal_form_distance(a @ b, b @ a, lam) > 1e-3


@settings(max_examples=20)
@given(st.integers(0, 2 ** 31 - 1))
def test_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_rand_dop(rng, 3, 2) for _ in range(3))
    lam = rng.normal(size=2)
    assert hp.normal_form_distance((a @ b) @ c, a @ (b @ c), lam) <= 1e-12


def test_apply_shifts_argument():
    d = DOP(1, 1, [(lambda lam: 2.0 * np.eye(1), np.array([1.5]))])
    assert d.apply(lambda lam: np.array([lam[0] ** 2]), np.array([0.5]))[0] == pytest.approx(8.0)


# -- moment maps -----------------------------------------------------------------------------

def test_constant_function_is_central():
    rng = np.random.default_rng(0)
    W = np.eye(3)
    a = _rand_dop(rng, 3, 3)
    c = lambda lam: 2.5
    lam = rng.normal(size=3)
    for mu in (hp.mu_l, hp.mu_r):
        assert hp.normal_form_distance(mu(c, W) @ a, a @ mu(c, W), lam) <= 1e-15


def test_linear_function_pure_shift():
    W = np.eye(2)
    alpha = np.array([1.0, -1.0])
    a = DOP(2, 2, [(lambda lam: np.eye(2), -alpha)])  # sigma_{-alpha}, bidegree (alpha, alpha)
    left, right = hp.bidegree(np.zeros(2), -alpha)
    assert np.array_equal(left, alpha) and np.array_equal(right, alpha)
    f = lambda lam: float(np.array([0.7, 0.2]) @ lam)
    lam = np.array([0.4, 1.3])
    for mu, deg in ((hp.mu_l, left), (hp.mu_r, right)):
        lhs = mu(f, W) @ a
        rhs = a @ mu(hp.shifted_function(f, deg), W)
        assert hp.normal_form_distance(lhs, rhs, lam) <= 1e-15


@pytest.mark.parametrize("seed", range(3))
def test_moment_map_relations(seed):
    assert hp.moment_map_check(np.eye(3), 10, seed).passed
    assert hp.moment_map_check(np.array([[1.0, 0.5], [0.0, -1.0], [2.0, 1.0]]), 10, seed).passed


def test_moment_map_guard():
    rep = hp.moment_map_check(np.eye(3), 10, 0, shift_sign=-1.0)
    assert not rep.passed and rep.max_abs > 1e-3


# -- L-operator and RLL --------------------------------------------------------------------------

def test_calibration_unique():
    conv, table = hp.calibrate()
    assert conv == ("R", "b")
    assert hp.default_convention() == conv
    passing = [c for c, v in table.items() if max(v) <= 1e-9]
    assert passing == [conv]


@pytest.mark.parametrize("m,n", [(1, 1), (2, 1)])
def test_constant_battery_does_not_discriminate(m, n):
    # Id and P_s pass every placement; the rational solution is what pins the convention
    for conv in hp.CONVENTIONS:
        for R in (qm.identity_R(m, n), qm.permutation_R(m, n)):
            assert hp.rll_residual(R, convention=conv).max_abs <= 1e-12


def test_calibration_error_when_nothing_passes():
    bad = qm.constant_R(2, 0, np.eye(4) + 0.3 * np.kron(np.eye(2), np.array([[0, 1], [1, 0]])))
    with pytest.raises(hp.CalibrationError):
        hp.calibrate([bad])


def test_L_of_identity():
    R = qm.identity_R(2, 1)
    L = hp.build_L_rep(R)
    assert L.metadata["convention_source"] == "calibrated"
    lam = np.array([0.3, 0.1, -0.4])
    for (a, b), op in L.entries.items():
        (f, shift), = op.terms
        assert np.array_equal(f(lam), np.eye(3) if a == b else np.zeros((3, 3)))
        assert np.array_equal(shift, -R.weights[b])


@pytest.mark.parametrize("R", [qm.identity_R(2, 1), qm.permutation_R(1, 2), qm.rational_R(2, 1), qm.rational_R(1, 2)])
def test_L_bidegree(R):
    L = hp.build_L_rep(R)
    assert hp.L_bidegree_residual(L, np.array([0.31, 1.7, -0.6])) <= 1e-12


@pytest.mark.parametrize("m,n", [(1, 1), (2, 0), (2, 1), (1, 2), (2, 2)])
def test_rll_constant(m, n):
    assert hp.rll_residual(qm.identity_R(m, n)).max_abs == 0.0
    assert hp.rll_residual(qm.permutation_R(m, n)).max_abs <= 1e-12


@pytest.mark.parametrize("m,n", [(2, 0), (1, 1), (2, 1), (1, 2)])
def test_rll_rational(m, n):
    assert hp.rll_residual(qm.rational_R(m, n), n_samples=4).max_abs <= 1e-9


def _battery():
    rng = np.random.default_rng(11)
    out = []
    for m, n in [(1, 1), (2, 1), (1, 2)]:
        N = m + n
        out += [qm.identity_R(m, n), qm.permutation_R(m, n), qm.rational_R(m, n)]
        # perturbed Id, kept even and zero weight through the template
        alpha = {(a, b): 1.0 + 0.2 * rng.normal() for a in range(N) for b in range(N) if a != b}
        beta = {(a, b): 0.2 * rng.normal() for a in range(N) for b in range(N) if a != b}
        out.append(qm.template_R(m, n, alpha, beta))
        out.append(qm.rational_R(m, n, shift=1.3))
    return out


@pytest.mark.parametrize("idx", range(15))
def test_rll_equivalent_to_qdybe(idx):
    R = _battery()[idx]
    rll = hp.rll_residual(R, n_samples=3, tol=1e-9)
    qd = qm.qdybe_residual(R, 1.0, 3, 0, tol=1e-9)
    assert rll.passed == qd.passed
    if not qd.passed:
        assert rll.max_abs >= 1e-3


# -- tensor product of dynamical representations ----------------------------------------------

def test_theta_weight_zero_constant_is_pointwise():
    W, p = np.eye(2), np.zeros(2, dtype=int)
    F = lambda lam: np.array([[lam[0], 1.0], [0.0, lam[1]]])
    G = np.diag([2.0, -1.0])
    d1 = hp.HomogeneousOp(F, np.zeros(2), np.zeros(2), 0, W, p)
    d2 = hp.HomogeneousOp(lambda lam: G, np.zeros(2), np.zeros(2), 0, W, p)
    lam = np.array([0.4, 0.9])
    # g(w) for a basis vector w of weight omega_w still shifts f by omega_w
    th = hp.rep_tensor(d1, d2).coeff(lam)
    for w in range(2):
        block = th.reshape(2, 2, 2, 2)[:, w, :, w]
        assert np.allclose(block, G[w, w] * F(lam - W[w]), atol=1e-15)
    d2z = hp.HomogeneousOp(lambda lam: G, np.zeros(2), np.zeros(2), 0, np.zeros((2, 2)), p)
    d1z = hp.HomogeneousOp(F, np.zeros(2), np.zeros(2), 0, np.zeros((2, 2)), p)
    assert np.allclose(hp.rep_tensor(d1z, d2z).coeff(lam), np.kron(F(lam), G), atol=1e-15)


def test_theta_spot_value_shift():
    m, n = 1, 1
    W, p = np.eye(2), qm.vparity(m, n)
    F = lambda lam: np.diag([np.sin(lam[0]), np.cos(lam[1])])
    E = np.zeros((2, 2))
    E[0, 1] = 1.0  # g sends v_2 to v_1: odd, weight omega_1 - omega_2
    d1 = hp.HomogeneousOp(F, np.zeros(2), np.zeros(2), 0, W, p)
    d2 = hp.HomogeneousOp(lambda lam: 3.0 * E, np.zeros(2), W[0] - W[1], 1, W, p)
    lam = np.array([0.2, 0.7])
    th = hp.rep_tensor(d1, d2).coeff(lam).reshape(2, 2, 2, 2)
    mu = W[0]  # weight of g(v_2) = 3 v_1
    for v in range(2):
        sign = -1.0 if p[v] else 1.0
        assert th[v, 0, v, 1] == pytest.approx(sign * 3.0 * F(lam - mu)[v, v], abs=1e-15)


@settings(max_examples=40)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([(1, 1), (2, 1), (1, 2)]))
def test_theta_multiplicative(seed, shape):
    m, n = shape
    N = m + n
    rng = np.random.default_rng(seed)
    d2 = _rand_homog(rng, m, n, rng.integers(-2, 3, size=N))
    d2p = _rand_homog(rng, m, n, rng.integers(-2, 3, size=N))
    d1 = _rand_homog(rng, m, n, d2.shift + d2.weight)
    d1p = _rand_homog(rng, m, n, d2p.shift + d2p.weight)
    assert hp.composable(d1, d2) and hp.composable(d1p, d2p)
    lam = rng.uniform(-2, 2, size=N)
    assert hp.theta_multiplicativity(d1, d1p, d2, d2p, lam) <= 1e-12
    th = hp.rep_tensor(d1, d2)
    left, right = th.bidegree()
    assert np.allclose(left, d1.bidegree()[0]) and np.allclose(right, d2.bidegree()[1])


def test_theta_needs_koszul_sign():
    # odd d2 passing odd d1': dropping the sign breaks multiplicativity
    m, n = 1, 1
    W, p = np.eye(2), qm.vparity(m, n)
    E12, E21 = np.zeros((2, 2)), np.zeros((2, 2))
    E12[0, 1], E21[1, 0] = 1.0, 1.0
    wt = W[0] - W[1]
    d2 = hp.HomogeneousOp(lambda lam: E12, np.zeros(2), wt, 1, W, p)
    d2p = hp.HomogeneousOp(lambda lam: np.eye(2), np.zeros(2), np.zeros(2), 0, W, p)
    d1 = hp.HomogeneousOp(lambda lam: np.eye(2), d2.shift + wt, np.zeros(2), 0, W, p)
    d1p = hp.HomogeneousOp(lambda lam: E21 * (1 + lam[0] ** 2), np.zeros(2), -wt, 1, W, p)
    lam = np.array([0.3, -0.5])
    assert hp.theta_multiplicativity(d1, d1p, d2, d2p, lam) <= 1e-12
    lhs = hp.rep_tensor(hp.compose_homogeneous(d1, d1p), hp.compose_homogeneous(d2, d2p)).coeff(lam)
    rhs = hp.compose_homogeneous(hp.rep_tensor(d1, d2), hp.rep_tensor(d1p, d2p)).coeff(lam)
    assert np.max(np.abs(lhs - rhs)) > 0.1
