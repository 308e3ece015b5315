import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superdyn import lambdafn as lf
from superdyn import rfield as rf
from superdyn import verify as vf
from superdyn.superalg import build_algebra, casimir, root_vector

from oracles import classical_nonzero_coupling, classical_zero_coupling, field_matrix_units


def _pairs(X):
    return [(r.a, r.b) for r in X]


def _lams(k, n, seed):
    rng = np.random.default_rng(seed)
    return [rng.uniform(0.3, 1.7, size=k) * rng.choice([-1, 1], size=k) for _ in range(n)]


# -- EV zero coupling -----------------------------------------------------------------

def test_zero_coupling_empty_is_zero():
    alg = build_algebra("sl", 2, 1)
    assert rf.ev_zero_coupling(alg, []).terms == {}


def test_sl2_zero_coupling_closed_form():
    alg = build_algebra("sl", 2, 0)
    r = rf.ev_zero_coupling(alg, alg.roots.roots)
    e, f = root_vector(alg, alg.roots.root(0, 1)), root_vector(alg, alg.roots.root(1, 0))
    for lam in _lams(1, 5, 1):
        x = lam[0]  # (H, H) = alpha(H) = 2, so H is dual to alpha and (alpha, lambda) = lambda(H)
        assert np.allclose(r.evaluate(lam), (np.outer(e, f) - np.outer(f, e)) / x, atol=1e-13)
    assert vf.cdybe_residual(r, 20, 0).max_abs <= 1e-9


@pytest.mark.parametrize("kind,N", [("sl", 2), ("sl", 3), ("gl", 3), ("sl", 4)])
def test_zero_coupling_matches_nongraded_oracle(kind, N):
    alg = build_algebra(kind, N, 0)
    rng = np.random.default_rng(N)
    for X in rf.closed_root_subsets(alg)[:6]:
        nu = rng.normal(size=alg.rank)
        D = rng.normal(size=(alg.rank, alg.rank))
        D = D - D.T
        r = rf.ev_zero_coupling(alg, X, nu, D)
        for lam in _lams(alg.rank, 3, N):
            got = field_matrix_units(alg, r.evaluate(lam))
            assert np.allclose(got, classical_zero_coupling(kind, N, _pairs(X), lam, nu, D), atol=1e-10)


@pytest.mark.parametrize("kind,N", [("sl", 2), ("sl", 3), ("gl", 2), ("gl", 3)])
@pytest.mark.parametrize("eps", [1.0, 0.5])
def test_nonzero_coupling_matches_nongraded_oracle(kind, N, eps):
    alg = build_algebra(kind, N, 0)
    rng = np.random.default_rng(7)
    for X in rf.simple_span_subsets(alg):
        nu = rng.normal(size=alg.rank)
        r = rf.ev_nonzero_coupling(alg, X, nu, eps=eps)
        for lam in _lams(alg.rank, 3, 3):
            got = field_matrix_units(alg, r.evaluate(lam))
            assert np.allclose(got, classical_nonzero_coupling(kind, N, _pairs(X), lam, nu, eps), atol=1e-10)


def test_odd_root_sign_flip():
    alg = build_algebra("sl", 2, 1)
    rd = alg.roots
    even, odd = rd.root(0, 1), rd.root(0, 2)
    assert odd.parity == 1 and even.parity == 0
    for beta in (even, odd):
        r = rf.ev_zero_coupling(alg, [beta, rd.negative_of(beta)])
        lam = np.array([0.8, -0.3])
        x = float(rf.pairing_covector(alg, r.l, beta).dot(lam))
        M = field_matrix_units(alg, r.evaluate(lam)).reshape(3, 3, 3, 3)
        # coefficient of E_ab (x) E_ba
        assert M[beta.a, beta.b, beta.b, beta.a] * x == pytest.approx((-1) ** beta.parity, abs=1e-12)
        assert vf.cdybe_residual(r, 20, 0).max_abs <= 1e-9


@pytest.mark.parametrize("spec", [("sl", 2, 1), ("gl", 2, 1), ("gl", 1, 1), ("sl", 3, 1), ("gl", 1, 2)])
def test_zero_coupling_cdybe_all_closed_subsets(spec):
    alg = build_algebra(*spec)
    for X in rf.closed_root_subsets(alg):
        r = rf.ev_zero_coupling(alg, X, np.full(alg.rank, 0.1))
        assert vf.cdybe_residual(r, 6, 1).max_abs <= 1e-9


@pytest.mark.parametrize("spec", [("sl", 2, 1), ("gl", 2, 1), ("sl", 3, 1), ("gl", 1, 2)])
@pytest.mark.parametrize("branch", [-1, 1])
@pytest.mark.parametrize("eps", [1.0, 0.5])
def test_nonzero_coupling_cdybe_and_unitarity(spec, branch, eps):
    alg = build_algebra(*spec)
    for X in rf.simple_span_subsets(alg):
        r = rf.ev_nonzero_coupling(alg, X, eps=eps, branch=branch)
        assert vf.cdybe_residual(r, 6, 2).max_abs <= 1e-9
        assert vf.unitarity_residual(r, eps, 6, 2).max_abs <= 1e-12


def test_nonzero_coupling_empty_is_standard_constant():
    alg = build_algebra("sl", 2, 0)
    r = rf.ev_nonzero_coupling(alg, [], eps=1.0)
    assert r.is_constant()
    assert vf.cybe_residual(alg, r.evaluate(np.zeros(1))).max_abs <= 1e-12


def test_full_delta_sl21():
    alg = build_algebra("sl", 2, 1)
    r = rf.ev_nonzero_coupling(alg, alg.roots.roots, eps=1.0)
    assert vf.cdybe_residual(r, 20, 0).max_abs <= 1e-9


def test_eps_zero_redirects():
    alg = build_algebra("sl", 2, 0)
    with pytest.raises(ValueError, match="ev_zero_coupling"):
        rf.ev_nonzero_coupling(alg, [], eps=0)


# -- root subsets and two-forms ----------------------------------------------------------

def test_invalid_subset_missing_negative():
    alg = build_algebra("sl", 3, 0)
    with pytest.raises(rf.InvalidRootSubset, match="negative"):
        rf.ev_zero_coupling(alg, [alg.roots.root(0, 1)])


def test_invalid_subset_missing_sum():
    alg = build_algebra("sl", 3, 0)
    X = rf.roots_from_pairs(alg, [(0, 1), (1, 0), (1, 2), (2, 1)])
    with pytest.raises(rf.InvalidRootSubset, match="outside X"):
        rf.ev_zero_coupling(alg, X)


def test_closed_subset_counts():
    # sl(3): empty, three single pairs, everything
    assert len(rf.closed_root_subsets(build_algebra("sl", 3, 0))) == 5
    assert len(rf.closed_root_subsets(build_algebra("sl", 2, 0))) == 2


@pytest.mark.parametrize("D", [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [0.5, 0.0]]])
def test_two_form_antisymmetry_enforced(D):
    alg = build_algebra("gl", 2, 0)
    with pytest.raises(rf.TwoFormError):
        rf.ev_zero_coupling(alg, [], D=D)


def test_non_closed_two_form_rejected():
    alg = build_algebra("gl", 3, 0)
    x2 = lf.pairing((0.0, 0.0, 1.0))
    z = lf.const(0.0)
    D = [[z, x2, z], [lf.neg(x2), z, z], [z, z, z]]
    with pytest.raises(rf.TwoFormError, match="closed"):
        rf.ev_zero_coupling(alg, [], D=D)


def test_closed_nonconstant_two_form_keeps_cdybe():
    alg = build_algebra("gl", 2, 1)
    g = lf.Coth(lf.Pairing((0.3, 0.2, 0.0), (0.0, 0.0, 0.0)))
    z = lf.const(0.0)
    D = [[z, g, z], [lf.neg(g), z, z], [z, z, z]]
    assert rf.two_form_closed_residual(D) <= 1e-12
    r = rf.ev_nonzero_coupling(alg, rf.span_roots(alg, [0]), D=D)
    assert vf.cdybe_residual(r, 10, 0).max_abs <= 1e-9


# -- admissible triples and K ------------------------------------------------------------

T = rf.AdmissibleTriple.make


@pytest.mark.parametrize("tau,expect", [
    ({0: 2}, ()),
    ({0: 0, 1: 1, 2: 2}, (0, 1, 2)),
    ({0: 1, 1: 2}, ()),
    ({0: 1, 1: 0}, (0, 1)),
    ({0: 0, 1: 2}, (0,)),
])
def test_gamma3(tau, expect):
    assert rf.gamma3(T(tau)) == expect


def test_gamma3_stable_and_maximal():
    for tau in ({0: 1, 1: 2, 2: 0}, {0: 1, 1: 0, 2: 3}, {1: 2, 2: 1}):
        t = T(tau)
        g3 = set(rf.gamma3(t))
        assert all(tau[k] in g3 for k in g3)
        s1 = set(tau) & set(tau.values())
        for extra in s1 - g3:
            cand = g3 | {extra}
            assert not all(tau.get(k) in cand and k in tau.values() for k in cand)


def test_k_map_fixed_part_closed_form():
    alg = build_algebra("sl", 2, 1)
    t = T({1: 1})  # the odd simple root, tau = id
    root = alg.roots.simple_roots[1]
    A = float(alg.roots.norm_constants[(root.a, root.b)])
    lam = np.array([0.4, 1.1])
    x = float(rf.pairing_covector(alg, rf.full_cartan(alg), root).dot(lam))
    expect = 0.5 / math.tanh(A / 2 * x) * root_vector(alg, root)
    assert np.allclose(rf.k_map(alg, t, root, lam), expect, atol=1e-14)


def test_k_map_orbit_leaving_gamma1():
    alg = build_algebra("sl", 3, 0)
    t = T({0: 1})
    l = [[1, 1]]  # alpha_1 and alpha_2 agree on H_1 + H_2
    a1, a2 = alg.roots.simple_roots
    lam = np.array([0.7])
    Y = rf._as_exact_rows(alg, l)
    x = float(rf.pairing_covector(alg, Y, a1).dot(lam))
    expect = 0.5 * root_vector(alg, a1) + math.exp(-x) * root_vector(alg, a2)
    assert np.allclose(rf.k_map(alg, t, a1, lam, l=l), expect, atol=1e-14)


def test_k_map_empty_gamma1():
    alg = build_algebra("sl", 2, 0)
    with pytest.raises(rf.DomainError):
        rf.k_map(alg, T({}), alg.roots.simple_roots[0], np.array([1.0]))


def test_k_map_outside_span():
    alg = build_algebra("sl", 3, 0)
    with pytest.raises(rf.DomainError):
        rf.k_map(alg, T({0: 0}), alg.roots.simple_roots[1], np.array([1.0, 0.5]))


def test_k_map_nonidentity_on_gamma3_unsupported():
    alg = build_algebra("sl", 3, 0)
    with pytest.raises(rf.Unsupported):
        rf.k_map(alg, T({0: 1, 1: 0}), alg.roots.simple_roots[0], np.array([1.0, 0.5]))


@pytest.mark.parametrize("tau,msg", [({0: 0, 1: 0}, "injective"), ({0: 5}, "range")])
def test_triple_validation(tau, msg):
    alg = build_algebra("sl", 3, 0)
    t = rf.AdmissibleTriple(tuple(tau), tuple(tau.values()), tuple(tau.items()))
    with pytest.raises(ValueError, match=msg):
        t.validate(alg)


def test_triple_parity_mismatch():
    alg = build_algebra("sl", 2, 1)  # alpha_1 even, alpha_2 odd
    with pytest.raises(ValueError, match="parity"):
        T({0: 1}).validate(alg)


# -- r00 -----------------------------------------------------------------------------------

@pytest.mark.parametrize("spec", [("sl", 3, 0), ("gl", 2, 1), ("sl", 3, 1)])
@pytest.mark.parametrize("skew", [True, False])
def test_r00_empty_gamma1(spec, skew):
    alg = build_algebra(*spec)
    sol = rf.solve_r00(alg, T({}), l=np.zeros((0, alg.rank)), skew=skew)
    k = alg.rank
    assert np.allclose(sol.particular, 0)
    assert len(sol.homogeneous) == (k * (k - 1) // 2 if skew else k * k)


@pytest.mark.parametrize("spec,tau", [(("sl", 3, 0), {0: 0}), (("gl", 2, 1), {1: 1}), (("sl", 3, 1), {0: 0, 2: 2})])
def test_r00_identity_tau_half_casimir_solves(spec, tau):
    alg = build_algebra(*spec)
    t = T(tau)
    U = rf.orthogonal_complement(alg, np.zeros((0, alg.rank), dtype=object))
    G0 = np.array(U.dot(alg.cartan_gram).dot(U.T), dtype=float)
    assert rf.r00_residual(alg, t, U, 0.5 * np.linalg.inv(G0)) <= 1e-12
    assert rf.solve_r00(alg, t, l=np.zeros((0, alg.rank)), skew=False).residual <= 1e-12
    # an antisymmetric r00 cannot absorb the fixed directions; they have to lie in l
    with pytest.raises(rf.InfeasibleR00):
        rf.solve_r00(alg, t, l=np.zeros((0, alg.rank)), skew=True)


def test_r00_solutions_are_antisymmetric():
    alg = build_algebra("sl", 4, 0)
    sol = rf.solve_r00(alg, T({0: 2}), l=np.zeros((0, alg.rank)))
    assert np.allclose(sol.particular, -sol.particular.T)
    assert sol.residual <= 1e-12


# -- the super Schiffmann construction -----------------------------------------------------

@pytest.mark.parametrize("spec", [("sl", 2, 0), ("sl", 3, 0), ("sl", 2, 1), ("gl", 2, 1), ("sl", 3, 1)])
def test_schiffmann_coincides_with_ev_on_h(spec):
    alg = build_algebra(*spec)
    ns = len(alg.roots.simple_roots)
    for size in range(ns + 1):
        for S in combinations(range(ns), size):
            r1 = rf.schiffmann_super(alg, T({k: k for k in S}))
            r2 = rf.ev_nonzero_coupling(alg, rf.span_roots(alg, S), eps=1.0)
            for lam in _lams(alg.rank, 3, size):
                assert np.allclose(r1.evaluate(lam), r2.evaluate(lam), atol=1e-12)


@pytest.mark.parametrize("spec", [("sl", 2, 0), ("sl", 2, 1), ("gl", 1, 2), ("sl", 3, 1)])
def test_schiffmann_empty_triple_constant(spec):
    alg = build_algebra(*spec)
    r = rf.schiffmann_super(alg, T({}))
    assert r.is_constant()
    from superdyn.graded import wedge

    expect = 0.5 * casimir(alg)
    for root in alg.roots.positive:
        A = float(alg.roots.norm_constants[(root.a, root.b)])
        expect = expect + 0.5 * A * wedge(alg, root_vector(alg, root), root_vector(alg, alg.roots.negative_of(root)))
    assert np.allclose(r.evaluate(np.zeros(r.dim_l)), expect, atol=1e-14)
    assert vf.cybe_residual(alg, expect).max_abs <= 1e-12


@pytest.mark.parametrize("spec,tau", [(("sl", 3, 0), {0: 1}), (("sl", 4, 0), {0: 2}), (("sl", 3, 1), {0: 1})])
def test_schiffmann_belavin_drinfeld_constant(spec, tau):
    alg = build_algebra(*spec)
    r = rf.schiffmann_super(alg, T(tau), l=np.zeros((0, alg.rank)))
    t0 = r.evaluate(np.zeros(0))
    assert vf.cybe_residual(alg, t0).max_abs <= 1e-12
    assert not np.allclose(t0, -alg_twist(alg, t0))  # not skew


def alg_twist(alg, t):
    from superdyn.graded import super_twist

    return super_twist(alg, t)


def test_schiffmann_gamma3_vanishing_on_l():
    alg = build_algebra("sl", 2, 0)
    with pytest.raises(rf.DomainError):
        rf.schiffmann_super(alg, T({0: 0}), l=np.zeros((0, 1)), r00=np.zeros((3, 3)))


@pytest.mark.parametrize("spec", [("sl", 2, 1), ("gl", 2, 1), ("sl", 3, 1)])
def test_admissible_configurations_solve(spec):
    alg = build_algebra(*spec)
    confs = rf.admissible_configurations(alg, limit=8)
    assert confs
    for t, Y, r in confs:
        assert vf.cdybe_residual(r, 4, 0).max_abs <= 1e-9
        assert vf.unitarity_residual(r, 1.0, 4, 0).max_abs <= 1e-12
        assert vf.l_skew_residual(r, None, 4, 0).max_abs <= 1e-12


@settings(max_examples=15)
@given(st.integers(0, 2 ** 31 - 1))
def test_random_ev_draw_is_solution(seed):
    alg = build_algebra("gl", 2, 1)
    rng = np.random.default_rng(seed)
    pool = rf.closed_root_subsets(alg)
    X = pool[rng.integers(len(pool))]
    D = rng.normal(size=(3, 3))
    r = rf.ev_zero_coupling(alg, X, rng.normal(size=3), D - D.T)
    assert vf.cdybe_residual(r, 3, seed).max_abs <= 1e-9
