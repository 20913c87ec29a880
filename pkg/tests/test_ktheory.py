import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from qstiefel.coxeter import omega_word
from qstiefel.fock import (Atom, FockTrunc, Scalar, SparseOp, ZCyclic, atom_matrix, block_diag, fock_diag,
                           kron, norm_bound, op_norm, torus_matrix)
from qstiefel.ktheory import (KWitness, Layout, bott_base, bott_matrix, bott_projection,
                              build_coisometry_X, build_k_unitaries, build_Sn_Tn, build_Zn_Yn,
                              corollary_symbol, corollary_witness, direct_symbol, kind_residuals,
                              level_certificate, projection_rank, sn_symbol, tensor_term, tent, tn_symbol,
                              zn_symbol)
from qstiefel.relations import unitary_samples
from qstiefel.symrep import build_rep

Q = 0.5
TORUS = ZCyclic(8)


def dense_rank(op, tol=1e-8):
    return int(np.linalg.matrix_rank(op.toarray(), tol=tol))


@pytest.fixture(scope="module")
def k_unitaries():
    return {k: build_k_unitaries(3, k, Q, 10, torus=TORUS) for k in (1, 2, 3)}


def test_u1_is_torus_generator(k_unitaries):
    U1 = k_unitaries[1]["U"].direct.operator
    f = FockTrunc(10)
    expect = kron([torus_matrix(TORUS, 1), SparseOp.identity([TORUS]), SparseOp.identity([f])])
    assert U1.equal_entries(expect)


@pytest.mark.parametrize("k", [1, 2])
def test_dual_constructions_agree(k_unitaries, k):
    for name, dual in k_unitaries[k].items():
        assert dual.error is None
        assert dual.agreement <= 1e-9, name
        assert dual.passes()


def test_dual_construction_top_level(k_unitaries):
    res = k_unitaries[3]
    assert res["U"].passes()
    # b b* = chi(u_21 u_21*) has the eigenvalue 1 - q^2 inside the annulus the
    # functional calculus needs empty, so V_3, u_3 and v_3 have no internal form here
    for name in ("V", "u", "v"):
        assert res[name].internal is None
        assert res[name].error.startswith("GapViolation")
        assert res[name].direct.passes()


def test_small_v_is_exactly_unitary(k_unitaries):
    for k in (1, 2, 3):
        v = k_unitaries[k]["v"].direct.operator
        one = SparseOp.identity(v.factors)
        assert norm_bound(v.H @ v - one) == 0
        assert norm_bound(v @ v.H - one) == 0


def test_k_unitaries_range():
    with pytest.raises(ValueError):
        build_k_unitaries(3, 4, Q, 6, torus=TORUS)
    with pytest.raises(ValueError):
        direct_symbol("W", 3, 1)


def test_k_unitaries_n4_sampled():
    t = unitary_samples(3)[-2:]
    res = build_k_unitaries(4, 2, Q, 6, t=t)
    assert all(d.passes() for d in res.values())


@pytest.fixture(scope="module")
def zy3():
    return build_Zn_Yn(3, Q, 10, torus=TORUS)


def test_y_is_isometry(zy3):
    assert zy3.Y.residuals["W*W-1"] <= 1e-10
    assert all(v <= 1e-9 for v in zy3.checks.values())


def test_z_equals_y_times_projection(zy3):
    assert zy3.checks["Z=Y(1x1xpx1)"] == 0


def test_y_defect_rank():
    res = build_Zn_Yn(3, Q, 5, torus=ZCyclic(3))
    y = res.Y.operator
    defect = SparseOp.identity(y.factors) - y @ y.H
    lay = Layout(Q, 5, 3, ZCyclic(3))
    target = lay.op(tensor_term((0, 0), [Atom.ONE, Atom.P, Atom.P]))
    assert dense_rank(defect) == dense_rank(target)


def test_zn_yn_n4():
    res = build_Zn_Yn(4, Q, 6, t=unitary_samples(3)[-2:])
    assert res.Y.passes() and all(v <= 1e-9 for v in res.checks.values())


@pytest.fixture(scope="module")
def coiso3():
    return build_coisometry_X(3, Q, 10, torus=TORUS)


def test_coisometry(coiso3):
    checks = coiso3.checks
    assert checks["XX*=1"] <= 1e-10
    assert checks["X*X=1-1xp_{n-1}x1"] <= 1e-10
    assert checks["X*X=1-1_{1}(u_n1*u_n1)"] <= 1e-10
    assert coiso3.symbolic["sigma(X) = V_{n-1}"]


def test_coisometry_compression_of_b(coiso3):
    assert coiso3.checks["(1x1xp_{n-2}x1)b = t2xAxp_{n-2}x1"] <= 1e-10


def test_coisometry_minus_combination_does_not_hold(coiso3):
    # u_{n-1,1}* u_{n-1,1} - q^2 u_n1* u_n1 is not the q^{2N} tensor;
    # the sum u_{n-1,1}* u_{n-1,1} + u_n1* u_n1 is
    assert coiso3.checks["minus form: b*b-q^2 a*a = 1x1x(q^2N)x1"] > 0.1
    assert coiso3.checks["b*b+a*a = 1x1x(q^2N)x1"] <= 1e-10
    assert coiso3.checks["1_{1}(b*b+a*a) = 1x1xp_{n-2}x1"] <= 1e-10


def test_coisometry_kernel_rank():
    res = build_coisometry_X(3, Q, 5, torus=ZCyclic(3))
    x = res.X.operator
    lay = Layout(Q, 5, 3, ZCyclic(3))
    target = lay.op(tensor_term((0, 0), [Atom.P, Atom.P, Atom.ONE]))
    defect = SparseOp.identity(x.factors) - x.H @ x
    assert dense_rank(defect) == dense_rank(target)


def test_coisometry_n4():
    res = build_coisometry_X(4, Q, 6, t=unitary_samples(3)[-2:])
    assert res.X.passes()
    assert res.checks["b*b+a*a = 1x1x(q^2N)x1"] <= 1e-10
    assert res.symbolic["sigma(X) = V_{n-1}"]


@pytest.fixture(scope="module")
def st3():
    return build_Sn_Tn(3, Q, 10, torus=TORUS)


def test_sn_tn_kinds_and_commutation(st3):
    assert st3.S.passes(1e-10) and st3.T.passes(1e-10)
    assert st3.checks["ST=TS"] <= 1e-10
    assert all(st3.symbolic.values())


def test_corollary_identity(st3):
    assert st3.checks["corollary identity"] <= 1e-10


def test_corollary_identity_n4():
    res = build_Sn_Tn(4, Q, 8, t=unitary_samples(3)[-2:])
    assert res.checks["corollary identity"] <= 1e-10
    assert res.checks["ST=TS"] <= 1e-10


def test_naive_product_formula_does_not_hold(st3):
    # Z_n chi(u_{n-1,1}) keeps a q^N factor and a second S* term,
    # so it is not t1 t2 (x) p (x) p (x) sqrt(1 - q^{2N+2})
    assert st3.checks["naive Z_n chi(u_{n-1,1})"] > 0.5
    assert not st3.certificate["holds"]


def test_true_product_formula():
    # Z_3 chi(u_21) = t1t2 (x) q^N (x) p (x) sqrt(1 - q^{2N})
    #               + t1t2 (x) A* (x) pA (x) S* q^N, exactly at truncation
    D, M = 8, 4
    torus, f = ZCyclic(M), FockTrunc(D)
    lay = Layout(Q, D, 3, torus)
    gens = lay.rep(build_rep(omega_word(3, 2, 3), ntorus=2))
    zchi = lay.op(zn_symbol(3)) @ gens[2, 1]
    t = torus_matrix(torus, 1)
    C, P, A, Ast, Sst = (atom_matrix(x, Q, f) for x in (Atom.C, Atom.P, Atom.A, Atom.ASTAR, Atom.SSTAR))
    root = fock_diag(np.sqrt(1 - Q ** (2 * np.arange(D))), f)
    expect = kron([t, t, C, P, root]) + kron([t, t, Ast, P @ A, Sst @ C])
    assert norm_bound(zchi - expect) == 0


def test_level_bound_scalar_inequality():
    for q in (0.3, 0.5, 0.8):
        j = np.arange(40)
        assert np.all(1 - np.sqrt(1 - q ** (2 * j + 2)) <= q ** (2 * j + 2))


def test_level_certificate_on_decaying_diagonal():
    D = 8
    f = FockTrunc(D)
    diff = fock_diag(1 - np.sqrt(1 - Q ** (2 * np.arange(D) + 2)), f)
    cert = level_certificate(diff, Q, D)
    assert cert["holds"] and cert["worst_ratio"] <= 1
    assert not level_certificate(fock_diag(np.ones(D), f), Q, D)["holds"]


def test_corollary_witness_trivial():
    f = FockTrunc(6)
    y = atom_matrix(Atom.SSTAR, Q, f)
    one = SparseOp.identity([f])
    w = corollary_witness(one, y, check=True)
    assert norm_bound(w - one) <= 1e-15
    with pytest.raises(ValueError):
        corollary_witness(one, y.H @ y * 2, check=True)


def test_symbolic_commutation():
    for n in (3, 4, 5):
        assert sn_symbol(n) @ tn_symbol(n) == tn_symbol(n) @ sn_symbol(n)
        assert corollary_symbol(n).nslots == 2 * n - 3


def test_witness_kinds():
    f = FockTrunc(6)
    s = atom_matrix(Atom.SSTAR, Q, f)
    w = KWitness("S*", s, "isometry", "direct-formula")
    assert w.residuals["W*W-1"] <= 1e-15 and w.passes()
    assert set(kind_residuals(s, "projection")) == {"W^2-W", "W-W*"}
    with pytest.raises(ValueError):
        KWitness("bad", s, "kind", "direct-formula")


def commuting_shifts(M=8):
    f = ZCyclic(M)
    one = SparseOp.identity([f])
    return kron([torus_matrix(f, 1), one]), kron([one, torus_matrix(f, 1)])


def test_bott_scalar_identity():
    s = SparseOp(np.array([[1.0]]), [Scalar()])
    e = bott_projection(s, s)
    assert np.array_equal(e.toarray(), np.diag([0, 1]).astype(complex))
    assert bott_base([Scalar()]).toarray().tolist() == [[1, 0], [0, 0]]


def test_bott_commuting_shifts():
    U, V = commuting_shifts()
    e = bott_projection(U, V)
    assert norm_bound(e @ e - e) <= 1e-9
    assert norm_bound(e - e.H) <= 1e-10
    assert projection_rank(e) == 64


def test_bott_diagonal_surrogate():
    U, _ = commuting_shifts()
    e = bott_projection(U, U)
    assert abs(np.trace(e.toarray()).real - 64) <= 1e-9
    uu = block_diag([U, U])
    assert norm_bound(e @ uu - uu @ e) <= 1e-9


def test_bott_rejects_bad_inputs():
    U, V = commuting_shifts(4)
    with pytest.raises(ValueError):
        bott_projection(U, V * 2)
    f = FockTrunc(3)
    h = np.arange(9).reshape(3, 3) / 9.0
    w = SparseOp(scipy.linalg.expm(1j * (h + h.T)), [f])
    d = SparseOp(np.diag(np.exp(1j * np.array([0.1, 0.7, 2.0]))), [f])
    with pytest.raises(ValueError):
        bott_projection(d, w)


def test_bott_matches_fourier_oracle():
    M = 6
    U, V = commuting_shifts(M)
    e = bott_projection(U, V).toarray()
    F = np.fft.fft(np.eye(M)) / np.sqrt(M)
    FF = np.kron(F, F)
    big = np.kron(np.eye(2), FF)
    conj = big @ e @ big.conj().T
    shift = torus_matrix(ZCyclic(M), 1).toarray()
    lam = np.diag(F @ shift @ F.conj().T)
    for a in range(M):
        for b in range(M):
            su = SparseOp(np.array([[lam[a]]]), [Scalar()])
            sv = SparseOp(np.array([[lam[b]]]), [Scalar()])
            scalar = bott_projection(su, sv).toarray()
            idx = a * M + b
            got = conj[np.ix_([idx, M * M + idx], [idx, M * M + idx])]
            assert np.allclose(got, scalar, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([1e-2, 1e-3, 1e-4]))
def test_bott_defect_linear_in_commutator(seed, eps):
    U, V = commuting_shifts()
    rng = np.random.default_rng(seed)
    K = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    Vp = V @ SparseOp(scipy.linalg.expm(1j * eps * (K + K.conj().T)), V.factors)
    e = bott_matrix(U, Vp)
    assert op_norm(e @ e - e) <= 1.0 * op_norm(U @ Vp - Vp @ U)


def test_tent():
    assert np.allclose(tent([0, 0.25, 0.5, 0.75]), [0, 0.5, 1, 0.5])
