import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qstiefel.coxeter import Perm, omega_block, omega_word, perm_length
from qstiefel.fock import Atom, FockTrunc, SparseOp, ZCyclic, atom_matrix, norm_bound
from qstiefel.relations import (build_killing_pair, check_compact_lemma, check_determinant,
                                check_factorization, check_killing, check_unitarity, diagonal_atoms,
                                e_tensor, e_tensor_square_sum, poincare_coefficients,
                                random_deletion_cases, truncation_tolerance, unitary_samples)
from qstiefel.symrep import build_rep, elementary_rep, materialize_rep, torus_rep


def test_e_tensor_values():
    assert e_tensor((1, 2, 3), 0.5) == 1
    assert e_tensor((2, 1, 3), 0.5) == -0.5
    assert e_tensor((3, 2, 1), 0.5) == pytest.approx(-0.125)
    assert e_tensor((1, 1, 3), 0.5) == 0


@given(st.permutations([1, 2, 3, 4]), st.integers(0, 2), st.floats(0.1, 0.9))
def test_e_tensor_adjacent_swap(p, i, q):
    swapped = list(p)
    swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
    ratio = e_tensor(swapped, q) / e_tensor(p, q)
    assert ratio == pytest.approx(-q if p[i] < p[i + 1] else -1 / q)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_e_tensor_square_sum_is_poincare_polynomial(n):
    q = 0.7
    # brute-force count of permutations by length
    counts = np.zeros(n * (n - 1) // 2 + 1)
    for p in itertools.permutations(range(1, n + 1)):
        counts[perm_length(Perm(p))] += 1
    assert np.array_equal(counts, poincare_coefficients(n))
    poly = sum(c * q ** (2 * j) for j, c in enumerate(counts))
    assert e_tensor_square_sum(n, q) == pytest.approx(poly, rel=1e-13)


def test_unitary_samples():
    s = unitary_samples(3)
    assert len(s) == 11
    assert np.allclose(np.abs(s), 1)
    assert unitary_samples(3) == unitary_samples(3)


def test_torus_character_is_exactly_unitary():
    for t in unitary_samples(3)[-3:]:
        rep = check_unitarity(torus_rep(3, 2), 0.5, 4, t=[t, np.conj(t)])
        assert rep.max_residual == 0


def test_unitarity_su2_example():
    rep = check_unitarity(elementary_rep(1, 2), 0.5, 16, tol=1e-10)
    assert rep.passed


@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_unitarity_elementary_sweep(n, q):
    D = 10
    for i in range(1, n):
        rep = check_unitarity(elementary_rep(i, n), q, D)
        assert rep.max_residual <= 10 * q ** (2 * D)


def test_unitarity_omega3_cyclic():
    rep = check_unitarity(build_rep(omega_word(3, 2, 3), ntorus=2), 0.5, 12, torus=ZCyclic(8), tol=1e-9)
    assert rep.passed


def test_unitarity_omega4_sampled():
    t = unitary_samples(3)[-2:]
    rep = check_unitarity(build_rep(omega_word(4, 2, 4), ntorus=2), 0.5, 8, t=t)
    assert rep.passed


def test_unitarity_detects_wrong_atoms():
    rm = elementary_rep(1, 2)
    bad = rm.map_entries(lambda e: e.scale(1.1))
    assert not check_unitarity(bad, 0.5, 8).passed


def test_determinant_su2():
    rep = check_determinant(elementary_rep(1, 2), 0.5, 16, tol=1e-10)
    assert rep.passed
    assert rep.residuals["E11"] <= 1e-10 and rep.residuals["E22"] <= 1e-10


def test_determinant_omega3():
    rep = check_determinant(build_rep(omega_word(3, 2, 3), ntorus=2), 0.5, 10,
                            t=unitary_samples(3)[-2:], tol=1e-8)
    assert rep.passed
    assert len(rep.residuals) == 27


def test_determinant_transposed_convention_also_holds():
    # both index placements are relations of the quantum group; neither is singled out
    for rm, kw in ((elementary_rep(1, 2), {}),
                   (build_rep(omega_word(3, 2, 3), ntorus=2), {"t": unitary_samples(3)[-2:]})):
        assert check_determinant(rm, 0.5, 8, transposed=True, **kw).passed


def test_determinant_detects_classical_sign():
    # the q = 1 antisymmetrizer (sign of the permutation) must fail for q < 1
    rep = check_determinant(elementary_rep(1, 2), 0.5, 10)
    ops = materialize_rep(elementary_rep(1, 2), 0.5, 10)
    classical = ops[1, 1] @ ops[2, 2] - ops[1, 2] @ ops[2, 1]
    assert rep.passed
    assert norm_bound((classical - SparseOp.identity(classical.factors)).compress(np.arange(10) < 8)) > 1e-3


def test_determinant_degree_limit():
    with pytest.raises(ValueError):
        check_determinant(build_rep(omega_word(4, 2, 4), ntorus=2), 0.5, 6, t=[1, 1], max_degree=3)


def test_compact_lemma_examples():
    assert check_compact_lemma(3, 2, 1, 0.5, 8).passed
    rep = check_compact_lemma(4, 2, 2, 0.5, 6)
    assert rep.passed and rep.residuals["s=3"] <= 1e-12


@pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (4, 1), (4, 2), (4, 3)])
def test_compact_lemma_all(n, k):
    assert check_compact_lemma(n, 2, k, 0.5, 6).passed


def test_compact_lemma_range():
    with pytest.raises(ValueError):
        check_compact_lemma(3, 2, 3, 0.5, 6)


def test_killing_pair_tables():
    q, D = 0.5, 8
    f = FockTrunc(D)
    p = atom_matrix(Atom.P, q, f)
    s = atom_matrix(Atom.S, q, f)
    x, y = build_killing_pair([Atom.ONE], q, D)
    assert x.equal_entries(p) and y.equal_entries(p)
    x, y = build_killing_pair([Atom.A], q, D)
    assert norm_bound(y - (s.H @ p) * (1 - q * q) ** -0.5) <= 1e-15
    for z in (Atom.ONE, Atom.A, Atom.ASTAR):
        x, y = build_killing_pair([z], q, D)
        assert norm_bound(x @ atom_matrix(z, q, f) @ y - p) <= 1e-14
    with pytest.raises(ValueError):
        build_killing_pair([Atom.C], q, D)


def test_killing_examples():
    rep = check_killing(3, 2, 3, 0.5, 6)
    assert rep.passed
    assert rep.residuals["j=3,s=3"] == 0 and rep.residuals["j=2,s=3"] == 0
    assert check_killing(4, 3, None, 0.3, 6).passed


@pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (4, 1), (4, 2), (4, 3)])
def test_killing_all(n, k):
    rep = check_killing(n, k, None, 0.5, 6)
    assert rep.passed and rep.max_residual <= 1e-12


def test_diagonal_atoms():
    rm = build_rep(omega_block(2, 1, 3))
    # u_33 moves only under s_2, the first letter
    assert diagonal_atoms(rm, 3) == (Atom.ASTAR, Atom.ONE)


def test_factorization_cases():
    cases = random_deletion_cases(100, 6, 4)
    assert len(cases) == 100
    assert all(2 <= w.n <= 4 and 1 <= len(w) <= 6 and 0 <= pos < len(w) for w, pos in cases)
    rep = check_factorization(cases)
    assert rep.passed and rep.max_residual == 0


def test_factorization_report_keys_do_not_depend_on_seed():
    a = check_factorization(random_deletion_cases(10, seed=1))
    b = check_factorization(random_deletion_cases(10, seed=2))
    assert list(a.residuals) == list(b.residuals)


def test_truncation_tolerance():
    assert truncation_tolerance(0.5, 12) == pytest.approx(10 * 0.5 ** 24 + 1e-12)
