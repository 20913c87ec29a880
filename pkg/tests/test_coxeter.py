import itertools

import pytest
from hypothesis import given, strategies as st

from qstiefel.coxeter import (Perm, ReducedWord, all_perms, braid_equal, coset, coset_min_rep,
                              delete_letter, is_scattered_subword, omega_block, omega_word,
                              perm_length, word_to_perm)


def brute_length(p: Perm) -> int:
    """Shortest word length by breadth-first search over adjacent swaps."""
    n = p.n
    start = tuple(range(1, n + 1))
    seen, frontier, depth = {start}, [start], 0
    while True:
        if p.images in seen and p.images in frontier:
            return depth
        nxt = []
        for imgs in frontier:
            for i in range(n - 1):
                swapped = list(imgs)
                swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
                swapped = tuple(swapped)
                if swapped not in seen:
                    seen.add(swapped)
                    nxt.append(swapped)
        frontier, depth = nxt, depth + 1


def subsequence_oracle(a, b) -> bool:
    """Longest-common-subsequence dynamic program."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)] == len(a)


words = st.integers(2, 5).flatmap(
    lambda n: st.lists(st.integers(1, n - 1), max_size=7).map(lambda ls: ReducedWord(tuple(ls), n)))


def test_length_examples():
    assert perm_length(Perm.identity(4)) == 0
    assert perm_length(word_to_perm(ReducedWord((1,), 2))) == 1
    p = word_to_perm(omega_block(3, 1, 4))
    assert perm_length(p) == brute_length(p) == 3


def test_length_matches_bfs_on_s4():
    for p in all_perms(4):
        assert perm_length(p) == brute_length(p)


def test_word_to_perm_examples():
    assert word_to_perm(ReducedWord((), 3)) == Perm.identity(3)
    assert word_to_perm(ReducedWord((1, 1), 2)) == Perm.identity(2)
    assert word_to_perm(ReducedWord((1, 2, 1), 3)) == word_to_perm(ReducedWord((2, 1, 2), 3))


def test_out_of_range_letter():
    with pytest.raises(ValueError):
        ReducedWord((3,), 3)
    with pytest.raises(ValueError):
        ReducedWord((0,), 3)


@given(words)
def test_length_bounded_by_letters(w):
    assert perm_length(word_to_perm(w)) <= len(w)
    assert w.reduced == (perm_length(word_to_perm(w)) == len(w))


def test_reduced_flag_exhaustive_s4():
    for length in range(5):
        for letters in itertools.product((1, 2, 3), repeat=length):
            w = ReducedWord(letters, 4)
            assert w.reduced == (brute_length(word_to_perm(w)) == length)


def test_omega_word_examples():
    assert omega_word(3, 2, 1).letters == (1,)
    assert omega_word(3, 2, 3).letters == (1, 2, 1)
    # the expansion gives omega_{2,1} followed by an empty block
    assert omega_word(4, 2, 1).letters == (2, 1)
    assert omega_word(4, 2, 4).letters == (2, 1, 3, 2, 1)


def test_omega_word_lengths_grow_by_one():
    for n in range(3, 6):
        base = len(omega_word(n, 2, 1))
        for k in range(1, n + 1):
            w = omega_word(n, 2, k)
            assert w.reduced
            assert len(w) == base + k - 1


def test_omega_word_range_errors():
    with pytest.raises(ValueError):
        omega_word(3, 2, 0)
    with pytest.raises(ValueError):
        omega_word(3, 3, 1)


def test_empty_block():
    assert omega_block(1, 2, 3).letters == ()


def test_coset_min_rep_trivial_cases():
    assert coset_min_rep(Perm.identity(4), 4, 2) == Perm.identity(4)
    for p in all_perms(4):
        if p.images[2:] == (3, 4):
            assert coset_min_rep(p, 4, 2) == Perm.identity(4)


@pytest.mark.parametrize("n", [4, 5])
def test_coset_min_rep_brute_force(n):
    for p in all_perms(n):
        elems = coset(p, n, 2)
        rep = coset_min_rep(p, n, 2)
        assert rep in elems
        others = [perm_length(x) for x in elems if x != rep]
        assert all(perm_length(rep) < ell for ell in others)


def test_braid_lemma_instances():
    for n in (3, 4, 5):
        lhs = omega_block(n - 2, 1, n) + omega_block(n - 1, 1, n)
        rhs = omega_block(n - 1, 1, n) + omega_block(n - 1, 2, n)
        assert braid_equal(lhs, rhs)
    assert not braid_equal(ReducedWord((1, 2), 3), ReducedWord((2, 1), 3))


@given(words, words)
def test_braid_equal_is_evaluation_equality(a, b):
    if a.n != b.n:
        return
    assert braid_equal(a, b) == (word_to_perm(a) == word_to_perm(b))


def test_scattered_subword_examples():
    assert is_scattered_subword(ReducedWord((), 3), ReducedWord((1, 2), 3))
    assert is_scattered_subword(ReducedWord((1, 1), 3), ReducedWord((1, 2, 1), 3))
    assert not is_scattered_subword(ReducedWord((2, 1, 2), 3), ReducedWord((1, 2, 1), 3))


def test_scattered_subwords_exhaustive():
    ws = [w for L in range(6) for w in itertools.product((1, 2, 3), repeat=L)]
    for a in ws:
        for b in ws:
            assert is_scattered_subword(ReducedWord(a, 4), ReducedWord(b, 4)) == subsequence_oracle(a, b)


@given(words, st.data())
def test_deletion_gives_subword(w, data):
    if not len(w):
        return
    pos = data.draw(st.integers(0, len(w) - 1))
    assert is_scattered_subword(delete_letter(w, pos), w)


def test_csv_round_trip():
    w = ReducedWord((2, 1, 3), 4)
    assert ReducedWord.from_csv(w.to_csv(), 4) == w
    assert ReducedWord.from_csv("", 3) == ReducedWord((), 3)
