"""Symmetric-group words: lengths, the special words omega_{j,i} and omega_k,
minimal coset representatives and subword tests.

Permutations are stored in one-line notation on ``1..n``.  A word
``s_{i1} s_{i2} ... s_{ik}`` is evaluated left to right as a product of
functions, ``w(x) = s_{i1}(s_{i2}(...s_{ik}(x)))``; in one-line notation
this is the identity with positions ``i, i+1`` swapped letter by letter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations


@dataclass(frozen=True)
class Perm:
    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError(f"{imgs} is not a permutation of 1..{len(imgs)}")
        object.__setattr__(self, "images", imgs)

    @property
    def n(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(tuple(range(1, n + 1)))

    def __call__(self, x: int) -> int:
        return self.images[x - 1]

    def __mul__(self, other: "Perm") -> "Perm":
        # (self * other)(x) = self(other(x))
        if self.n != other.n:
            raise ValueError("degree mismatch")
        return Perm(tuple(self(other(x)) for x in range(1, self.n + 1)))

    def inverse(self) -> "Perm":
        inv = [0] * self.n
        for pos, val in enumerate(self.images, start=1):
            inv[val - 1] = pos
        return Perm(tuple(inv))

    def __str__(self):
        return "[" + " ".join(map(str, self.images)) + "]"


@dataclass(frozen=True)
class ReducedWord:
    """A word in the adjacent transpositions ``s_1..s_{n-1}``.

    Despite the name, arbitrary (non-reduced) words are allowed; ``reduced``
    records whether the letter count equals the length of the evaluation.
    """

    letters: tuple[int, ...]
    n: int
    reduced: bool = field(init=False, compare=False)

    def __post_init__(self):
        letters = tuple(int(i) for i in self.letters)
        if self.n < 1:
            raise ValueError("degree must be positive")
        for i in letters:
            if not 1 <= i <= self.n - 1:
                raise ValueError(f"letter s_{i} out of range for S_{self.n}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "reduced", perm_length(_evaluate(letters, self.n)) == len(letters))

    def __len__(self):
        return len(self.letters)

    def __add__(self, other: "ReducedWord") -> "ReducedWord":
        if self.n != other.n:
            raise ValueError("degree mismatch")
        return ReducedWord(self.letters + other.letters, self.n)

    def to_csv(self) -> str:
        return ",".join(map(str, self.letters))

    @classmethod
    def from_csv(cls, text: str, n: int) -> "ReducedWord":
        text = text.strip()
        letters = tuple(int(tok) for tok in text.split(",")) if text else ()
        return cls(letters, n)


def _evaluate(letters, n) -> Perm:
    images = list(range(1, n + 1))
    for i in letters:
        images[i - 1], images[i] = images[i], images[i - 1]
    return Perm(tuple(images))


def perm_length(p: Perm) -> int:
    """Inversion count, which equals the length of a reduced word for ``p``."""
    imgs = p.images
    return sum(1 for a in range(len(imgs)) for b in range(a + 1, len(imgs)) if imgs[a] > imgs[b])


def word_to_perm(w: ReducedWord) -> Perm:
    return _evaluate(w.letters, w.n)


def omega_block(j: int, i: int, n: int) -> ReducedWord:
    """``omega_{j,i} = s_j s_{j-1} ... s_i``; the empty word when ``j < i``."""
    if j < i:
        return ReducedWord((), n)
    return ReducedWord(tuple(range(j, i - 1, -1)), n)


def omega_word(n: int, m: int, k: int) -> ReducedWord:
    """``omega_k = omega_{n-m,1} omega_{n-m+1,1} ... omega_{n-2,1} omega_{n-1,n-k+1}``."""
    if not 1 <= m <= n - 1:
        raise ValueError(f"m={m} out of range for n={n}")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    w = ReducedWord((), n)
    for j in range(n - m, n - 1):
        w = w + omega_block(j, 1, n)
    return w + omega_block(n - 1, n - k + 1, n)


def coset_min_rep(p: Perm, n: int, m: int) -> Perm:
    """Minimal-length element of the left coset ``S_{n-m} p``.

    ``S_{n-m}`` permutes the values ``1..n-m``; left multiplication relabels
    those values, so the minimum puts them in increasing order.
    """
    if p.n != n:
        raise ValueError("degree mismatch")
    if not 1 <= m <= n - 1:
        raise ValueError(f"m={m} out of range for n={n}")
    small = iter(range(1, n - m + 1))
    return Perm(tuple(next(small) if v <= n - m else v for v in p.images))


def coset(p: Perm, n: int, m: int) -> list[Perm]:
    """All elements ``sigma * p`` with ``sigma`` fixing ``n-m+1..n``."""
    out = []
    for head in permutations(range(1, n - m + 1)):
        sigma = Perm(head + tuple(range(n - m + 1, n + 1)))
        out.append(sigma * p)
    return out


def braid_equal(w1: ReducedWord, w2: ReducedWord) -> bool:
    if w1.n != w2.n:
        raise ValueError("degree mismatch")
    return word_to_perm(w1) == word_to_perm(w2)


def is_scattered_subword(w1: ReducedWord, w2: ReducedWord) -> bool:
    """True iff the letters of ``w1`` occur in order inside ``w2``."""
    if w1.n != w2.n:
        raise ValueError("degree mismatch")
    it = iter(w2.letters)
    return all(any(a == b for b in it) for a in w1.letters)


def delete_letter(w: ReducedWord, pos: int) -> ReducedWord:
    """``w1 s_k w2 -> w1 w2`` with ``s_k`` at 0-based position ``pos``."""
    if not 0 <= pos < len(w):
        raise IndexError(f"position {pos} out of range for word of length {len(w)}")
    return ReducedWord(w.letters[:pos] + w.letters[pos + 1:], w.n)


def all_perms(n: int):
    for imgs in permutations(range(1, n + 1)):
        yield Perm(imgs)
