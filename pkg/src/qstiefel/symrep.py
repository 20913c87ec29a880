"""Symbolic word representations as path sums of atom tensors.

The image of a generator ``u_rs`` under ``psi_{t,w} = tau_t * pi_{s_i1} * ...``
is a finite sum over index paths ``r = j_0, j_1, ..., j_k = s`` of elementary
tensors ``pi_{s_i1}(u_{j0 j1}) (x) ... (x) pi_{s_ik}(u_{j_{k-1} j_k})``, each
weighted by the torus character of row ``r``.  Every slot holds one atom, so
the slot character ``sigma`` (``sigma(S) = 1``) acts by deleting a slot.

Torus monomials are exponent vectors over ``t_1..t_T``.  With ``T`` torus
variables the remaining coordinates are embedded as ``t_j = 1`` for
``T < j < n`` and ``t_n = conj(t_1 ... t_T)``; ``T = n - 1`` is the full
maximal torus, ``T = m`` the Stiefel embedding, ``T = 0`` drops ``tau``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .coxeter import ReducedWord
from .fock import Atom, FactorSpace, SparseOp, atom_matrix, kron, torus_matrix

SIGMA = {Atom.ONE: 1, Atom.A: 1, Atom.ASTAR: 1, Atom.S: 1, Atom.SSTAR: 1,
         Atom.B: 0, Atom.C: 0, Atom.P: 0, Atom.ZERO: 0}

# slot products x*y of the Toeplitz atoms that the witness algebra needs
_PRODUCTS = {
    (Atom.P, Atom.P): ((Atom.P, 1),),
    (Atom.S, Atom.SSTAR): ((Atom.ONE, 1),),
    (Atom.SSTAR, Atom.S): ((Atom.ONE, 1), (Atom.P, -1)),
    (Atom.S, Atom.P): (),
    (Atom.P, Atom.SSTAR): (),
}


def _slot_product(x: Atom, y: Atom):
    if x is Atom.ZERO or y is Atom.ZERO:
        return ()
    if x is Atom.ONE:
        return ((y, 1),)
    if y is Atom.ONE:
        return ((x, 1),)
    try:
        return _PRODUCTS[(x, y)]
    except KeyError:
        raise NotImplementedError(f"no closed form for the slot product {x.value}*{y.value}") from None


class PathSum:
    """Formal sum of elementary tensors with torus-monomial coefficients.

    ``terms`` maps ``(atoms, t_exponents)`` to a scalar coefficient.  Terms
    with a zero coefficient or a ``Zero`` atom are dropped on construction.
    """

    __slots__ = ("terms", "nslots", "ntorus")

    def __init__(self, terms, nslots: int, ntorus: int):
        clean = {}
        for (atoms, texp), c in dict(terms).items():
            atoms = tuple(Atom(a) for a in atoms)
            texp = tuple(int(e) for e in texp)
            if len(atoms) != nslots or len(texp) != ntorus:
                raise ValueError("term does not match slot/torus count")
            if c == 0 or Atom.ZERO in atoms:
                continue
            clean[(atoms, texp)] = clean.get((atoms, texp), 0) + c
        self.terms = {k: v for k, v in clean.items() if v != 0}
        self.nslots = nslots
        self.ntorus = ntorus

    @classmethod
    def zero(cls, nslots: int, ntorus: int) -> "PathSum":
        return cls({}, nslots, ntorus)

    @classmethod
    def one(cls, nslots: int, ntorus: int) -> "PathSum":
        return cls({((Atom.ONE,) * nslots, (0,) * ntorus): 1}, nslots, ntorus)

    @classmethod
    def monomial(cls, atoms, texp=(), coeff=1) -> "PathSum":
        atoms = tuple(atoms)
        texp = tuple(texp)
        return cls({(atoms, texp): coeff}, len(atoms), len(texp))

    def _same_shape(self, other):
        if (self.nslots, self.ntorus) != (other.nslots, other.ntorus):
            raise ValueError("path sums have different slot or torus counts")

    def __add__(self, other: "PathSum") -> "PathSum":
        self._same_shape(other)
        terms = defaultdict(int, self.terms)
        for k, v in other.terms.items():
            terms[k] += v
        return PathSum(terms, self.nslots, self.ntorus)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other: "PathSum") -> "PathSum":
        return self + (-other)

    def scale(self, c) -> "PathSum":
        return PathSum({k: c * v for k, v in self.terms.items()}, self.nslots, self.ntorus)

    def __eq__(self, other):
        if not isinstance(other, PathSum):
            return NotImplemented
        return (self.nslots, self.ntorus, self.terms) == (other.nslots, other.ntorus, other.terms)

    def __hash__(self):
        return hash((self.nslots, self.ntorus, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def tensor(self, other: "PathSum") -> "PathSum":
        """Concatenate slots; torus monomials multiply."""
        if self.ntorus != other.ntorus:
            raise ValueError("torus count mismatch")
        terms = defaultdict(int)
        for (a1, t1), c1 in self.terms.items():
            for (a2, t2), c2 in other.terms.items():
                terms[(a1 + a2, tuple(x + y for x, y in zip(t1, t2)))] += c1 * c2
        return PathSum(terms, self.nslots + other.nslots, self.ntorus)

    def adjoint(self) -> "PathSum":
        return PathSum({(tuple(a.adjoint() for a in atoms), tuple(-e for e in texp)): np.conj(c)
                        for (atoms, texp), c in self.terms.items()}, self.nslots, self.ntorus)

    def __matmul__(self, other: "PathSum") -> "PathSum":
        """Operator product, slot by slot, for the atoms with closed-form products."""
        self._same_shape(other)
        terms = defaultdict(int)
        for (a1, t1), c1 in self.terms.items():
            for (a2, t2), c2 in other.terms.items():
                partial = [((), c1 * c2)]
                for x, y in zip(a1, a2):
                    options = _slot_product(x, y)
                    partial = [(atoms + (z,), c * w) for atoms, c in partial for z, w in options]
                texp = tuple(x + y for x, y in zip(t1, t2))
                for atoms, c in partial:
                    terms[(atoms, texp)] += c
        return PathSum(terms, self.nslots, self.ntorus)

    def contract(self, slot: int) -> "PathSum":
        """Apply ``sigma`` to one slot (0-based) and delete it."""
        if not 0 <= slot < self.nslots:
            raise IndexError(f"slot {slot} out of range for {self.nslots} slots")
        terms = defaultdict(int)
        for (atoms, texp), c in self.terms.items():
            w = SIGMA[atoms[slot]]
            if w:
                terms[(atoms[:slot] + atoms[slot + 1:], texp)] += w * c
        return PathSum(terms, self.nslots - 1, self.ntorus)

    def evaluate_torus(self, values: dict) -> "PathSum":
        """Substitute ``t_j -> values[j]`` (1-based) and drop those variables."""
        keep = [j for j in range(1, self.ntorus + 1) if j not in values]
        terms = defaultdict(int)
        for (atoms, texp), c in self.terms.items():
            w = c
            for j, val in values.items():
                w = w * complex(val) ** texp[j - 1] if texp[j - 1] else w
            terms[(atoms, tuple(texp[j - 1] for j in keep))] += w
        return PathSum(terms, self.nslots, len(keep))

    def torus_degrees(self) -> set:
        return {texp for _, texp in self.terms}

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: ([a.value for a in kv[0][0]], kv[0][1]))

    def to_json(self) -> list:
        out = []
        for (atoms, texp), c in self.sorted_terms():
            c = complex(c)
            out.append({
                "atoms": [a.value for a in atoms],
                "t_exponents": list(texp),
                "coeff": {"q_power": 0,
                          "sign": int(np.sign(c.real)) if c.imag == 0 else 0,
                          "scalar": [c.real, c.imag]},
            })
        return out

    @classmethod
    def from_json(cls, data, nslots: int, ntorus: int) -> "PathSum":
        terms = {}
        for item in data:
            re, im = item["coeff"]["scalar"]
            c = complex(re, im)
            if c.imag == 0 and c.real == int(c.real):
                c = int(c.real)
            terms[(tuple(Atom(a) for a in item["atoms"]), tuple(item["t_exponents"]))] = c
        return cls(terms, nslots, ntorus)

    def __repr__(self):
        parts = []
        for (atoms, texp), c in self.sorted_terms():
            mono = "".join(f"t{j + 1}^{e}" for j, e in enumerate(texp) if e)
            parts.append(f"{c}*{mono or ''}[{' x '.join(a.value for a in atoms)}]")
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class RepMatrix:
    """``n x n`` grid of path sums: the images of ``u_rs`` under one representation."""

    n: int
    entries: tuple
    word: ReducedWord
    ntorus: int

    @property
    def nslots(self) -> int:
        return len(self.word)

    def __getitem__(self, rs) -> PathSum:
        r, s = rs
        return self.entries[r - 1][s - 1]

    def map_entries(self, fn, word=None, ntorus=None) -> "RepMatrix":
        return RepMatrix(self.n, tuple(tuple(fn(e) for e in row) for row in self.entries),
                         self.word if word is None else word,
                         self.ntorus if ntorus is None else ntorus)

    def __eq__(self, other):
        if not isinstance(other, RepMatrix):
            return NotImplemented
        return (self.n, self.ntorus, self.entries) == (other.n, other.ntorus, other.entries)

    def to_json(self) -> dict:
        return {"n": self.n, "word": list(self.word.letters), "ntorus": self.ntorus,
                "entries": [[e.to_json() for e in row] for row in self.entries]}


def elementary_entry(i: int, r: int, s: int, n: int) -> Atom:
    """The atom ``pi_{s_i}(u_rs)``."""
    if not 1 <= i <= n - 1:
        raise ValueError(f"s_{i} out of range for n={n}")
    if not (1 <= r <= n and 1 <= s <= n):
        raise ValueError(f"index ({r},{s}) out of range for n={n}")
    if (r, s) == (i, i):
        return Atom.A
    if (r, s) == (i, i + 1):
        return Atom.B
    if (r, s) == (i + 1, i):
        return Atom.C
    if (r, s) == (i + 1, i + 1):
        return Atom.ASTAR
    return Atom.ONE if r == s else Atom.ZERO


def torus_exponents(row: int, n: int, ntorus: int) -> tuple:
    """Exponent vector of ``t_{n-row+1}`` under the embedding of ``ntorus`` variables."""
    if not 0 <= ntorus <= n - 1:
        raise ValueError(f"ntorus={ntorus} out of range for n={n}")
    c = n - row + 1
    if c <= ntorus:
        return tuple(1 if j == c else 0 for j in range(1, ntorus + 1))
    if c == n:
        return (-1,) * ntorus
    return (0,) * ntorus


def torus_rep(n: int, ntorus: int) -> RepMatrix:
    """``tau_t`` as a zero-slot representation."""
    entries = tuple(
        tuple(PathSum({((), torus_exponents(r, n, ntorus)): 1}, 0, ntorus) if r == s
              else PathSum.zero(0, ntorus) for s in range(1, n + 1))
        for r in range(1, n + 1))
    return RepMatrix(n, entries, ReducedWord((), n), ntorus)


def elementary_rep(i: int, n: int, ntorus: int = 0) -> RepMatrix:
    zero_t = (0,) * ntorus
    entries = tuple(
        tuple(PathSum({((elementary_entry(i, r, s, n),), zero_t): 1}, 1, ntorus)
              for s in range(1, n + 1))
        for r in range(1, n + 1))
    return RepMatrix(n, entries, ReducedWord((i,), n), ntorus)


def convolve(phi: RepMatrix, xi: RepMatrix) -> RepMatrix:
    """``(phi (x) xi) Delta``: entry ``(r, s)`` is ``sum_j phi(u_rj) (x) xi(u_js)``."""
    if phi.n != xi.n:
        raise ValueError("degree mismatch")
    if phi.ntorus != xi.ntorus:
        raise ValueError("torus count mismatch")
    n = phi.n
    entries = []
    for r in range(1, n + 1):
        row = []
        for s in range(1, n + 1):
            acc = PathSum.zero(phi.nslots + xi.nslots, phi.ntorus)
            for j in range(1, n + 1):
                left, right = phi[r, j], xi[j, s]
                if left and right:
                    acc = acc + left.tensor(right)
            row.append(acc)
        entries.append(tuple(row))
    return RepMatrix(n, tuple(entries), phi.word + xi.word, phi.ntorus)


def build_rep(word: ReducedWord, ntorus: int = 0) -> RepMatrix:
    """``psi_{t,w} = tau_t * pi_{s_i1} * ... * pi_{s_ik}`` (``ntorus=0`` gives ``psi_w``)."""
    rep = torus_rep(word.n, ntorus)
    for i in word.letters:
        rep = convolve(rep, elementary_rep(i, word.n, ntorus))
    return rep


def sigma_contract(rm: RepMatrix, slot: int) -> RepMatrix:
    if not 0 <= slot < rm.nslots:
        raise IndexError(f"slot {slot} out of range for word of length {rm.nslots}")
    letters = rm.word.letters[:slot] + rm.word.letters[slot + 1:]
    return rm.map_entries(lambda e: e.contract(slot), word=ReducedWord(letters, rm.n))


def stiefel_generators(rm: RepMatrix, m: int) -> list:
    """Images of the last ``m`` rows ``{u_ij : n-m+1 <= i <= n}``, row-major."""
    if not 1 <= m <= rm.n - 1:
        raise ValueError(f"m={m} out of range for n={rm.n}")
    return [rm[i, j] for i in range(rm.n - m + 1, rm.n + 1) for j in range(1, rm.n + 1)]


def rep_shape(nslots: int, ntorus: int, D: int, torus: FactorSpace | None) -> list:
    """Factor list for materialization: torus factors first (omitted when sampled)."""
    from .fock import FockTrunc

    lead = [] if torus is None else [torus] * ntorus
    return lead + [FockTrunc(D)] * nslots


def materialize(pm: PathSum, q: float, shape, t=None) -> SparseOp:
    """Sum over terms of ``coeff * kron(torus powers, atom matrices)``.

    With ``t`` given (one complex unit per torus variable) the monomials are
    evaluated as scalars and ``shape`` lists only the Fock slots.
    """
    shape = list(shape)
    if t is not None:
        if len(t) != pm.ntorus:
            raise ValueError("need one sampled value per torus variable")
        pm = pm.evaluate_torus({j + 1: v for j, v in enumerate(t)})
    if len(shape) != pm.ntorus + pm.nslots:
        raise ValueError(f"shape has {len(shape)} factors, expected {pm.ntorus + pm.nslots}")
    if pm.nslots == 0 and pm.ntorus == 0 and not shape:
        raise ValueError("zero-slot path sums need an explicit scalar factor")
    torus_f, fock_f = shape[:pm.ntorus], shape[pm.ntorus:]
    total = SparseOp.zeros(shape)
    for (atoms, texp), c in pm.sorted_terms():
        parts = [torus_matrix(f, e) for f, e in zip(torus_f, texp)]
        parts += [atom_matrix(a, q, f) for a, f in zip(atoms, fock_f)]
        total = total + c * kron(parts)
    return total


def materialize_rep(rm: RepMatrix, q: float, D: int, torus: FactorSpace | None = None,
                    t=None) -> dict:
    """Materialize every entry; returns ``{(r, s): SparseOp}``.

    Zero-slot representations (the empty word) get a single scalar factor.
    """
    if t is None and torus is None and rm.ntorus:
        raise ValueError("torus variables need a torus factor or sampled values")
    if rm.nslots == 0 and (t is not None or rm.ntorus == 0):
        from .fock import Scalar
        shape = [Scalar()]
        out = {}
        for r in range(1, rm.n + 1):
            for s in range(1, rm.n + 1):
                pm = rm[r, s]
                if t is not None:
                    pm = pm.evaluate_torus({j + 1: v for j, v in enumerate(t)})
                val = sum(complex(c) for c in pm.terms.values())
                out[(r, s)] = SparseOp(np.array([[val]]), shape)
        return out
    shape = rep_shape(rm.nslots, 0 if t is not None else rm.ntorus, D, torus)
    return {(r, s): materialize(rm[r, s], q, shape, t)
            for r in range(1, rm.n + 1) for s in range(1, rm.n + 1)}
