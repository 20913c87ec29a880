"""Residual checks of the defining relations of C(SU_q(n)) on truncated
representations, and of the operator identities used to locate compact ideals
inside the word representations.

Truncation deletes one matrix element at the edge of every Fock factor.  A
product of ``f`` generator images can move a vector by at most ``f`` Fock
levels, so residuals are measured on the compression to Fock indices
``<= D - 1 - f // 2``, where the truncated relations hold exactly.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .coxeter import Perm, ReducedWord, omega_block, perm_length
from .fock import (Atom, FactorSpace, FockTrunc, SparseOp, ZCyclic, atom_matrix, interior_residual,
                   kron, norm_bound, torus_matrix)
from .symrep import RepMatrix, build_rep, materialize_rep

DEFAULT_SEED = 20240501


def e_tensor(indices, q: float) -> float:
    """``E_{i1..in}``: zero on repeated indices, else ``(-q)^(inversions)``."""
    idx = tuple(int(i) for i in indices)
    if sorted(idx) != list(range(1, len(idx) + 1)):
        return 0.0
    return (-q) ** perm_length(Perm(idx))


def unitary_samples(count: int = 3, seed: int = DEFAULT_SEED, roots: int = 8):
    """Eighth roots of unity followed by ``count`` seeded random unit scalars."""
    rng = np.random.default_rng(seed)
    grid = [complex(np.exp(2j * np.pi * r / roots)) for r in range(roots)]
    extra = [complex(np.exp(2j * np.pi * x)) for x in rng.random(count)]
    return grid + extra


def truncation_tolerance(q: float, D: int) -> float:
    return 10 * q ** (2 * D) + 1e-12


@dataclass
class ResidualReport:
    name: str
    params: dict
    residuals: dict = field(default_factory=dict)
    tol: float = 1e-10
    passed: bool = True

    def add(self, key, value: float):
        self.residuals[str(key)] = float(value)
        if not value <= self.tol:
            self.passed = False

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["max_residual"] = self.max_residual
        return out


def _rep_params(rm: RepMatrix, q, D, torus, t):
    return {"n": rm.n, "word": list(rm.word.letters), "ntorus": rm.ntorus, "q": q, "D": D,
            "torus": None if torus is None else torus.describe(),
            "t": None if t is None else [[complex(x).real, complex(x).imag] for x in t]}


def _depth(D: int, factors: int) -> int:
    depth = factors // 2
    if depth > D - 2:
        raise ValueError(f"Fock dimension {D} too small for products of {factors} factors")
    return depth


def check_unitarity(rm: RepMatrix, q: float, D: int, torus: FactorSpace | None = None,
                    t=None, tol: float | None = None) -> ResidualReport:
    """Both unitarity relations ``sum_k u_ik u_jk* = delta_ij = sum_k u_ki* u_kj``."""
    ops = materialize_rep(rm, q, D, torus, t)
    n = rm.n
    tol = truncation_tolerance(q, D) if tol is None else tol
    rep = ResidualReport("unitarity", _rep_params(rm, q, D, torus, t), tol=tol)
    depth = _depth(D, 2)
    first = next(iter(ops.values()))
    ident = SparseOp.identity(first.factors)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            rows = sum((ops[i, k] @ ops[j, k].H for k in range(2, n + 1)), ops[i, 1] @ ops[j, 1].H)
            cols = sum((ops[k, i].H @ ops[k, j] for k in range(2, n + 1)), ops[1, i].H @ ops[1, j])
            target = ident if i == j else ident * 0
            rep.add(f"row({i},{j})", interior_residual(rows - target, depth))
            rep.add(f"col({i},{j})", interior_residual(cols - target, depth))
    return rep


def _determinant_sum(ops, n, js, q, transposed=False):
    """``sum_i E_{i1..in} U_{j1 i1} ... U_{jn in}``; ``transposed`` swaps each index pair."""
    def entry(j, i):
        return ops[i, j] if transposed else ops[j, i]

    total = None
    for perm in itertools.permutations(range(1, n + 1)):
        coef = (-q) ** perm_length(Perm(perm))
        prod = entry(js[0], perm[0])
        for a in range(1, n):
            prod = prod @ entry(js[a], perm[a])
        term = prod * coef
        total = term if total is None else total + term
    return total


def check_determinant(rm: RepMatrix, q: float, D: int, torus: FactorSpace | None = None,
                      t=None, tol: float = 1e-8, max_degree: int = 4,
                      repeat_samples: int = 8, seed: int = DEFAULT_SEED,
                      transposed: bool = False) -> ResidualReport:
    """The quantum determinant relation for every target multi-index.

    All ``n^n`` targets are swept for ``n <= 3``; for larger ``n`` the
    distinct targets plus ``repeat_samples`` seeded targets with a repeat.
    ``transposed`` checks ``sum_i E_i u_{i1 j1} ... u_{in jn} = E_j`` instead.
    """
    n = rm.n
    if n > max_degree:
        raise ValueError(f"degree {n} exceeds the configured limit {max_degree}")
    ops = materialize_rep(rm, q, D, torus, t)
    depth = _depth(D, n)
    params = dict(_rep_params(rm, q, D, torus, t), transposed=transposed)
    rep = ResidualReport("determinant", params, tol=tol)
    first = next(iter(ops.values()))
    ident = SparseOp.identity(first.factors)
    if n <= 3:
        targets = list(itertools.product(range(1, n + 1), repeat=n))
    else:
        targets = list(itertools.permutations(range(1, n + 1)))
        rng = np.random.default_rng(seed)
        repeats = [js for js in itertools.product(range(1, n + 1), repeat=n) if len(set(js)) < n]
        for idx in rng.choice(len(repeats), size=min(repeat_samples, len(repeats)), replace=False):
            targets.append(repeats[idx])
    for js in targets:
        lhs = _determinant_sum(ops, n, js, q, transposed)
        rep.add("E" + "".join(map(str, js)), interior_residual(lhs - ident * e_tensor(js, q), depth))
    return rep


def lemma_rep(n: int, k: int) -> RepMatrix:
    """``chi_{omega_{n-1,n-k}}`` on the odd sphere: one torus variable."""
    return build_rep(omega_block(n - 1, n - k, n), ntorus=1)


def check_compact_lemma(n: int, m: int, k: int, q: float, D: int, M: int = 8,
                        tol: float = 1e-12) -> ResidualReport:
    """``(1 (x) p (x) 1) chi(u_ns) = t_1 (x) p (x) pi_{omega_{n-2,n-k}}(v_{n-1,s})``.

    ``m`` is recorded for the report; the identity lives on the odd sphere,
    so the torus has a single variable.  Both sides are compared on the full
    truncated space.
    """
    if n < 3 or not 1 <= k <= n - 1:
        raise ValueError(f"need n >= 3 and 1 <= k <= n-1, got n={n}, k={k}")
    torus = ZCyclic(M)
    fock = FockTrunc(D)
    left = materialize_rep(lemma_rep(n, k), q, D, torus)
    inner = build_rep(omega_block(n - 2, n - k, n - 1), ntorus=0)
    right_inner = materialize_rep(inner, q, D) if len(inner.word) else None
    proj = kron([SparseOp.identity([torus]), atom_matrix(Atom.P, q, fock)]
                + [SparseOp.identity([fock])] * (k - 1))
    tgen = torus_matrix(torus, 1)
    pmat = atom_matrix(Atom.P, q, fock)
    rep = ResidualReport("compact_lemma", {"n": n, "m": m, "k": k, "q": q, "D": D, "M": M}, tol=tol)
    for s in range(1, n):
        lhs = proj @ left[n, s]
        if right_inner is None:
            rhs = kron([tgen, pmat]) * (1.0 if s == n - 1 else 0.0)
        else:
            rhs = kron([tgen, pmat, right_inner[n - 1, s]])
        rep.add(f"s={s}", norm_bound(lhs - rhs))
    return rep


_KILLING_INV = {Atom.ONE, Atom.A, Atom.ASTAR}


def build_killing_pair(z_atoms, q: float, D: int):
    """Slot-wise ``x_i, y_i`` with ``x_i z_i y_i = p``; returns the tensor products."""
    fock = FockTrunc(D)
    p = atom_matrix(Atom.P, q, fock)
    s = atom_matrix(Atom.S, q, fock)
    c = (1 - q * q) ** -0.5
    xs, ys = [], []
    for z in z_atoms:
        z = Atom(z)
        if z not in _KILLING_INV:
            raise ValueError(f"diagonal slot holds {z.value}, expected one of 1, A, A*")
        if z is Atom.ONE:
            xs.append(p), ys.append(p)
        elif z is Atom.A:
            xs.append(p), ys.append(c * (s.H @ p))
        else:
            xs.append(c * (p @ s)), ys.append(p)
    return kron(xs), kron(ys)


def diagonal_atoms(rm: RepMatrix, s: int):
    """The single elementary tensor ``z_1 (x) ... (x) z_k`` of ``rm[s, s]``."""
    terms = rm[s, s].terms
    if len(terms) != 1:
        raise ValueError(f"diagonal entry ({s},{s}) has {len(terms)} terms, expected one")
    (atoms, _), coef = next(iter(terms.items()))
    if coef != 1:
        raise ValueError("diagonal entry carries a nontrivial coefficient")
    return atoms


def check_killing(n: int, k: int, s: int | None, q: float, D: int,
                  tol: float = 1e-12) -> ResidualReport:
    """``x_s pi(u_js) y_s = delta_js p^{(x)k}`` for ``pi = pi_{omega_{n-1,n-k}}``.

    ``s=None`` sweeps every column.  Every row ``j`` is checked.
    """
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} out of range for n={n}")
    rm = build_rep(omega_block(n - 1, n - k, n), ntorus=0)
    ops = materialize_rep(rm, q, D)
    pk = kron([atom_matrix(Atom.P, q, FockTrunc(D))] * k)
    cols = range(1, n + 1) if s is None else [s]
    rep = ResidualReport("killing", {"n": n, "k": k, "s": s, "q": q, "D": D}, tol=tol)
    for col in cols:
        x, y = build_killing_pair(diagonal_atoms(rm, col), q, D)
        for j in range(1, n + 1):
            val = x @ ops[j, col] @ y
            target = pk if j == col else pk * 0
            rep.add(f"j={j},s={col}", interior_residual(val - target, _depth(D, 3)))
    return rep


def random_deletion_cases(count: int = 100, max_len: int = 6, max_n: int = 4,
                          seed: int = DEFAULT_SEED):
    """Seeded ``(word, position)`` pairs with ``2 <= n <= max_n`` and ``1 <= len <= max_len``."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        length = int(rng.integers(1, max_len + 1))
        letters = tuple(int(x) for x in rng.integers(1, n, size=length))
        cases.append((ReducedWord(letters, n), int(rng.integers(0, length))))
    return cases


def check_factorization(cases=None, ntorus: int | None = None) -> ResidualReport:
    """Slot contraction at a deleted letter reproduces the shorter word, exactly."""
    from .coxeter import delete_letter
    from .symrep import sigma_contract

    cases = random_deletion_cases() if cases is None else cases
    rep = ResidualReport("factorization", {"cases": len(cases)}, tol=0.0)
    for idx, (w, pos) in enumerate(cases):
        nt = w.n - 1 if ntorus is None else ntorus
        lhs = sigma_contract(build_rep(w, nt), pos)
        rhs = build_rep(delete_letter(w, pos), nt)
        rep.add(f"case{idx}", 0.0 if lhs == rhs else 1.0)
    return rep


def poincare_coefficients(n: int):
    """Coefficients of ``prod_{i=1}^{n} (1 + x + ... + x^{i-1})``."""
    poly = np.array([1], dtype=np.int64)
    for i in range(1, n + 1):
        poly = np.convolve(poly, np.ones(i, dtype=np.int64))
    return poly


def e_tensor_square_sum(n: int, q: float) -> float:
    return sum(e_tensor(p, q) ** 2 for p in itertools.permutations(range(1, n + 1)))
