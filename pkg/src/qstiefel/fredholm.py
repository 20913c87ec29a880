"""Index pairings of unitaries over C(SU_q(2)) with the Fredholm modules
``F_k = 2 P_k - 1`` on ``l2(Z) (x) l2(N)``, and the reduction of the SU_q(3)
fundamental unitary to SU_q(2).

``P_k`` projects onto ``span{e_{n,m} : n + m <= k}``.  On a finite window the
pairing ``Index(P_k w P_k)`` is computed from the kernels of the compressions
of ``w`` and ``w*``, each with its domain restricted to basis vectors away
from the window edges (where the truncated shifts stop being isometric) and
its codomain the whole truncated range of ``P_k``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .coxeter import ReducedWord, omega_word
from .fock import Atom, FockTrunc, SparseOp, ZWindow, atom_matrix, block, kron, torus_matrix
from .symrep import PathSum, RepMatrix, build_rep, materialize, sigma_contract


class AmbiguousRank(ValueError):
    """A singular value sits too close to the rank threshold to be classified."""


@dataclass(frozen=True)
class FredholmSpec:
    L: int
    D: int
    k: int
    blocks: int = 1
    orientation: int = 1

    def __post_init__(self):
        if self.L < 1 or self.D < 2:
            raise ValueError("need L >= 1 and D >= 2")
        if self.blocks < 1:
            raise ValueError("blocks must be positive")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def stable(self) -> bool:
        """Index-stability margin ``|k| <= L - 4`` and ``k <= D - 4``."""
        return abs(self.k) <= self.L - 4 and self.k <= self.D - 4

    @property
    def factors(self):
        return (ZWindow(self.L, self.orientation), FockTrunc(self.D))

    def with_k(self, k: int) -> "FredholmSpec":
        return FredholmSpec(self.L, self.D, k, self.blocks, self.orientation)

    def grown(self, by: int = 4) -> "FredholmSpec":
        return FredholmSpec(self.L + by, self.D + by, self.k, self.blocks, self.orientation)


@dataclass
class IndexResult:
    index: int
    dim_ker: int
    dim_coker: int
    smallest_retained: float
    largest_discarded: float
    stable: bool = True
    sweep: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    def gap_ok(self, rank_tol: float, factor: float = 10.0) -> bool:
        """Retained singular values ``>= factor * rank_tol``, discarded ones ``<= rank_tol / factor``."""
        return (self.smallest_retained >= factor * rank_tol
                and self.largest_discarded <= rank_tol / factor)

    def to_dict(self) -> dict:
        return asdict(self)


def _lattice(spec: FredholmSpec):
    n = np.repeat(np.arange(-spec.L, spec.L + 1), spec.D)
    m = np.tile(np.arange(spec.D), 2 * spec.L + 1)
    return n, m


def half_space_mask(spec: FredholmSpec) -> np.ndarray:
    n, m = _lattice(spec)
    return np.tile(n + m <= spec.k, spec.blocks)


def half_space_projection(spec: FredholmSpec) -> SparseOp:
    """Diagonal 0/1 operator selecting ``n + m <= k`` in every block."""
    diag = half_space_mask(spec).astype(complex)
    return SparseOp(sp.diags(diag), spec.factors, spec.blocks)


def window_interior(spec: FredholmSpec, depth: int = 1) -> np.ndarray:
    """Basis vectors with ``|n| <= L - 1 - depth`` and ``m <= D - 1 - depth``."""
    n, m = _lattice(spec)
    return np.tile((np.abs(n) <= spec.L - 1 - depth) & (m <= spec.D - 1 - depth), spec.blocks)


def _shift(spec: FredholmSpec, power: int = 1) -> SparseOp:
    return torus_matrix(spec.factors[0], power)


def su2_limit_unitary(spec: FredholmSpec) -> SparseOp:
    """``u = [[t (x) S, 0], [conj(t) (x) p, conj(t) (x) S*]]`` with ``t`` the window shift.

    With ``orientation=+1`` the shift is ``t e_n = e_{n+1}``.
    """
    zf, ff = spec.factors
    t, tbar = _shift(spec, 1), _shift(spec, -1)
    # S, S* and p do not depend on q
    S, P, Sst = (atom_matrix(a, 0.5, ff) for a in (Atom.S, Atom.P, Atom.SSTAR))
    return block([[kron([t, S]), None], [kron([tbar, P]), kron([tbar, Sst])]])


def switched_shift(spec: FredholmSpec, power: int = 1) -> SparseOp:
    """``t^power (x) p + 1 - 1 (x) p``."""
    zf, ff = spec.factors
    P = atom_matrix(Atom.P, 0.5, ff)
    one_z = SparseOp.identity([zf])
    return kron([_shift(spec, power), P]) + kron([one_z, P]).one_minus()


def su2_fundamental(q: float, spec: FredholmSpec) -> SparseOp:
    """The materialized ``2 x 2`` fundamental unitary of C(SU_q(2)) under ``chi_{s_1}``.

    Its entries are ``[[conj(t) A, conj(t) B], [t C, t A*]]`` in the torus
    variable ``t`` of the representation, so ``conj(t)`` plays the role of
    the shift of ``spec`` and ``t`` is realized by the opposite shift.  As
    ``q -> 0`` this tends to :func:`su2_limit_unitary`.
    """
    rm = build_rep(ReducedWord((1,), 2), ntorus=1)
    return rep_block(rm, q, spec)


def rep_block(rm: RepMatrix, q: float, spec: FredholmSpec, conjugate: bool = True) -> SparseOp:
    """Assemble a representation matrix with one torus variable as an operator matrix.

    With ``conjugate`` the torus variable is realized by the inverse of the
    shift of ``spec`` (see :func:`su2_fundamental`).
    """
    if rm.ntorus != 1 or rm.nslots != 1:
        raise ValueError("expected one torus variable and one Fock slot")
    if rm.n != spec.blocks:
        raise ValueError("block count of the spec does not match the matrix size")
    realize = _flip(spec) if conjugate else spec
    shape = list(realize.factors)
    grid = [[materialize(rm[r, s], q, shape) if rm[r, s] else None for s in range(1, rm.n + 1)]
            for r in range(1, rm.n + 1)]
    return SparseOp(block(grid).mat, spec.factors, spec.blocks)


def _kernel_dims(mat: sp.csr_matrix, rows_keep, cols_keep, rank_tol: float):
    """Null-space dimension of ``mat[rows, cols]`` by component-wise SVD.

    Returns ``(dim_ker, smallest_retained, largest_discarded)``.
    """
    sub = sp.csr_matrix(mat[np.flatnonzero(rows_keep)][:, np.flatnonzero(cols_keep)])
    nr, nc = sub.shape
    # bipartite graph of rows and columns
    graph = sp.bmat([[None, sub], [sub.T, None]], format="csr") if sub.nnz else sp.csr_matrix((nr + nc, nr + nc))
    graph = abs(graph)
    _, labels = connected_components(graph, directed=False)
    row_lab, col_lab = labels[:nr], labels[nr:]
    order_r = np.argsort(row_lab, kind="stable")
    order_c = np.argsort(col_lab, kind="stable")
    kernel = 0
    retained, discarded = np.inf, 0.0
    sub = sub.tocsr()
    rb = np.searchsorted(row_lab[order_r], np.arange(labels.max() + 2))
    cb = np.searchsorted(col_lab[order_c], np.arange(labels.max() + 2))
    for lab in range(labels.max() + 1):
        cols = order_c[cb[lab]:cb[lab + 1]]
        if len(cols) == 0:
            continue
        rows = order_r[rb[lab]:rb[lab + 1]]
        if len(rows) == 0:
            kernel += len(cols)
            continue
        block_ = sub[rows][:, cols].toarray()
        sv = np.linalg.svd(block_, compute_uv=False)
        rank = int((sv > rank_tol).sum())
        kernel += len(cols) - rank
        if rank:
            retained = min(retained, float(sv[rank - 1]))
        if rank < len(sv):
            discarded = max(discarded, float(sv[rank]))
        amb = (sv > rank_tol / 10) & (sv < rank_tol * 10)
        if amb.any():
            raise AmbiguousRank(f"singular value {float(sv[amb][0]):.3e} within a factor 10 of {rank_tol:.1e}")
    return kernel, retained, discarded


def compression_index(u: SparseOp, spec: FredholmSpec, rank_tol: float = 1e-6) -> IndexResult:
    """``dim ker(P u P) - dim ker(P u* P)`` at a single window, level and truncation."""
    if u.blocks != spec.blocks or tuple(u.factors) != tuple(spec.factors):
        raise ValueError("operator does not act on the space of the spec")
    pmask = half_space_mask(spec)
    dom = pmask & window_interior(spec)
    ker, ret1, dis1 = _kernel_dims(u.mat, pmask, dom, rank_tol)
    coker, ret2, dis2 = _kernel_dims(u.mat.conj().T.tocsr(), pmask, dom, rank_tol)
    return IndexResult(ker - coker, ker, coker, min(ret1, ret2), max(dis1, dis2),
                       spec=asdict(spec))


def index_pairing(build, spec: FredholmSpec, rank_tol: float = 1e-6,
                  sweep_k: bool = True, sweep_size: bool = True,
                  require_margin: bool = True) -> IndexResult:
    """``<[w], F_k> = Index(P_k w P_k)`` with a stability sweep.

    ``build`` is an operator (used as is at ``spec``) or a callable
    ``spec -> SparseOp`` so the unitary can be rebuilt at larger windows.
    The sweep covers ``k-1, k, k+1`` and the window grown by 4; ``stable``
    is true iff every run gives the same integer.
    """
    if require_margin and not spec.stable:
        raise ValueError(f"level k={spec.k} violates the margin |k| <= L-4, k <= D-4")
    make = build if callable(build) else (lambda s: build)
    main = compression_index(make(spec), spec, rank_tol)
    specs = []
    if sweep_k:
        specs += [spec.with_k(spec.k - 1), spec.with_k(spec.k + 1)]
    if sweep_size and callable(build):
        specs.append(spec.grown())
    sweep = {}
    retained, discarded = main.smallest_retained, main.largest_discarded
    for s in specs:
        r = compression_index(make(s), s, rank_tol)
        sweep[f"L={s.L},D={s.D},k={s.k}"] = r.index
        retained = min(retained, r.smallest_retained)
        discarded = max(discarded, r.largest_discarded)
    main.sweep = sweep
    main.stable = all(v == main.index for v in sweep.values())
    main.smallest_retained, main.largest_discarded = retained, discarded
    return main


def su3_rep() -> RepMatrix:
    return build_rep(omega_word(3, 2, 3), ntorus=2)


def phi_su3(rm: RepMatrix) -> RepMatrix:
    """``(ev_1 (x) 1) sigma_2 sigma_3``: contract the last two slots, then set ``t_1 = 1``."""
    if rm.n != 3 or rm.word.letters != (1, 2, 1) or rm.ntorus != 2:
        raise ValueError("expected chi_{omega_3} for n = 3, m = 2 (word 1,2,1, two torus variables)")
    out = sigma_contract(sigma_contract(rm, 2), 1)
    return out.map_entries(lambda e: e.evaluate_torus({1: 1}), ntorus=1)


def phi_path_sum(pm: PathSum) -> PathSum:
    """``phi`` on a three-slot witness written in the ``chi_{omega_3}`` layout."""
    if pm.nslots != 3 or pm.ntorus != 2:
        raise ValueError("expected a path sum on two torus variables and three slots")
    return pm.contract(2).contract(1).evaluate_torus({1: 1})


def fundamental_block_target() -> RepMatrix:
    """``diag(u, 1)`` where ``u`` is the fundamental matrix of SU_q(2) under ``chi_{s_1}``."""
    small = build_rep(ReducedWord((1,), 2), ntorus=1)
    one = PathSum.one(1, 1)
    zero = PathSum.zero(1, 1)
    entries = ((small[1, 1], small[1, 2], zero), (small[2, 1], small[2, 2], zero), (zero, zero, one))
    return RepMatrix(3, entries, ReducedWord((1,), 3), 1)


def su3_image(q: float, spec: FredholmSpec, limit: bool = False) -> SparseOp:
    """``phi(U)`` materialized as a ``3 x 3`` operator matrix.

    ``limit=True`` substitutes the ``q -> 0`` unitary in the upper block.  The
    surviving torus variable ``t_2`` enters the fundamental matrix through
    ``conj(t_2)`` on its first row, so it is realized by the shift opposite
    to the one in the displayed limit unitary.
    """
    if spec.blocks != 3:
        raise ValueError("phi(U) is a 3 x 3 operator matrix")
    two = FredholmSpec(spec.L, spec.D, spec.k, 2, spec.orientation)
    if limit:
        upper = su2_limit_unitary(two)
        one = SparseOp.identity(spec.factors)
        return SparseOp(sp.block_diag([upper.mat, one.mat], format="csr"), spec.factors, 3)
    return rep_block(phi_su3(su3_rep()), q, spec)


def _flip(spec: FredholmSpec) -> FredholmSpec:
    return FredholmSpec(spec.L, spec.D, spec.k, spec.blocks, -spec.orientation)


def su3_nontriviality(q: float, spec: FredholmSpec, rank_tol: float = 1e-6, limit: bool = False,
                      **kw) -> IndexResult:
    """Pair ``phi(U) = diag(u, 1)`` against ``F_k`` (``limit`` selects the ``q -> 0`` block)."""
    spec3 = FredholmSpec(spec.L, spec.D, spec.k, 3, spec.orientation)
    return index_pairing(lambda s: su3_image(q, s, limit), spec3, rank_tol, **kw)
