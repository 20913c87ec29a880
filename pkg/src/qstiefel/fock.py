"""Truncated Hilbert-space kernel.

Operators live on tensor products of truncated factor spaces: ``l2(N)`` cut
at ``D`` basis vectors, a window ``-L..L`` of ``l2(Z)``, the cyclic group
``Z/M`` (where the torus generator is exactly unitary) or a scalar slot.
``S`` is the backward shift, ``S e_0 = 0`` and ``S e_n = e_{n-1}``, so that
``p = 1 - S*S`` is the rank-one projection onto ``e_0``.
"""
from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

MAGNITUDE_FLOOR = 1e-14
DENSE_LIMIT = 4096


class GapViolation(ValueError):
    """An eigenvalue sits inside the annulus the caller promised was empty."""


class NotSelfAdjoint(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FactorSpace:
    kind: str
    size: int = 1
    orientation: int = 1

    def __post_init__(self):
        if self.kind == "fock" and self.size < 2:
            raise ValueError("FockTrunc needs D >= 2")
        if self.kind == "zwindow" and (self.size < 1 or self.orientation not in (1, -1)):
            raise ValueError("ZWindow needs L >= 1 and orientation +-1")
        if self.kind == "zcyclic" and self.size < 2:
            raise ValueError("ZCyclic needs M >= 2")
        if self.kind not in ("fock", "zwindow", "zcyclic", "scalar"):
            raise ValueError(f"unknown factor kind {self.kind!r}")

    @property
    def dim(self) -> int:
        if self.kind == "zwindow":
            return 2 * self.size + 1
        if self.kind == "scalar":
            return 1
        return self.size

    @property
    def is_torus(self) -> bool:
        return self.kind in ("zwindow", "zcyclic", "scalar")

    def describe(self) -> str:
        if self.kind == "zwindow":
            return f"zwindow:{self.size}:{self.orientation}"
        return f"{self.kind}:{self.size}"

    @classmethod
    def parse(cls, text: str) -> "FactorSpace":
        parts = text.split(":")
        if parts[0] == "zwindow":
            return cls("zwindow", int(parts[1]), int(parts[2]))
        return cls(parts[0], int(parts[1]))


def FockTrunc(D: int) -> FactorSpace:
    return FactorSpace("fock", D)


def ZWindow(L: int, orientation: int = 1) -> FactorSpace:
    """``l2(Z)`` restricted to ``-L..L``; the generator shifts by ``orientation``."""
    return FactorSpace("zwindow", L, orientation)


def ZCyclic(M: int) -> FactorSpace:
    return FactorSpace("zcyclic", M)


def Scalar() -> FactorSpace:
    return FactorSpace("scalar", 1)


class Atom(str, enum.Enum):
    ONE = "1"
    A = "A"          # sqrt(1 - q^{2N+2}) S
    ASTAR = "A*"     # S* sqrt(1 - q^{2N+2})
    B = "B"          # -q^{N+1}
    C = "C"          # q^N
    P = "p"          # 1 - S*S
    ZERO = "0"
    S = "S"
    SSTAR = "S*"

    def adjoint(self) -> "Atom":
        return _ADJOINT.get(self, self)


_ADJOINT = {Atom.A: Atom.ASTAR, Atom.ASTAR: Atom.A, Atom.S: Atom.SSTAR, Atom.SSTAR: Atom.S}


class SparseOp:
    """Complex sparse matrix tagged with the factor spaces it acts on.

    ``blocks > 1`` marks a ``blocks x blocks`` operator matrix over the
    tensor space, stored block-major.  Treat instances as immutable.
    """

    __slots__ = ("mat", "factors", "blocks")

    def __init__(self, mat, factors, blocks: int = 1):
        factors = tuple(factors)
        dim = int(np.prod([f.dim for f in factors], dtype=np.int64)) * blocks
        mat = sp.csr_matrix(mat, dtype=complex, copy=True)
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match factor dimension {dim}")
        mat.data[np.abs(mat.data) <= MAGNITUDE_FLOOR] = 0
        mat.eliminate_zeros()
        mat.sort_indices()
        self.mat = mat
        self.factors = factors
        self.blocks = blocks

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def space_dim(self) -> int:
        return self.dim // self.blocks

    @classmethod
    def identity(cls, factors, blocks: int = 1) -> "SparseOp":
        dim = int(np.prod([f.dim for f in factors], dtype=np.int64)) * blocks
        return cls(sp.identity(dim, dtype=complex, format="csr"), factors, blocks)

    @classmethod
    def zeros(cls, factors, blocks: int = 1) -> "SparseOp":
        dim = int(np.prod([f.dim for f in factors], dtype=np.int64)) * blocks
        return cls(sp.csr_matrix((dim, dim), dtype=complex), factors, blocks)

    def _check(self, other: "SparseOp"):
        if self.factors != other.factors or self.blocks != other.blocks:
            raise ValueError("operators act on different spaces")

    @property
    def H(self) -> "SparseOp":
        return SparseOp(self.mat.conj().T, self.factors, self.blocks)

    def __matmul__(self, other: "SparseOp") -> "SparseOp":
        self._check(other)
        return SparseOp(self.mat @ other.mat, self.factors, self.blocks)

    def __add__(self, other: "SparseOp") -> "SparseOp":
        self._check(other)
        return SparseOp(self.mat + other.mat, self.factors, self.blocks)

    def __sub__(self, other: "SparseOp") -> "SparseOp":
        self._check(other)
        return SparseOp(self.mat - other.mat, self.factors, self.blocks)

    def __neg__(self) -> "SparseOp":
        return SparseOp(-self.mat, self.factors, self.blocks)

    def __mul__(self, scalar) -> "SparseOp":
        return SparseOp(self.mat * scalar, self.factors, self.blocks)

    __rmul__ = __mul__

    def one_minus(self) -> "SparseOp":
        return SparseOp.identity(self.factors, self.blocks) - self

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()

    def compress(self, mask) -> sp.csr_matrix:
        idx = np.flatnonzero(mask)
        return self.mat[idx][:, idx]

    def equal_entries(self, other: "SparseOp") -> bool:
        self._check(other)
        return (self.mat != other.mat).nnz == 0

    def __repr__(self):
        shape = " x ".join(f.describe() for f in self.factors)
        return f"SparseOp({shape}, blocks={self.blocks}, nnz={self.mat.nnz})"


def kron(ops) -> SparseOp:
    ops = list(ops)
    if not ops:
        raise ValueError("kron of an empty list")
    if any(o.blocks != 1 for o in ops):
        raise ValueError("kron is defined for plain (non-block) operators")
    mat = ops[0].mat
    for o in ops[1:]:
        mat = sp.kron(mat, o.mat, format="csr")
    return SparseOp(mat, [f for o in ops for f in o.factors])


def block(rows) -> SparseOp:
    """Assemble an operator matrix from a square grid of SparseOp (None = 0)."""
    nb = len(rows)
    ref = next(o for row in rows for o in row if o is not None)
    grid = [[None if o is None else o.mat for o in row] for row in rows]
    for i in range(nb):
        if grid[i][i] is None:
            grid[i][i] = sp.csr_matrix((ref.dim, ref.dim), dtype=complex)
    return SparseOp(sp.bmat(grid, format="csr"), ref.factors, nb)


def block_diag(ops) -> SparseOp:
    ops = list(ops)
    return block([[o if i == j else None for j in range(len(ops))] for i, o in enumerate(ops)])


def _fock_index(D):
    return np.arange(D, dtype=float)


@lru_cache(maxsize=512)
def _atom_csr(atom: Atom, q: float, D: int) -> sp.csr_matrix:
    n = _fock_index(D)
    if atom is Atom.ONE:
        return sp.identity(D, dtype=complex, format="csr")
    if atom is Atom.ZERO:
        return sp.csr_matrix((D, D), dtype=complex)
    if atom is Atom.C:
        return sp.diags(q ** n).astype(complex).tocsr()
    if atom is Atom.B:
        return sp.diags(-(q ** (n + 1))).astype(complex).tocsr()
    if atom is Atom.P:
        return sp.csr_matrix(([1.0 + 0j], ([0], [0])), shape=(D, D))
    if atom is Atom.S:
        return sp.diags(np.ones(D - 1), 1).astype(complex).tocsr()
    if atom is Atom.SSTAR:
        return sp.diags(np.ones(D - 1), -1).astype(complex).tocsr()
    if atom is Atom.A:
        # A e_n = sqrt(1 - q^{2n}) e_{n-1}
        return sp.diags(np.sqrt(1.0 - q ** (2 * n[1:])), 1).astype(complex).tocsr()
    if atom is Atom.ASTAR:
        return _atom_csr(Atom.A, q, D).T.conj().tocsr()
    raise ValueError(f"unknown atom {atom!r}")


def atom_matrix(atom: Atom, q: float, f: FactorSpace) -> SparseOp:
    if f.kind != "fock":
        if atom is Atom.ONE:
            return SparseOp.identity([f])
        raise ValueError(f"atom {atom.value} needs a FockTrunc factor, got {f.kind}")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    return SparseOp(_atom_csr(Atom(atom), float(q), f.size), [f])


def fock_diag(values, f: FactorSpace) -> SparseOp:
    """Diagonal operator ``g(N)`` on a Fock factor from ``values[n] = g(n)``."""
    return SparseOp(sp.diags(np.asarray(values, dtype=complex)), [f])


def torus_matrix(f: FactorSpace, power: int = 1, t: complex | None = None) -> SparseOp:
    """The torus generator raised to an integer power on factor ``f``."""
    if f.kind == "scalar":
        if t is None:
            raise ValueError("scalar torus slot needs a sampled value t")
        return SparseOp(sp.csr_matrix([[complex(t) ** power]]), [f])
    if f.kind == "zcyclic":
        M = f.size
        idx = np.arange(M)
        mat = sp.csr_matrix((np.ones(M, dtype=complex), ((idx + power) % M, idx)), shape=(M, M))
        return SparseOp(mat, [f])
    if f.kind == "zwindow":
        shift = f.orientation * power
        dim = f.dim
        return SparseOp(sp.eye(dim, dim, k=-shift, dtype=complex, format="csr"), [f])
    raise ValueError(f"torus generator needs a torus factor, got {f.kind}")


def interior_mask(factors, depth: int = 1, blocks: int = 1) -> np.ndarray:
    """Basis vectors at distance > ``depth`` from every truncation edge."""
    masks = []
    for f in factors:
        if f.kind == "fock":
            masks.append(np.arange(f.size) <= f.size - 1 - depth)
        elif f.kind == "zwindow":
            masks.append(np.abs(np.arange(-f.size, f.size + 1)) <= f.size - depth)
        else:
            masks.append(np.ones(f.dim, dtype=bool))
    mask = masks[0]
    for m in masks[1:]:
        mask = np.logical_and.outer(mask, m).ravel()
    return np.tile(mask, blocks)


def norm_bound(mat) -> float:
    """Upper bound on the operator norm: ``min(||X||_F, sqrt(||X||_1 ||X||_inf))``."""
    if isinstance(mat, SparseOp):
        mat = mat.mat
    mat = sp.csr_matrix(mat)
    if mat.nnz == 0:
        return 0.0
    absm = abs(mat)
    fro = float(np.sqrt((absm.multiply(absm)).sum()))
    one = float(absm.sum(axis=0).max())
    inf = float(absm.sum(axis=1).max())
    return min(fro, float(np.sqrt(one * inf)))


def interior_residual(op: SparseOp, depth: int = 1) -> float:
    return norm_bound(op.compress(interior_mask(op.factors, depth, op.blocks)))


def op_norm(a: SparseOp, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by Lanczos iteration on ``a* a``.

    The Krylov space starts from the normalized all-ones vector, so the
    result is deterministic.  Plain power iteration stalls on the clustered
    top singular values of the truncated atoms (spacing ``~q^{2D}``).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mat = a.mat if isinstance(a, SparseOp) else sp.csr_matrix(a)
    if mat.nnz == 0:
        return 0.0
    dim = mat.shape[1]
    gram = (mat.conj().T @ mat).tocsr()
    if dim <= 2:
        return float(np.sqrt(max(np.linalg.eigvalsh(gram.toarray())[-1], 0.0)))
    v0 = np.ones(dim, dtype=complex) / np.sqrt(dim)
    try:
        lam = eigsh(gram, k=1, which="LA", v0=v0, tol=tol * 1e-2, maxiter=max_iter,
                    return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos iteration did not converge in {max_iter} steps") from exc
    return float(np.sqrt(max(lam[0].real, 0.0)))


def component_stacks(mat: sp.csr_matrix):
    """Split ``mat`` into the diagonal blocks of its connected components.

    Yields ``(index, stack)`` per component size: ``index`` is a
    ``(count, size)`` array of basis indices and ``stack`` the matching
    ``(count, size, size)`` dense blocks.
    """
    mat = sp.csr_matrix(mat)
    pattern = (abs(mat) + abs(mat.T)).tocsr()
    ncomp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=ncomp)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    pos = np.empty(len(labels), dtype=np.int64)
    pos[order] = np.arange(len(labels)) - starts[labels[order]]
    coo = mat.tocoo()
    for size in np.unique(sizes):
        if size > DENSE_LIMIT:
            raise ValueError(f"component of size {size} exceeds dense limit {DENSE_LIMIT}")
        comps = np.flatnonzero(sizes == size)
        slot = np.full(ncomp, -1, dtype=np.int64)
        slot[comps] = np.arange(len(comps))
        index = np.empty((len(comps), size), dtype=np.int64)
        members = order[np.isin(labels[order], comps)]
        index[slot[labels[members]], pos[members]] = members
        stack = np.zeros((len(comps), size, size), dtype=complex)
        sel = slot[labels[coo.row]] >= 0
        r, c = coo.row[sel], coo.col[sel]
        stack[slot[labels[r]], pos[r], pos[c]] = coo.data[sel]
        yield index, stack


def _scatter(index, blocks, shape):
    """Assemble per-component dense blocks back into a sparse matrix."""
    rows = np.repeat(index[:, :, None], index.shape[1], axis=2)
    cols = np.repeat(index[:, None, :], index.shape[1], axis=1)
    keep = np.abs(blocks) > MAGNITUDE_FLOOR
    return sp.csr_matrix((blocks[keep], (rows[keep], cols[keep])), shape=shape)


def spectral_projection_one(a: SparseOp, gap: float, sa_tol: float = 1e-10,
                            delta: float = 1e-9) -> SparseOp:
    """Projection onto the eigenvalue-1 eigenspace of a self-adjoint ``a``.

    The caller promises that ``a`` has no spectrum in ``(1 - gap, 1)``.
    Eigenvalues with ``|lam - 1| <= gap/2`` are kept; any eigenvalue with
    ``delta < |lam - 1| < gap - delta`` raises :class:`GapViolation`.
    The matrix is split into connected components of its sparsity graph and
    each component is diagonalized densely.
    """
    if not 0 < gap <= 1:
        raise ValueError("gap must lie in (0, 1]")
    scale = max(1.0, norm_bound(a))
    if norm_bound(a.mat - a.mat.conj().T) > sa_tol * scale:
        raise NotSelfAdjoint("spectral projection needs a self-adjoint operator")
    out = sp.csr_matrix(a.mat.shape, dtype=complex)
    for index, stack in component_stacks(a.mat):
        stack = 0.5 * (stack + np.conj(np.swapaxes(stack, 1, 2)))
        lam, vec = np.linalg.eigh(stack)
        dist = np.abs(lam - 1.0)
        bad = (dist > delta) & (dist < gap - delta)
        if bad.any():
            raise GapViolation(f"eigenvalue {float(lam[bad][0])!r} inside the forbidden annulus")
        keep = (dist <= gap / 2).astype(float)
        proj = np.einsum("cik,ck,cjk->cij", vec, keep, vec.conj())
        out = out + _scatter(index, proj, a.mat.shape)
    return SparseOp(out, a.factors, a.blocks)


def unitary_calculus(u: SparseOp, funcs) -> list[SparseOp]:
    """Apply real functions of the angle ``theta in [0, 1)`` to a unitary.

    ``u = sum exp(2 pi i theta) E_theta`` is diagonalized per connected
    component by a complex Schur decomposition (diagonal for normal input).
    """
    outs = [sp.csr_matrix(u.mat.shape, dtype=complex) for _ in funcs]
    for index, stack in component_stacks(u.mat):
        for c in range(len(stack)):
            T, Z = scipy.linalg.schur(stack[c], output="complex")
            stack[c] = Z
            index_theta = np.mod(np.angle(np.diag(T)) / (2 * np.pi), 1.0)
            if c == 0:
                thetas = np.empty((len(stack), stack.shape[1]))
            thetas[c] = index_theta
        for i, f in enumerate(funcs):
            vals = np.asarray(f(thetas), dtype=float)
            blocks = np.einsum("cik,ck,cjk->cij", stack, vals, stack.conj())
            outs[i] = outs[i] + _scatter(index, blocks, u.mat.shape)
    return [SparseOp(m, u.factors, u.blocks) for m in outs]


def dump_op(op: SparseOp, path) -> None:
    """Binary dump: length-prefixed JSON header, then ``<qqdd`` records (row, col, re, im)."""
    coo = op.mat.tocoo()
    header = json.dumps({"factors": [f.describe() for f in op.factors], "blocks": op.blocks,
                         "nnz": int(coo.nnz)}).encode()
    with open(Path(path), "wb") as fh:
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        rec = np.empty(coo.nnz, dtype=[("r", "<i8"), ("c", "<i8"), ("re", "<f8"), ("im", "<f8")])
        rec["r"], rec["c"] = coo.row, coo.col
        rec["re"], rec["im"] = coo.data.real, coo.data.imag
        fh.write(rec.tobytes())


def load_op(path) -> SparseOp:
    with open(Path(path), "rb") as fh:
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen))
        rec = np.frombuffer(fh.read(), dtype=[("r", "<i8"), ("c", "<i8"), ("re", "<f8"), ("im", "<f8")])
    factors = [FactorSpace.parse(s) for s in header["factors"]]
    dim = int(np.prod([f.dim for f in factors])) * header["blocks"]
    mat = sp.csr_matrix((rec["re"] + 1j * rec["im"], (rec["r"], rec["c"])), shape=(dim, dim))
    return SparseOp(mat, factors, header["blocks"])
