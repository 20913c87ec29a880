"""K-theory witness operators for the quantum Stiefel algebras C(S_q^{n,2}).

Witnesses are written twice where possible: once as an explicit tensor
formula (a :class:`PathSum`, so slot contractions can be checked
symbolically) and once from generator images through the spectral
projection ``1_{1}``.  Tensor layout follows the word representation
``chi_{omega_k}``: two torus factors, ``n-2`` Fock slots for
``omega_{n-2,1}``, then ``k-1`` slots for ``omega_{n-1,n-k+1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coxeter import omega_block, omega_word
from .fock import (Atom, FactorSpace, GapViolation, NotSelfAdjoint, SparseOp, block, interior_residual,
                   component_stacks, norm_bound, spectral_projection_one,
                   unitary_calculus)
from .symrep import PathSum, build_rep, materialize, materialize_rep, rep_shape

KINDS = ("unitary", "isometry", "coisometry", "projection", "operator")


@dataclass
class KWitness:
    name: str
    operator: SparseOp
    kind: str
    provenance: str
    symbol: PathSum | None = None
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown witness kind {self.kind!r}")
        if not self.residuals:
            self.residuals = kind_residuals(self.operator, self.kind)

    def passes(self, tol: float = 1e-9) -> bool:
        return all(v <= tol for v in self.residuals.values())

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "provenance": self.provenance,
                "shape": [f.describe() for f in self.operator.factors],
                "blocks": self.operator.blocks, "residuals": self.residuals}


def kind_residuals(op: SparseOp, kind: str, depth: int = 1) -> dict:
    """Defining residuals of a unitary/isometry/coisometry/projection on the interior."""
    one = SparseOp.identity(op.factors, op.blocks)
    out = {}
    if kind in ("unitary", "isometry"):
        out["W*W-1"] = interior_residual(op.H @ op - one, depth)
    if kind in ("unitary", "coisometry"):
        out["WW*-1"] = interior_residual(op @ op.H - one, depth)
    if kind == "projection":
        out["W^2-W"] = interior_residual(op @ op - op, depth)
        out["W-W*"] = interior_residual(op - op.H, depth)
    return out


class Layout:
    """Factor shape shared by the witnesses of one representation.

    Either ``torus`` (a ZCyclic or ZWindow factor used for both torus
    variables) or ``t`` (two sampled unit scalars) must be given.
    """

    def __init__(self, q: float, D: int, nslots: int, torus: FactorSpace | None = None, t=None):
        if (torus is None) == (t is None):
            raise ValueError("give exactly one of torus or t")
        self.q, self.D, self.nslots, self.torus = q, D, nslots, torus
        self.t = None if t is None else tuple(complex(x) for x in t)
        self.shape = rep_shape(nslots, 0 if torus is None else 2, D, torus)

    def op(self, pm: PathSum) -> SparseOp:
        if pm.nslots != self.nslots or pm.ntorus != 2:
            raise ValueError("path sum does not match the layout")
        return materialize(pm, self.q, self.shape, self.t)

    def rep(self, rm) -> dict:
        return materialize_rep(rm, self.q, self.D, self.torus, self.t)

    def identity(self) -> SparseOp:
        return SparseOp.identity(self.shape)


def tensor_term(texp, atoms) -> PathSum:
    return PathSum.monomial(tuple(Atom(a) for a in atoms), tuple(texp))


def switched_unitary(texp, atoms) -> PathSum:
    """``t^texp (x) Q + 1 - 1 (x) Q`` for the elementary projection tensor ``Q``."""
    nslots = len(atoms)
    mono = tensor_term(texp, atoms)
    return mono + PathSum.one(nslots, len(texp)) - tensor_term((0,) * len(texp), atoms)


def _p(r):
    return [Atom.P] * r


def _one(r):
    return [Atom.ONE] * r


T1, T2, T12 = (1, 0), (0, 1), (1, 1)


def direct_symbol(name: str, n: int, k: int) -> PathSum:
    """Tensor formulas of ``U_k, V_k, u_k, v_k`` on ``2 + (n-2) + (k-1)`` factors."""
    if name == "U":
        return switched_unitary(T1, _one(n - 2) + _p(k - 1))
    if name == "V":
        return switched_unitary(T2, _p(n - 2) + _one(k - 1))
    if name == "u":
        return switched_unitary(T1, _p(n - 2) + _p(k - 1))
    if name == "v":
        return switched_unitary(T2, _p(n - 2) + _p(k - 1))
    raise ValueError(f"unknown unitary {name!r}")


def switch(op: SparseOp, proj: SparseOp) -> SparseOp:
    """``E op + 1 - E``."""
    return proj @ op + proj.one_minus()


def membership_operator(name: str, gens: dict, n: int, k: int, gap: float) -> SparseOp:
    """The algebra-internal expression of ``U_k, V_k, u_k, v_k`` via ``1_{1}``."""
    a = gens[n, n - k + 1]
    b = gens[n - 1, 1]
    if name == "U":
        return switch(a, spectral_projection_one(a @ a.H, gap))
    if name == "V":
        return switch(b, spectral_projection_one(b @ b.H, gap))
    proj = spectral_projection_one(a @ a.H @ b @ b.H, gap)
    return switch(a if name == "u" else b, proj)


@dataclass
class DualWitness:
    """A witness built from its tensor formula and from generator images."""

    name: str
    direct: KWitness
    internal: KWitness | None
    agreement: float | None
    error: str | None = None

    def passes(self, tol: float = 1e-9) -> bool:
        return (self.internal is not None and self.agreement is not None
                and self.agreement <= tol and self.direct.passes(tol) and self.internal.passes(tol))

    def to_dict(self) -> dict:
        return {"name": self.name, "direct": self.direct.to_dict(),
                "internal": None if self.internal is None else self.internal.to_dict(),
                "agreement": self.agreement, "error": self.error}


def build_k_unitaries(n: int, k: int, q: float, D: int, torus: FactorSpace | None = None,
                      t=None, gap: float | None = None) -> dict:
    """``U_k, V_k, u_k, v_k`` on ``chi_{omega_k}`` (m = 2), each built two ways."""
    if not 1 <= k <= n or n < 3:
        raise ValueError(f"need n >= 3 and 1 <= k <= n, got n={n}, k={k}")
    gap = 1 - q * q if gap is None else gap
    rm = build_rep(omega_word(n, 2, k), ntorus=2)
    lay = Layout(q, D, len(rm.word), torus, t)
    gens = lay.rep(rm)
    out = {}
    for name in ("U", "V", "u", "v"):
        sym = direct_symbol(name, n, k)
        direct = KWitness(f"{name}_{k}", lay.op(sym), "unitary", "direct-formula", sym)
        try:
            mem = membership_operator(name, gens, n, k, gap)
        except (GapViolation, NotSelfAdjoint) as exc:
            out[name] = DualWitness(name, direct, None, None, f"{type(exc).__name__}: {exc}")
            continue
        internal = KWitness(f"{name}_{k}", mem, "unitary", "algebra-internal")
        out[name] = DualWitness(name, direct, internal, interior_residual(mem - direct.operator, 1))
    return out


def full_layout(n: int, q: float, D: int, torus=None, t=None):
    rm = build_rep(omega_word(n, 2, n), ntorus=2)
    return rm, Layout(q, D, len(rm.word), torus, t)


def zn_symbol(n: int) -> PathSum:
    """``Z_n = t_1 (x) 1_{n-2} (x) p_{n-2} (x) S*``."""
    return tensor_term(T1, _one(n - 2) + _p(n - 2) + [Atom.SSTAR])


def yn_symbol(n: int) -> PathSum:
    q_sym = tensor_term((0, 0), _one(n - 2) + _p(n - 2) + [Atom.ONE])
    return zn_symbol(n) + PathSum.one(2 * n - 3, 2) - q_sym


@dataclass
class ZYResult:
    Z: KWitness
    Y: KWitness
    checks: dict

    def to_dict(self):
        return {"Z": self.Z.to_dict(), "Y": self.Y.to_dict(), "checks": self.checks}


def build_Zn_Yn(n: int, q: float, D: int, torus=None, t=None) -> ZYResult:
    """``Z_n`` and the isometry ``Y_n``, with their algebra-internal construction.

    ``Z~ = t_1 (x) 1_{n-2} (x) (q^N)^{(x)(n-2)} (x) S*`` is compressed by
    ``1_{1}(Z~* Z~)``; the range projection of ``Y_n`` is compared with
    ``1 - 1_{1}(chi(u_n1* u_n1))``.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    rm, lay = full_layout(n, q, D, torus, t)
    gens = lay.rep(rm)
    gap = 1 - q * q
    z = lay.op(zn_symbol(n))
    y = lay.op(yn_symbol(n))
    one = lay.identity()
    qproj = lay.op(tensor_term((0, 0), _one(n - 2) + _p(n - 2) + [Atom.ONE]))
    ztil = lay.op(tensor_term(T1, _one(n - 2) + [Atom.C] * (n - 2) + [Atom.SSTAR]))
    z_int = spectral_projection_one(ztil.H @ ztil, gap) @ ztil
    y_int = z_int + one - z_int.H @ z_int
    u_n1 = gens[n, 1]
    range_proj = spectral_projection_one(u_n1.H @ u_n1, gap).one_minus()
    p_last = lay.op(tensor_term((0, 0), _one(n - 2) + _p(n - 1)))
    checks = {
        "Z=Y(1x1xpx1)": norm_bound(z - y @ qproj),
        "Z internal": interior_residual(z_int - z, 1),
        "Y internal": interior_residual(y_int - y, 2),
        "YY*=1-1_{1}(u_n1*u_n1)": interior_residual(y @ y.H - range_proj, 1),
        "1-YY*=1x1xp_{n-1}": interior_residual(y @ y.H - p_last.one_minus(), 1),
    }
    return ZYResult(KWitness("Z_n", z, "operator", "direct-formula", zn_symbol(n)),
                    KWitness("Y_n", y, "isometry", "direct-formula", yn_symbol(n)), checks)


def coisometry_word(n: int):
    return omega_block(n - 1, 1, n) + omega_block(n - 1, 2, n)


def x_symbol(n: int) -> PathSum:
    """``X~ = Z + 1 - ZZ*`` with ``Z = t_2 (x) S (x) p_{n-2} (x) 1_{n-2}``."""
    zsym = tensor_term(T2, [Atom.S] + _p(n - 2) + _one(n - 2))
    return zsym + PathSum.one(2 * n - 3, 2) - zsym @ zsym.adjoint()


@dataclass
class CoisometryResult:
    X: KWitness
    checks: dict
    symbolic: dict

    def to_dict(self):
        return {"X": self.X.to_dict(), "checks": self.checks, "symbolic": self.symbolic}


def build_coisometry_X(n: int, q: float, D: int, torus=None, t=None) -> CoisometryResult:
    """The coisometry ``X~`` in the ``chi_{omega_{n-1,1}} * pi_{omega_{n-1,2}}`` picture.

    Besides the coisometry residuals this records the identities used to
    place ``X~`` inside the algebra: the minus-sign combination
    ``u_{n-1,1}* u_{n-1,1} - q^2 u_n1* u_n1``, the combination with a plus
    sign (the one that yields ``q^{2N}`` factors), and the compression of
    ``u_{n-1,1}``.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    rm = build_rep(coisometry_word(n), ntorus=2)
    lay = Layout(q, D, len(rm.word), torus, t)
    gens = lay.rep(rm)
    xsym = x_symbol(n)
    x = lay.op(xsym)
    b, a = gens[n - 1, 1], gens[n, 1]
    diag_target = lay.op(tensor_term((0, 0), [Atom.ONE] + [Atom.C] * (n - 2) + _one(n - 2)))
    diag_target = diag_target @ diag_target
    cut = lay.op(tensor_term((0, 0), [Atom.ONE] + _p(n - 2) + _one(n - 2)))
    y_target = lay.op(tensor_term(T2, [Atom.A] + _p(n - 2) + _one(n - 2)))
    kernel_proj = lay.op(tensor_term((0, 0), _p(n - 1) + _one(n - 2)))
    gap = 1 - q * q
    checks = {
        "XX*=1": interior_residual(x @ x.H - lay.identity(), 1),
        "X*X=1-1xp_{n-1}x1": interior_residual(x.H @ x - kernel_proj.one_minus(), 1),
        "X*X=1-1_{1}(u_n1*u_n1)": interior_residual(
            x.H @ x - spectral_projection_one(a.H @ a, gap).one_minus(), 1),
        "minus form: b*b-q^2 a*a = 1x1x(q^2N)x1": interior_residual(b.H @ b - (a.H @ a) * (q * q) - diag_target, 1),
        "b*b+a*a = 1x1x(q^2N)x1": interior_residual(b.H @ b + a.H @ a - diag_target, 1),
        "1_{1}(b*b+a*a) = 1x1xp_{n-2}x1": interior_residual(
            spectral_projection_one(b.H @ b + a.H @ a, gap) - cut, 1),
        "(1x1xp_{n-2}x1)b = t2xAxp_{n-2}x1": interior_residual(cut @ b - y_target, 1),
    }
    contracted = xsym.contract(0)
    v_prev = switched_unitary(T2, _p(n - 2) + _one(n - 2))
    symbolic = {"sigma(X) = V_{n-1}": contracted == v_prev}
    return CoisometryResult(KWitness("X", x, "coisometry", "direct-formula", xsym), checks, symbolic)


def r_symbol(n: int) -> PathSum:
    return tensor_term(T12, _p(n - 2) + _p(n - 2) + [Atom.ONE])


def sn_symbol(n: int) -> PathSum:
    r = r_symbol(n)
    return r + PathSum.one(2 * n - 3, 2) - r @ r.adjoint()


def tn_symbol(n: int) -> PathSum:
    qsym = tensor_term((0, 0), _p(n - 2) + _p(n - 2) + [Atom.ONE])
    return qsym @ zn_symbol(n) + PathSum.one(2 * n - 3, 2) - qsym


def corollary_symbol(n: int) -> PathSum:
    """``t_1 t_2 (x) p_{n-2} (x) p_{n-1} + 1 - 1 (x) p_{n-2} (x) p_{n-1}``."""
    return switched_unitary(T12, _p(n - 2) + _p(n - 1))


@dataclass
class STResult:
    R: KWitness
    S: KWitness
    T: KWitness
    checks: dict
    certificate: dict
    symbolic: dict

    def to_dict(self):
        return {"R": self.R.to_dict(), "S": self.S.to_dict(), "T": self.T.to_dict(),
                "checks": self.checks, "certificate": self.certificate, "symbolic": self.symbolic}


def level_certificate(diff: SparseOp, q: float, D: int) -> dict:
    """Compare entries of ``diff`` with ``q^{2j+2}``, ``j`` the last Fock index of the column.

    Returns the worst ratio ``|entry| / q^{2j+2}`` and per-level maxima.
    """
    coo = diff.mat.tocoo()
    j = coo.col % D
    levels = {}
    worst = 0.0
    for lvl in range(D):
        sel = j == lvl
        top = float(np.abs(coo.data[sel]).max()) if sel.any() else 0.0
        levels[lvl] = top
        worst = max(worst, top / q ** (2 * lvl + 2))
    return {"levels": levels, "worst_ratio": worst, "holds": worst <= 1.0}


def build_Sn_Tn(n: int, q: float, D: int, torus=None, t=None) -> STResult:
    """``R_n, S_n, T_n``, the corollary identity and the compactness certificate."""
    if n < 3:
        raise ValueError("need n >= 3")
    rm, lay = full_layout(n, q, D, torus, t)
    gens = lay.rep(rm)
    r, s, tt = lay.op(r_symbol(n)), lay.op(sn_symbol(n)), lay.op(tn_symbol(n))
    wit = corollary_witness(s, tt)
    target = lay.op(corollary_symbol(n))
    zchi = lay.op(zn_symbol(n)) @ gens[n - 1, 1]
    naive = lay.op(tensor_term(T12, _p(n - 2) + _p(n - 2) + [Atom.ONE]))
    sqrt_diag = np.sqrt(1 - q ** (2 * np.arange(D) + 2))
    naive = naive @ _last_slot_diag(lay, sqrt_diag)
    diff = r - zchi
    checks = {
        "ST=TS": interior_residual(s @ tt - tt @ s, 1),
        "corollary identity": interior_residual(wit - target, 1),
        "naive Z_n chi(u_{n-1,1})": interior_residual(zchi - naive, 1),
    }
    certificate = level_certificate(diff, q, D)
    prev_u = switched_unitary(T1, _p(n - 2) + _p(n - 2))
    prev_v = switched_unitary(T2, _p(n - 2) + _p(n - 2))
    last = 2 * n - 4
    symbolic = {
        "sigma(S_n) = u_{n-1} v_{n-1}": sn_symbol(n).contract(last) == prev_u @ prev_v,
        "sigma(T_n) = u_{n-1}": tn_symbol(n).contract(last) == prev_u,
        "S_n T_n = T_n S_n": sn_symbol(n) @ tn_symbol(n) == tn_symbol(n) @ sn_symbol(n),
    }
    return STResult(KWitness("R_n", r, "operator", "direct-formula", r_symbol(n)),
                    KWitness("S_n", s, "unitary", "direct-formula", sn_symbol(n)),
                    KWitness("T_n", tt, "isometry", "direct-formula", tn_symbol(n)),
                    checks, certificate, symbolic)


def _last_slot_diag(lay: Layout, values) -> SparseOp:
    from .fock import fock_diag, kron

    parts = [SparseOp.identity([f]) for f in lay.shape[:-1]]
    return kron(parts + [fock_diag(values, lay.shape[-1])])


def corollary_witness(x: SparseOp, y: SparseOp, check: bool = False, tol: float = 1e-10) -> SparseOp:
    """``X(1 - YY*) + YY*``; with ``check`` the input kinds are validated on the interior."""
    yy = y @ y.H
    if check:
        one = SparseOp.identity(y.factors, y.blocks)
        if interior_residual(y.H @ y - one, 1) > tol:
            raise ValueError("Y is not an isometry")
        if interior_residual(x @ x.H - one, 1) > tol:
            raise ValueError("X is neither unitary nor a coisometry")
    return x @ yy.one_minus() + yy


def tent(theta):
    theta = np.asarray(theta, dtype=float)
    return np.where(theta <= 0.5, 2 * theta, 2 - 2 * theta)


def _g(theta):
    f = tent(theta)
    return np.where(np.asarray(theta) <= 0.5, np.sqrt(np.clip(f - f * f, 0, None)), 0.0)


def _h(theta):
    f = tent(theta)
    return np.where(np.asarray(theta) >= 0.5, np.sqrt(np.clip(f - f * f, 0, None)), 0.0)


def bott_projection(u: SparseOp, v: SparseOp, tol: float = 1e-10) -> SparseOp:
    """``e(U,V) = [[f(U), g(U) + h(U)V], [g(U) + V*h(U), 1 - f(U)]]`` for commuting unitaries."""
    one = SparseOp.identity(u.factors, u.blocks)
    for name, w in (("U", u), ("V", v)):
        if norm_bound(w.H @ w - one) > tol or norm_bound(w @ w.H - one) > tol:
            raise ValueError(f"{name} is not unitary")
    if norm_bound(u @ v - v @ u) > tol:
        raise ValueError("U and V do not commute")
    return bott_matrix(u, v)


def bott_matrix(u: SparseOp, v: SparseOp) -> SparseOp:
    """The block matrix of :func:`bott_projection` without input validation."""
    f, g, h = unitary_calculus(u, [tent, _g, _h])
    off = g + h @ v
    return block([[f, off], [g + v.H @ h, f.one_minus()]])


def bott_base(factors) -> SparseOp:
    """``e_0 = diag(1, 0)``."""
    one = SparseOp.identity(factors)
    return block([[one, None], [None, one * 0]])


def projection_rank(e: SparseOp) -> int:
    """Rank by counting eigenvalues above one half (dense, per sparsity component)."""
    total = 0
    for _, stack in component_stacks(e.mat):
        lam = np.linalg.eigvalsh(0.5 * (stack + np.conj(np.swapaxes(stack, 1, 2))))
        total += int((lam > 0.5).sum())
    return total
