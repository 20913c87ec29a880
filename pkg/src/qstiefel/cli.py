"""Command-line driver: run verification suites and write JSON reports."""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import coxeter as cx
from . import fredholm as fr
from . import ktheory as kt
from . import relations as rel
from .fock import Scalar, SparseOp, ZCyclic, block_diag, kron, norm_bound, torus_matrix
from .symrep import build_rep, elementary_rep

SCHEMA_VERSION = 1
SUITES = ("coxeter", "relations", "factorization", "killing", "kwitness", "bott", "corollary", "index")
MEMORY_BUDGET = 2 ** 22
UNITARIES = ("su2-limit", "su2-q", "t-p", "tbar-p", "su3-fundamental")


class SchemaMismatch(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 3
    m: int = 2
    q: list = field(default_factory=lambda: [0.5])
    D: int = 12
    L: int = 24
    M: int = 8
    k: list = field(default_factory=lambda: [0])
    tol: dict = field(default_factory=dict)
    suites: list = field(default_factory=lambda: list(SUITES))
    out: str | None = None
    seed: int = rel.DEFAULT_SEED
    rank_tol: float = 1e-6

    def validate(self):
        if any(not 0 < q < 1 for q in self.q):
            raise ValueError("every q must lie in (0, 1)")
        if not 3 <= self.n <= 4:
            raise ValueError("n must be 3 or 4")
        if self.m != 2:
            raise ValueError("only m = 2 is supported")
        if self.D < 4 or self.M < 2 or self.L < 5:
            raise ValueError("need D >= 4, M >= 2, L >= 5")
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ValueError(f"unknown suites {sorted(unknown)}")
        return self

    def largest_space(self) -> int:
        """Dimension of the biggest tensor space the selected suites build."""
        slots = 2 * self.n - 3
        torus = self.M ** 2 if self.n == 3 else 1
        return max(torus * self.D ** slots, 3 * (2 * (self.L + 4) + 1) * (self.D + 4))

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tol.get(key, default))


@dataclass
class Check:
    name: str
    suite: str
    anchor: str
    passed: bool
    details: dict
    wall_time: float = 0.0


@dataclass
class Report:
    config: dict
    checks: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, timings: bool = True) -> dict:
        checks = []
        for c in self.checks:
            d = asdict(c)
            if not timings:
                d.pop("wall_time")
            checks.append(d)
        return {"schema_version": self.schema_version, "config": self.config, "passed": self.passed,
                "summary": {"total": len(self.checks), "failed": sum(not c.passed for c in self.checks)},
                "checks": checks}

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(_jsonable(self.to_dict(timings)), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if np.isfinite(val) else str(val)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class _Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.checks = []

    def run(self, suite, name, anchor, fn):
        start = time.perf_counter()
        try:
            passed, details = fn()
        except Exception as exc:  # a failing check is reported, not raised
            passed, details = False, {"error": f"{type(exc).__name__}: {exc}"}
        self.checks.append(Check(name, suite, anchor, bool(passed), _jsonable(details),
                                 time.perf_counter() - start))

    def torus_args(self, n):
        """ZCyclic torus for n = 3; two seeded unit scalars otherwise."""
        if n == 3:
            return {"torus": ZCyclic(self.cfg.M)}
        samples = rel.unitary_samples(3, self.cfg.seed)
        return {"t": samples[-2:]}


def _report_check(rep: rel.ResidualReport):
    return rep.passed, rep.to_dict()


def suite_coxeter(r: _Runner):
    def cosets():
        bad = 0
        for n in (4, 5):
            for p in cx.all_perms(n):
                best = min(cx.coset(p, n, 2), key=cx.perm_length)
                bad += cx.coset_min_rep(p, n, 2) != best
        return bad == 0, {"mismatches": bad}

    def braid():
        out = {}
        for n in (3, 4, 5):
            lhs = cx.omega_block(n - 2, 1, n) + cx.omega_block(n - 1, 1, n)
            rhs = cx.omega_block(n - 1, 1, n) + cx.omega_block(n - 1, 2, n)
            out[str(n)] = cx.braid_equal(lhs, rhs)
        return all(out.values()), out

    def reduced():
        out = {str(n): cx.omega_word(n, 2, n).reduced for n in range(3, 6)}
        return all(out.values()), out

    def subwords():
        words = [cx.ReducedWord(w, 4) for L in range(4) for w in itertools.product((1, 2, 3), repeat=L)]
        bad = sum(cx.is_scattered_subword(a, b) != _subsequence_dp(a.letters, b.letters)
                  for a in words for b in words)
        return bad == 0, {"pairs": len(words) ** 2, "mismatches": bad}

    r.run("coxeter", "coset minimal representatives (S4, S5, m=2)", "minimal coset representatives", cosets)
    r.run("coxeter", "braid lemma n=3,4,5", "braid lemma for omega words", braid)
    r.run("coxeter", "omega_n reduced n=3..5", "omega words", reduced)
    r.run("coxeter", "scattered subwords vs DP oracle", "subword factorization remark", subwords)


def _subsequence_dp(a, b) -> bool:
    table = [[False] * (len(b) + 1) for _ in range(len(a) + 1)]
    for j in range(len(b) + 1):
        table[0][j] = True
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i][j] = table[i][j - 1] or (a[i - 1] == b[j - 1] and table[i - 1][j - 1])
    return table[len(a)][len(b)]


def suite_relations(r: _Runner):
    cfg = r.cfg
    for q in cfg.q:
        tol = cfg.tolerance("unitarity", rel.truncation_tolerance(q, cfg.D))
        for n in range(2, cfg.n + 1):
            for i in range(1, n):
                r.run("relations", f"unitarity pi_s{i} n={n} q={q}", "unitarity relations",
                      lambda n=n, i=i: _report_check(rel.check_unitarity(elementary_rep(i, n), q, cfg.D, tol=tol)))
        for n in range(3, cfg.n + 1):
            rm = build_rep(cx.omega_word(n, 2, n), ntorus=2)
            r.run("relations", f"unitarity chi_omega_n n={n} q={q}", "unitarity relations",
                  lambda rm=rm, n=n: _report_check(rel.check_unitarity(rm, q, cfg.D, tol=tol, **r.torus_args(n))))
        det_tol = cfg.tolerance("determinant", 1e-8)
        r.run("relations", f"q-determinant pi_s1 n=2 q={q}", "q-determinant relation",
              lambda: _report_check(rel.check_determinant(elementary_rep(1, 2), q, cfg.D, tol=det_tol)))
        rm3 = build_rep(cx.omega_word(3, 2, 3), ntorus=2)
        d3 = min(cfg.D, 8)
        r.run("relations", f"q-determinant chi_omega_3 q={q} D={d3}", "q-determinant relation",
              lambda: _report_check(rel.check_determinant(rm3, q, d3, tol=det_tol, torus=ZCyclic(min(cfg.M, 4)))))
        for k in range(1, cfg.n):
            r.run("relations", f"compact ideal identity n={cfg.n} k={k} q={q}", "compact ideal lemma",
                  lambda k=k: _report_check(rel.check_compact_lemma(cfg.n, cfg.m, k, q, min(cfg.D, 8))))


def suite_factorization(r: _Runner):
    def run():
        cases = rel.random_deletion_cases(100, 6, 4, r.cfg.seed)
        rep = rel.check_factorization(cases)
        failures = sum(v != 0 for v in rep.residuals.values())
        return rep.passed, {"cases": len(cases), "failures": failures}

    r.run("factorization", "slot contraction at deleted letter (100 cases)", "subword factorization", run)


def suite_killing(r: _Runner):
    cfg = r.cfg
    D = min(cfg.D, 6)
    for q in cfg.q:
        for n in sorted({3, cfg.n}):
            for k in range(1, n):
                r.run("killing", f"killing pairs n={n} k={k} q={q}", "killing lemma",
                      lambda n=n, k=k: _report_check(rel.check_killing(n, k, None, q, D)))


def suite_kwitness(r: _Runner):
    cfg = r.cfg
    n = cfg.n
    D = cfg.D if n == 3 else min(cfg.D, 8)
    for q in cfg.q:
        for k in range(1, n + 1):
            def dual(k=k):
                res = kt.build_k_unitaries(n, k, q, D, **r.torus_args(n))
                return all(d.passes() for d in res.values()), {nm: d.to_dict() for nm, d in res.items()}
            r.run("kwitness", f"U,V,u,v direct vs internal n={n} k={k} q={q}", "K1 generators U_k, V_k, u_k, v_k", dual)

        def zy():
            res = kt.build_Zn_Yn(n, q, D, **r.torus_args(n))
            ok = res.Y.passes() and all(v <= 1e-9 for v in res.checks.values())
            return ok, res.to_dict()
        r.run("kwitness", f"Z_n, Y_n n={n} q={q}", "isometry Y_n", zy)

        def coiso_holds():
            res = kt.build_coisometry_X(n, q, D, **r.torus_args(n))
            keys = [k for k in res.checks if not k.startswith("minus form")]
            ok = res.X.passes() and all(res.checks[k] <= 1e-9 for k in keys) and all(res.symbolic.values())
            return ok, res.to_dict()
        r.run("kwitness", f"coisometry X n={n} q={q}", "coisometry lemma", coiso_holds)

        def coiso_minus():
            res = kt.build_coisometry_X(n, q, D, **r.torus_args(n))
            val = res.checks["minus form: b*b-q^2 a*a = 1x1x(q^2N)x1"]
            return val <= 1e-10, {"residual": val}
        r.run("kwitness", f"coisometry minus-sign combination n={n} q={q}", "coisometry lemma", coiso_minus)


def suite_bott(r: _Runner):
    cfg = r.cfg
    f = ZCyclic(cfg.M)
    one = SparseOp.identity([f])
    U = kron([torus_matrix(f, 1), one])
    V = kron([one, torus_matrix(f, 1)])

    def commuting():
        e = kt.bott_projection(U, V)
        res = {"e^2-e": norm_bound(e @ e - e), "e-e*": norm_bound(e - e.H),
               "rank": kt.projection_rank(e), "dim": e.space_dim}
        return res["e^2-e"] <= 1e-9 and res["e-e*"] <= 1e-10 and res["rank"] == res["dim"], res

    def trivial():
        s = SparseOp(np.array([[1.0]]), [Scalar()])
        e = kt.bott_projection(s, s)
        return bool(np.array_equal(e.toarray(), np.diag([0, 1]).astype(complex))), {"e": e.toarray().real.tolist()}

    def diagonal():
        e = kt.bott_projection(U, U)
        uu = block_diag([U, U])
        res = {"trace": float(np.trace(e.toarray()).real), "dim": e.space_dim,
               "[e, U+U]": norm_bound(e @ uu - uu @ e), "e^2-e": norm_bound(e @ e - e)}
        ok = abs(res["trace"] - res["dim"]) < 1e-9 and res["[e, U+U]"] <= 1e-9 and res["e^2-e"] <= 1e-9
        return ok, res

    r.run("bott", f"commuting shifts on ZCyclic({cfg.M})^2", "Bott product", commuting)
    r.run("bott", "e(1,1) = diag(0,1)", "Bott product", trivial)
    r.run("bott", "P(U,U) surrogate", "Bott product", diagonal)


def suite_corollary(r: _Runner):
    cfg = r.cfg
    for q in cfg.q:
        for n in sorted({3, cfg.n}):
            D = cfg.D if n == 3 else min(cfg.D, 8)

            def ident(n=n, D=D):
                res = kt.build_Sn_Tn(n, q, D, **r.torus_args(n))
                ok = (res.checks["corollary identity"] <= 1e-10 and res.checks["ST=TS"] <= 1e-10
                      and res.S.passes() and res.T.passes() and all(res.symbolic.values()))
                return ok, res.to_dict()

            def cert(n=n, D=D):
                res = kt.build_Sn_Tn(n, q, D, **r.torus_args(n))
                return res.certificate["holds"], {"certificate": res.certificate,
                                                  "naive product": res.checks["naive Z_n chi(u_{n-1,1})"]}

            r.run("corollary", f"S_n(1-TT*)+TT* identity n={n} q={q}", "S_n, T_n corollary", ident)
            r.run("corollary", f"compactness certificate n={n} q={q}", "S_n, T_n corollary", cert)


def build_unitary(kind: str, q: float):
    """Builders, indexed by FredholmSpec, for the unitaries the pairing suite knows."""
    if kind == "su2-limit":
        return lambda s: fr.su2_limit_unitary(s)
    if kind == "su2-q":
        return lambda s: fr.su2_fundamental(q, s)
    if kind == "t-p":
        return lambda s: fr.switched_shift(s, 1)
    if kind == "tbar-p":
        return lambda s: fr.switched_shift(s, -1)
    if kind == "su3-fundamental":
        return lambda s: fr.su3_image(q, s)
    raise ValueError(f"unknown unitary {kind!r}")


BLOCKS = {"su2-limit": 2, "su2-q": 2, "t-p": 1, "tbar-p": 1, "su3-fundamental": 3}


def pair_index(kind: str, q: float, L: int, D: int, k: int, rank_tol: float = 1e-6) -> fr.IndexResult:
    spec = fr.FredholmSpec(L, D, k, BLOCKS[kind])
    return fr.index_pairing(build_unitary(kind, q), spec, rank_tol)


def suite_index(r: _Runner):
    cfg = r.cfg
    for q in cfg.q:
        for k in cfg.k:
            for kind in UNITARIES:
                def run(kind=kind, k=k):
                    res = pair_index(kind, q, cfg.L, cfg.D, k, cfg.rank_tol)
                    ok = res.index == -1 and res.stable and res.gap_ok(cfg.rank_tol)
                    return ok, res.to_dict()
                r.run("index", f"pairing {kind} q={q} k={k}", "index pairing", run)


SUITE_FUNCS = {"coxeter": suite_coxeter, "relations": suite_relations, "factorization": suite_factorization,
               "killing": suite_killing, "kwitness": suite_kwitness, "bott": suite_bott,
               "corollary": suite_corollary, "index": suite_index}


def run_suite(cfg: RunConfig) -> Report:
    cfg.validate()
    report = Report(config=_jsonable(asdict(cfg)))
    runner = _Runner(cfg)
    if cfg.suites and cfg.largest_space() > MEMORY_BUDGET:
        runner.checks.append(Check("memory budget", "config", "configuration", False,
                                   {"largest_space": cfg.largest_space(), "budget": MEMORY_BUDGET}))
    else:
        for suite in SUITES:
            if suite in cfg.suites:
                SUITE_FUNCS[suite](runner)
    report.checks = runner.checks
    return report


IGNORED_KEYS = {"wall_time", "t", "seed", "out"}


def compare_golden(report, golden_path) -> bool:
    """Structural comparison ignoring timings and sampled values.

    Integers, booleans and strings must match exactly; floats must agree
    within twice the nearest enclosing ``tol`` (default ``1e-9``).
    """
    golden = json.loads(Path(golden_path).read_text())
    current = report.to_dict() if isinstance(report, Report) else report
    current = json.loads(json.dumps(_jsonable(current)))
    if golden.get("schema_version") != current.get("schema_version"):
        raise SchemaMismatch("schema versions differ")
    return _same(current, golden, 1e-9)


def _same(a, b, tol) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        if set(a) - IGNORED_KEYS != set(b) - IGNORED_KEYS:
            return False
        tol = float(a.get("tol", tol)) if isinstance(a.get("tol"), (int, float)) else tol
        return all(_same(a[k], b[k], tol) for k in a if k not in IGNORED_KEYS)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_same(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(a - b) <= 2 * max(tol, 1e-12)
    return a == b


def _parse_list(text, cast):
    return [cast(x) for x in str(text).split(",") if x.strip()]


def _add_common(p):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--q", help="comma-separated list of q values")
    p.add_argument("--fock-dim", "--D", dest="D", type=int)
    p.add_argument("--window", "--L", dest="L", type=int)
    p.add_argument("--cyclic", "--M", dest="M", type=int)
    p.add_argument("--k", help="comma-separated list of levels")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="tolerance override, repeatable")
    p.add_argument("--out", help="report path (default: $QSK_REPORT_DIR/<suite>.json)")
    p.add_argument("--seed", type=int)
    p.add_argument("--suite", help="comma-separated suites (for 'all')")


def config_from_args(args, suites) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    cfg = RunConfig(**base)
    updates = {}
    for name in ("n", "m", "D", "L", "M", "seed", "out"):
        val = getattr(args, name, None)
        if val is not None:
            updates[name] = val
    if getattr(args, "q", None):
        updates["q"] = _parse_list(args.q, float)
    if getattr(args, "k", None):
        updates["k"] = _parse_list(args.k, int)
    if getattr(args, "tol", None):
        tol = dict(cfg.tol)
        for item in args.tol:
            key, _, val = item.partition("=")
            tol[key] = float(val)
        updates["tol"] = tol
    if getattr(args, "suite", None):
        suites = _parse_list(args.suite, str)
    updates["suites"] = list(suites)
    return replace(cfg, **updates)


def _default_out(name: str):
    base = os.environ.get("QSK_REPORT_DIR")
    return None if base is None else str(Path(base) / f"{name}.json")


def _write(text: str, path):
    if path is None:
        print(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text + "\n")


COMMAND_SUITES = {"relations": ["relations"], "factorize": ["factorization"], "killing": ["killing"],
                  "kwitness": ["kwitness"], "bott": ["bott"], "corollary": ["corollary"],
                  "coxeter": ["coxeter"], "all": list(SUITES)}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qsk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMAND_SUITES:
        _add_common(sub.add_parser(name, help=f"run the {name} suite" if name != "all" else "run every suite"))
    pi = sub.add_parser("pair-index", help="index pairing of one unitary with F_k")
    pi.add_argument("--q", type=float, default=0.5)
    pi.add_argument("--L", "--window", dest="L", type=int, default=24)
    pi.add_argument("--D", "--fock-dim", dest="D", type=int, default=24)
    pi.add_argument("--k", type=int, default=0)
    pi.add_argument("--unitary", choices=UNITARIES, default="su2-limit")
    pi.add_argument("--rank-tol", type=float, default=1e-6)
    pi.add_argument("--out")
    cmp_ = sub.add_parser("compare", help="compare a report with a golden file")
    cmp_.add_argument("report")
    cmp_.add_argument("golden")
    args = parser.parse_args(argv)

    if args.command == "pair-index":
        res = pair_index(args.unitary, args.q, args.L, args.D, args.k, args.rank_tol)
        payload = dict(res.to_dict(), unitary=args.unitary, q=args.q)
        _write(json.dumps(_jsonable(payload), indent=2, sort_keys=True), args.out or _default_out("pair-index"))
        return 0 if res.stable else 1
    if args.command == "compare":
        same = compare_golden(json.loads(Path(args.report).read_text()), args.golden)
        print("match" if same else "mismatch")
        return 0 if same else 1

    try:
        cfg = config_from_args(args, COMMAND_SUITES[args.command]).validate()
    except (ValueError, TypeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    report = run_suite(cfg)
    _write(report.to_json(), cfg.out or _default_out(args.command))
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  [{c.suite}] {c.name}", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
