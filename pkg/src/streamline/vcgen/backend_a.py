"""External validity backend: SMT-LIB 2 over a solver child process.

Registers are Ints and arrays are total (Array Int Int), as in the
instantiation backend.  An index sequence is a length plus an array that
is 0 outside the valid positions, so sequence equality is array equality
and only membership needs a quantifier.  Partiality follows the
assertion semantics: each atom is conjoined with the definedness of its
subterms, so an undefined atom is false and negation flips it.
"""

from __future__ import annotations

import hashlib
import os
import shutil
import subprocess
from pathlib import Path

from ..assertions import (
    And, ArrVar, Cons, Eq, Head, IConst, IVar, Le, Mem, Nil, Not, Op, Range,
    Select, SeqEq, SeqVar, Snoc, Tail, TrueF, Update,
)
from ..assertions.text import fmt, normalize
from .backend_b import Result

ENV_VAR = "STREAMLINE_SOLVER"


def find_solver(path=None):
    """Solver binary from the argument, the environment, or PATH.
    An explicit path that does not resolve is not replaced by a default."""
    if path:
        return shutil.which(path)
    for cand in (os.environ.get(ENV_VAR), "z3"):
        if cand and shutil.which(cand):
            return shutil.which(cand)
    return None


def _sym(kind, name):
    return f"|{kind}!{name}|"


class _Enc:
    def __init__(self):
        self.ints, self.arrs, self.seqs = set(), set(), set()

    # each method returns (smt text, list of definedness conditions)
    def int(self, t):
        if isinstance(t, IConst):
            return (str(t.value) if t.value >= 0 else f"(- {-t.value})"), []
        if isinstance(t, IVar):
            self.ints.add(t.name)
            return _sym("r", t.name), []
        if isinstance(t, Op):
            a, da = self.int(t.left)
            b, db = self.int(t.right)
            d = da + db
            if t.op in ("+", "-", "*"):
                return f"({t.op} {a} {b})", d
            if t.op in ("/", "%"):
                d = d + [f"(not (= {b} 0))"]
                q = f"(ite (= (>= {a} 0) (> {b} 0)) (div (abs {a}) (abs {b})) (- (div (abs {a}) (abs {b}))))"
                if t.op == "/":
                    return q, d
                return f"(- {a} (* {b} {q}))", d
            if t.op == "<":
                return f"(ite (< {a} {b}) 1 0)", d
            if t.op == "<=":
                return f"(ite (<= {a} {b}) 1 0)", d
            if t.op == "=":
                return f"(ite (= {a} {b}) 1 0)", d
            raise TypeError(f"operator {t.op}")
        if isinstance(t, Select):
            i, d = self.int(t.idx)
            v, dv = self.select(t.arr, i)
            return v, d + dv
        if isinstance(t, Head):
            (n, a), d = self.seq(t.seq)
            return f"(select {a} 0)", d + [f"(> {n} 0)"]
        raise TypeError(f"not an integer term: {t!r}")

    def select(self, a, i):
        if isinstance(a, ArrVar):
            self.arrs.add(a.name)
            return f"(select {_sym('a', a.name)} {i})", []
        if isinstance(a, Update):
            k, dk = self.int(a.idx)
            v, dv = self.int(a.val)
            rest, dr = self.select(a.base, i)
            both = dk + dv
            return f"(ite (= {i} {k}) {v} {rest})", [f"(ite (= {i} {k}) true {_and(dr)})"] + both
        raise TypeError(f"not an array term: {a!r}")

    # a sequence is (length, array) with the array 0 outside [0, length)
    def seq(self, s):
        if isinstance(s, SeqVar):
            self.seqs.add(s.name)
            n = _sym("n", s.name)
            return (n, f"(lambda ((k Int)) (ite (and (<= 0 k) (< k {n})) (select {_sym('f', s.name)} k) 0))"), []
        if isinstance(s, Nil):
            return ("0", "((as const (Array Int Int)) 0)"), []
        if isinstance(s, Cons):
            h, dh = self.int(s.head)
            (n, a), dr = self.seq(s.rest)
            return (f"(+ {n} 1)", f"(lambda ((k Int)) (ite (= k 0) {h} (ite (and (<= 1 k) (<= k {n})) "
                                  f"(select {a} (- k 1)) 0)))"), dh + dr
        if isinstance(s, Snoc):
            (n, a), dr = self.seq(s.rest)
            x, dx = self.int(s.last)
            return (f"(+ {n} 1)", f"(store {a} {n} {x})"), dr + dx
        if isinstance(s, Tail):
            (n, a), d = self.seq(s.rest)
            return (f"(- {n} 1)", f"(lambda ((k Int)) (ite (and (<= 0 k) (< (+ k 1) {n})) (select {a} (+ k 1)) 0))"), \
                d + [f"(> {n} 0)"]
        if isinstance(s, Range):
            lo, d1 = self.int(s.low)
            hi, d2 = self.int(s.high)
            st, d3 = self.int(s.step)
            n = (f"(ite (> {st} 0) (ite (>= {hi} {lo}) (+ (div (- {hi} {lo}) {st}) 1) 0) "
                 f"(ite (<= {hi} {lo}) (+ (div (- {lo} {hi}) (- {st})) 1) 0))")
            return (n, f"(lambda ((k Int)) (ite (and (<= 0 k) (< k {n})) (+ {lo} (* k {st})) 0))"), \
                d1 + d2 + d3 + [f"(not (= {st} 0))"]
        raise TypeError(f"not a sequence term: {s!r}")

    def formula(self, f):
        if isinstance(f, TrueF):
            return "true"
        if isinstance(f, And):
            return _and([self.formula(g) for g in f.items])
        if isinstance(f, Not):
            return f"(not {self.formula(f.body)})"
        if isinstance(f, (Eq, Le)):
            a, da = self.int(f.left)
            b, db = self.int(f.right)
            op = "=" if isinstance(f, Eq) else "<="
            return _and(da + db + [f"({op} {a} {b})"])
        if isinstance(f, Mem):
            x, dx = self.int(f.elem)
            (n, a), ds = self.seq(f.seq)
            return _and(dx + ds + [f"(exists ((k Int)) (and (<= 0 k) (< k {n}) (= (select {a} k) {x})))"])
        if isinstance(f, SeqEq):
            (n, a), da = self.seq(f.left)
            (m, b), db = self.seq(f.right)
            return _and(da + db + [f"(= {n} {m})", f"(= {a} {b})"])
        raise TypeError(f"not a formula: {f!r}")

    def decls(self):
        out = [f"(declare-const {_sym('r', n)} Int)" for n in sorted(self.ints)]
        for a in sorted(self.arrs):
            out.append(f"(declare-const {_sym('a', a)} (Array Int Int))")
        for a in sorted(self.seqs):
            out.append(f"(declare-const {_sym('n', a)} Int)")
            out.append(f"(declare-const {_sym('f', a)} (Array Int Int))")
            out.append(f"(assert (<= 0 {_sym('n', a)}))")
        return out


def _and(parts):
    parts = [p for p in parts if p != "true"]
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")"


def query(hyp, concl):
    """SMT-LIB text whose unsatisfiability means hyp entails concl."""
    e = _Enc()
    h = e.formula(hyp)
    c = e.formula(concl)
    lines = ["(set-logic ALL)"] + e.decls()
    lines.append(f"(assert {h})")
    lines.append(f"(assert (not {c}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


class SmtBackend:
    name = "smt"
    mode = "sound-smt"

    def __init__(self, path=None, timeout_ms=10000, dump_dir=None):
        self.path = find_solver(path)
        self.timeout_ms = timeout_ms
        self.dump_dir = Path(dump_dir) if dump_dir else None
        self.cache = {}
        self.stats = {"queries": 0, "cache_hits": 0, "unknown": 0}

    @property
    def available(self):
        return self.path is not None

    def check(self, hyp, concl):
        key = fmt(normalize(hyp)) + " ==> " + fmt(normalize(concl))
        if key in self.cache:
            self.stats["cache_hits"] += 1
            return self.cache[key]
        self.stats["queries"] += 1
        r = self._run(query(hyp, concl))
        self.cache[key] = r
        return r

    def _run(self, text):
        if self.dump_dir is not None:
            self.dump_dir.mkdir(parents=True, exist_ok=True)
            h = hashlib.sha256(text.encode()).hexdigest()[:16]
            (self.dump_dir / f"{h}.smt2").write_text(text)
        if self.path is None:
            self.stats["unknown"] += 1
            return Result("unknown", "no SMT solver found")
        try:
            cp = subprocess.run([self.path, "-in", "-smt2", f"-t:{self.timeout_ms}"], input=text,
                                capture_output=True, text=True, timeout=self.timeout_ms / 1000 + 5)
        except subprocess.TimeoutExpired:
            self.stats["unknown"] += 1
            return Result("unknown", "solver timeout")
        out = cp.stdout.strip().splitlines()
        ans = out[-1].strip() if out else ""
        if ans == "unsat":
            return Result("valid")
        if ans == "sat":
            return Result("invalid", "solver found a countermodel")
        self.stats["unknown"] += 1
        return Result("unknown", (ans or cp.stderr.strip())[:200])
