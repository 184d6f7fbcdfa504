"""Derivation files and the independent derivation checker.

The checker works from the JSON text alone: it re-parses every
assertion and statement, recomputes each rule's expected pre/post from
its own substitution code, and re-discharges every entailment through a
validity backend.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from ..assertions import (
    ArrVar, Eq, Head, IConst, IVar, Mem, Nil, Not, Op, Select, SeqEq, SeqVar,
    Snoc, Tail, Update, conj, embed, parse_assertion, parse_term, subst,
)
from ..assertions.text import fmt, normalize
from ..frontend.ast import (
    Assign, For, If, Kernel, ReadArr, ReadStream, Seq, Ty, Var, WriteArr,
    WriteStream, expr_vars,
)
from ..frontend.parser import ParseError, parse_stmt
from ..frontend.printer import fmt_stmt

VERSION = 1

RULES = ("Tr-ReadMem", "Tr-WriteMem", "Tr-Assign", "Tr-Seq", "Tr-If", "Tr-For",
         "Tr-InsertL", "Tr-InsertR", "Tr-InsRBuf", "Tr-InsWBuf", "Tr-InsMove",
         "Tr-Conseq", "Tr-InsConseq", "Tr-Kernel",
         # extensions: empty statement and accesses to arrays that stay arrays
         "Tr-Skip", "Tr-KeepRead", "Tr-KeepWrite")

INSERTION_RULES = ("Tr-InsRBuf", "Tr-InsWBuf", "Tr-InsMove", "Tr-InsConseq")


def entail_key(hyp, concl):
    return fmt(normalize(hyp)) + " ==> " + fmt(normalize(concl))


def certificate(hyp, concl):
    return hashlib.sha256(entail_key(hyp, concl).encode()).hexdigest()


# -------------------------------------------------------------- serialization

def _stmt_text(s):
    if s is None:
        return None
    return fmt_stmt(_strip_annot(s))


def _strip_annot(s):
    if isinstance(s, Seq):
        return Seq(tuple(_strip_annot(t) for t in s.items))
    if isinstance(s, For):
        return For(s.x, s.init, s.bound, s.step, _strip_annot(s.body))
    if isinstance(s, If):
        return If(s.x, _strip_annot(s.then), _strip_annot(s.orelse))
    if isinstance(s, Kernel):
        return Kernel(_strip_annot(s.body))
    return s


def node_to_json(n):
    side = {}
    for k, v in n.side.items():
        if k == "entail":
            side["entail"] = [{"hyp": fmt(h), "concl": fmt(c), "cert": certificate(h, c)}
                              for h, c in v]
        elif k == "index":
            side["index"] = fmt(v)
        else:
            side[k] = fmt(v)
    return {
        "rule": n.rule,
        "gamma": n.gamma,
        "pre": fmt(n.pre),
        "post": fmt(n.post),
        "source": _stmt_text(n.source),
        "target": _stmt_text(n.target),
        "side": side,
        "premises": [node_to_json(m) for m in n.premises],
    }


def gamma_json(env):
    return {k: env.bindings[k].value for k in sorted(env.bindings)}


def derivation_to_json(tree, gammas, params, requires):
    return {
        "version": VERSION,
        "params": list(params),
        "requires": fmt(requires),
        "gammas": {k: gamma_json(v) for k, v in gammas.items()},
        "root": node_to_json(tree) if tree is not None else None,
    }


def dumps(doc):
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


# -------------------------------------------------------------------- checking

@dataclass
class CheckResult:
    ok: bool
    path: str = ""
    message: str = ""
    nodes: int = 0
    entailments: int = 0
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


class _Reject(Exception):
    def __init__(self, path, msg):
        super().__init__(msg)
        self.path, self.msg = path, msg


def _flatten(s):
    """Statement as a flat tuple of simple statements and tagged compounds
    (annotations dropped), so that grouping of sequences does not matter."""
    if isinstance(s, Seq):
        out = ()
        for t in s.items:
            out += _flatten(t)
        return out
    if isinstance(s, For):
        return (("for", s.x, s.init, s.bound, s.step, _flatten(s.body)),)
    if isinstance(s, If):
        return (("if", s.x, _flatten(s.then), _flatten(s.orelse)),)
    if isinstance(s, Kernel):
        return (("kernel", _flatten(s.body)),)
    return (s,)


def _compound(t, tag):
    if isinstance(t, tuple) and len(t) == 1 and isinstance(t[0], tuple) and t[0][0] == tag:
        return t[0]
    return None


def _seq_of(*parts):
    out = ()
    for p in parts:
        out += p
    return out


class Checker:
    def __init__(self, doc, backend):
        self.doc = doc
        self.backend = backend
        self.nodes = 0
        self.entailments = 0
        self.failures = []            # (path, message) of invalid entailments
        self.gammas = {}

    def run(self):
        doc = self.doc
        if not isinstance(doc, dict) or doc.get("version") != VERSION:
            raise _Reject("", "unsupported derivation version")
        for k in ("host", "kernel"):
            g = doc["gammas"].get(k)
            if g is None:
                raise _Reject("", f"missing gamma {k}")
            self.gammas[k] = {n: Ty(t) for n, t in g.items()}
        self.params = set(doc.get("params", []))
        flipped = {n: t.flipped() for n, t in self.gammas["host"].items()}
        if flipped != self.gammas["kernel"]:
            raise _Reject("", "kernel gamma is not the flip of the host gamma")
        self.requires = parse_assertion(doc.get("requires", "true"))
        root = doc.get("root")
        if root is None:
            return
        if root.get("gamma") != "host":
            raise _Reject("root", "root judgment must use the host gamma")
        arrays = sorted(n for n, t in self.gammas["host"].items() if t in (Ty.RARR, Ty.WARR))
        phi_init = conj(*[SeqEq(SeqVar(a), Nil()) for a in arrays], self.requires)
        if not self._same(self._f(root, "pre", "root"), phi_init):
            raise _Reject("root", "root precondition is not the initial assertion")
        self.node(root, "root")

    # helpers
    def _f(self, n, key, path):
        try:
            return parse_assertion(n[key])
        except Exception as e:  # noqa: BLE001
            raise _Reject(path, f"bad {key}: {e}") from None

    def _s(self, n, key, path):
        text = n.get(key)
        if text is None:
            return None
        try:
            return _flatten(parse_stmt(text))
        except ParseError as e:
            raise _Reject(path, f"bad {key} statement: {e}") from None

    @staticmethod
    def _same(f, g):
        return fmt(normalize(f)) == fmt(normalize(g))

    def _expect(self, cond, path, msg):
        if not cond:
            raise _Reject(path, msg)

    def _ty(self, g, name):
        if name in self.params:
            return Ty.INT
        return self.gammas[g].get(name)

    def _int_expr(self, g, e, path):
        for v in expr_vars(e):
            self._expect(self._ty(g, v) is Ty.INT, path, f"{v} is not INT in expression")

    def _entails(self, hyp, concl, path, certs, i):
        if self._same(hyp, concl):
            return
        self.entailments += 1
        if certs is not None:
            self._expect(i < len(certs) and certs[i].get("cert") == certificate(hyp, concl),
                         path, "entailment certificate does not match")
        r = self.backend.check(hyp, concl)
        if not r.valid:
            # keep going: structure is still checked and every bad entailment is listed
            self.failures.append((path, f"entailment not valid ({r.status}): "
                                        f"{fmt(hyp)[:120]} ==> {fmt(concl)[:120]}"))

    def node(self, n, path):
        self.nodes += 1
        rule = n.get("rule")
        g = n.get("gamma")
        path = f"{path}/{rule}"
        self._expect(rule in RULES, path, f"unknown rule {rule!r}")
        self._expect(g in self.gammas, path, f"unknown gamma {g!r}")
        pre, post = self._f(n, "pre", path), self._f(n, "post", path)
        src, tgt = self._s(n, "source", path), self._s(n, "target", path)
        prem = n.get("premises", [])
        side = n.get("side", {})
        for i, m in enumerate(prem):
            self.node(m, f"{path}[{i}]")
        check = getattr(self, "rule_" + rule.replace("Tr-", "").replace("-", "_"))
        check(n, g, pre, post, src, tgt, prem, side, path)

    def _prem(self, m, path):
        return (self._f(m, "pre", path), self._f(m, "post", path),
                self._s(m, "source", path), self._s(m, "target", path))

    def _one(self, tgt, cls, path):
        self._expect(isinstance(tgt, tuple) and len(tgt) == 1 and isinstance(tgt[0], cls),
                     path, f"expected a single {cls.__name__} statement")
        return tgt[0]

    def _leaf(self, prem, path):
        self._expect(not prem, path, "rule takes no premises")

    # ----------------------------------------------------------------- rules
    def rule_Assign(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        s = self._one(src, Assign, path)
        self._expect(src == tgt, path, "source and target differ")
        self._expect(self._ty(g, s.x) is Ty.INT, path, f"{s.x} is not INT")
        self._int_expr(g, s.e, path)
        self._expect(self._same(pre, subst(post, ints={s.x: embed(s.e)})), path, "precondition mismatch")

    def rule_ReadMem(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        s = self._one(src, ReadArr, path)
        t = self._one(tgt, Assign, path)
        self._expect(t.x == s.x and isinstance(t.e, Var), path, "target is not x := b")
        b = t.e.name
        self._expect(self._ty(g, s.x) is Ty.INT, path, f"{s.x} is not INT")
        self._expect(self._ty(g, s.a) is Ty.RARR, path, f"{s.a} is not RARR")
        self._expect(self._ty(g, b) is Ty.BUF, path, f"{b} is not BUF")
        self._int_expr(g, s.idx, path)
        want = conj(Eq(IVar(b), Select(ArrVar(s.a), embed(s.idx))), subst(post, ints={s.x: IVar(b)}))
        self._expect(self._same(pre, want), path, "precondition mismatch")

    def rule_WriteMem(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        s = self._one(src, WriteArr, path)
        t = self._one(tgt, Assign, path)
        self._expect(t.e == Var(s.x), path, "target is not b := x")
        b = t.x
        self._expect(self._ty(g, s.x) is Ty.INT, path, f"{s.x} is not INT")
        self._expect(self._ty(g, s.a) is Ty.WARR, path, f"{s.a} is not WARR")
        self._expect(self._ty(g, b) is Ty.BUF, path, f"{b} is not BUF")
        self._int_expr(g, s.idx, path)
        e = embed(s.idx)
        want = conj(Not(Mem(e, SeqVar(s.a))),
                    subst(post, ints={b: IVar(s.x)}, arrs={s.a: Update(ArrVar(s.a), e, IVar(s.x))}))
        self._expect(self._same(pre, want), path, "precondition mismatch")

    def rule_KeepRead(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        s = self._one(src, ReadArr, path)
        self._expect(src == tgt, path, "source and target differ")
        self._expect(s.a not in self.gammas[g], path, f"{s.a} is a stream in this derivation")
        self._expect(self._ty(g, s.x) is Ty.INT, path, f"{s.x} is not INT")
        want = subst(post, ints={s.x: Select(ArrVar(s.a), embed(s.idx))})
        self._expect(self._same(pre, want), path, "precondition mismatch")

    def rule_KeepWrite(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        s = self._one(src, WriteArr, path)
        self._expect(src == tgt, path, "source and target differ")
        self._expect(s.a not in self.gammas[g], path, f"{s.a} is a stream in this derivation")
        want = subst(post, arrs={s.a: Update(ArrVar(s.a), embed(s.idx), IVar(s.x))})
        self._expect(self._same(pre, want), path, "precondition mismatch")

    def rule_Skip(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        self._expect(src == () and tgt == (), path, "skip must have empty statements")
        self._expect(self._same(pre, post), path, "skip must preserve the assertion")

    def rule_Seq(self, n, g, pre, post, src, tgt, prem, side, path):
        self._expect(len(prem) == 2, path, "Tr-Seq takes two premises")
        p1, p2 = (self._prem(m, path) for m in prem)
        for m in prem:
            self._expect(m["gamma"] == g, path, "premise gamma differs")
            self._expect(m["rule"] not in INSERTION_RULES, path, "premise is an insertion")
        self._expect(self._same(pre, p1[0]), path, "precondition differs from first premise")
        self._expect(self._same(p1[1], p2[0]), path, "midpoint assertions differ")
        self._expect(self._same(post, p2[1]), path, "postcondition differs from second premise")
        self._expect(src == _seq_of(p1[2], p2[2]), path, "source is not s1; s2")
        self._expect(tgt == _seq_of(p1[3], p2[3]), path, "target is not t1; t2")

    def rule_If(self, n, g, pre, post, src, tgt, prem, side, path):
        self._expect(len(prem) == 2, path, "Tr-If takes two premises")
        cs, ct = _compound(src, "if"), _compound(tgt, "if")
        self._expect(cs is not None and ct is not None, path, "source or target is not an if")
        _, x, s1, s2 = cs
        _, x2, t1, t2 = ct
        self._expect(x == x2, path, "condition variables differ")
        self._expect(self._ty(g, x) is Ty.INT, path, f"{x} is not INT")
        p1, p2 = (self._prem(m, path) for m in prem)
        for m in prem:
            self._expect(m["gamma"] == g, path, "premise gamma differs")
        xv = IVar(x)
        self._expect(self._same(p1[0], conj(pre, Not(Eq(xv, IConst(0))))), path, "then-branch precondition")
        self._expect(self._same(p2[0], conj(pre, Eq(xv, IConst(0)))), path, "else-branch precondition")
        self._expect(self._same(p1[1], post) and self._same(p2[1], post), path, "branch postconditions")
        self._expect(p1[2] == s1 and p2[2] == s2, path, "branch sources")
        self._expect(p1[3] == t1 and p2[3] == t2, path, "branch targets")

    def rule_For(self, n, g, pre, post, src, tgt, prem, side, path):
        self._expect(len(prem) == 1, path, "Tr-For takes one premise")
        self._expect("invariant" in side, path, "missing invariant")
        inv = parse_assertion(side["invariant"])
        cs, ct = _compound(src, "for"), _compound(tgt, "for")
        self._expect(cs is not None and ct is not None, path, "source or target is not a loop")
        _, x, e, m, step, body = cs
        self._expect(ct[1:5] == (x, e, m, step), path, "loop headers differ")
        self._expect(self._ty(g, x) is Ty.INT, path, f"{x} is not INT")
        self._expect(step != 0, path, "zero step")
        self._int_expr(g, e, path)
        self._int_expr(g, m, path)
        bp = self._prem(prem[0], path)
        self._expect(prem[0]["gamma"] == g, path, "premise gamma differs")
        xv = IVar(x)
        nxt = subst(inv, ints={x: Op("+", xv, IConst(step)) if step > 0 else Op("-", xv, IConst(-step))})
        self._expect(self._same(pre, subst(inv, ints={x: embed(e)})), path, "precondition is not Inv[e/x]")
        self._expect(self._same(post, conj(inv, Eq(xv, embed(m)))), path, "postcondition is not Inv && x = m")
        self._expect(self._same(bp[0], conj(inv, Not(Eq(xv, embed(m))))), path, "body precondition")
        self._expect(self._same(bp[1], nxt), path, "body postcondition is not Inv[x+n/x]")
        self._expect(bp[2] == body and bp[3] == ct[5], path, "loop bodies differ")

    def _insert(self, n, g, pre, post, src, tgt, prem, path, left):
        self._expect(len(prem) == 2, path, "insertion rule takes two premises")
        ins, d = (prem[0], prem[1]) if left else (prem[1], prem[0])
        self._expect(ins["rule"] in INSERTION_RULES, path, "inserted judgment is not an insertion")
        self._expect(d["rule"] not in INSERTION_RULES, path, "main premise is an insertion")
        for m in prem:
            self._expect(m["gamma"] == g, path, "premise gamma differs")
        ip, dp = self._prem(ins, path), self._prem(d, path)
        self._expect(ip[2] is None, path, "insertion has a source statement")
        self._expect(src == dp[2], path, "source changed by insertion")
        if left:
            self._expect(self._same(pre, ip[0]) and self._same(ip[1], dp[0]) and self._same(post, dp[1]),
                         path, "assertions do not chain")
            self._expect(tgt == _seq_of(ip[3], dp[3]), path, "target is not t0; t")
        else:
            self._expect(self._same(pre, dp[0]) and self._same(dp[1], ip[0]) and self._same(post, ip[1]),
                         path, "assertions do not chain")
            self._expect(tgt == _seq_of(dp[3], ip[3]), path, "target is not t; t0")

    def rule_InsertL(self, n, g, pre, post, src, tgt, prem, side, path):
        self._insert(n, g, pre, post, src, tgt, prem, path, True)

    def rule_InsertR(self, n, g, pre, post, src, tgt, prem, side, path):
        self._insert(n, g, pre, post, src, tgt, prem, path, False)

    def rule_InsRBuf(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        self._expect(src is None, path, "insertion has a source statement")
        t = self._one(tgt, ReadStream, path)
        self._expect(self._ty(g, t.a) is Ty.RARR, path, f"{t.a} is not RARR")
        self._expect(self._ty(g, t.x) is Ty.BUF, path, f"{t.x} is not BUF")
        a = SeqVar(t.a)
        want = subst(post, ints={t.x: Select(ArrVar(t.a), Head(a))}, seqs={t.a: Tail(a)})
        self._expect(self._same(pre, want), path, "precondition mismatch")

    def rule_InsWBuf(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        self._expect(src is None, path, "insertion has a source statement")
        t = self._one(tgt, WriteStream, path)
        self._expect(self._ty(g, t.a) is Ty.WARR, path, f"{t.a} is not WARR")
        self._expect(self._ty(g, t.x) is Ty.BUF, path, f"{t.x} is not BUF")
        self._expect("index" in side, path, "missing index term")
        idx = parse_term(side["index"])
        a = SeqVar(t.a)
        want = conj(Not(Mem(idx, a)), Eq(Select(ArrVar(t.a), idx), IVar(t.x)),
                    subst(post, seqs={t.a: Snoc(a, idx)}))
        self._expect(self._same(pre, want), path, "precondition mismatch")

    def rule_InsMove(self, n, g, pre, post, src, tgt, prem, side, path):
        self._leaf(prem, path)
        self._expect(src is None, path, "insertion has a source statement")
        t = self._one(tgt, Assign, path)
        self._expect(isinstance(t.e, Var), path, "move source is not a variable")
        self._expect(self._ty(g, t.x) is Ty.BUF, path, f"{t.x} is not BUF")
        self._expect(self._ty(g, t.e.name) in (Ty.INT, Ty.BUF), path, f"{t.e.name} is not INT or BUF")
        self._expect(self._same(pre, subst(post, ints={t.x: IVar(t.e.name)})), path, "precondition mismatch")

    def _conseq(self, n, g, pre, post, src, tgt, prem, side, path, insertion):
        self._expect(len(prem) == 1, path, "consequence takes one premise")
        m = prem[0]
        self._expect(m["gamma"] == g, path, "premise gamma differs")
        self._expect((m["rule"] in INSERTION_RULES) == insertion, path,
                     "wrong consequence rule for this kind of judgment")
        p = self._prem(m, path)
        self._expect(src == p[2] and tgt == p[3], path, "statements differ from premise")
        certs = side.get("entail")
        self._entails(pre, p[0], path + "<pre>", certs, 0)
        self._entails(p[1], post, path + "<post>", certs, 1)

    def rule_Conseq(self, n, g, pre, post, src, tgt, prem, side, path):
        self._conseq(n, g, pre, post, src, tgt, prem, side, path, False)

    def rule_InsConseq(self, n, g, pre, post, src, tgt, prem, side, path):
        self._conseq(n, g, pre, post, src, tgt, prem, side, path, True)

    def rule_Kernel(self, n, g, pre, post, src, tgt, prem, side, path):
        self._expect(len(prem) == 1, path, "Tr-Kernel takes one premise")
        m = prem[0]
        self._expect(g == "host" and m["gamma"] == "kernel", path, "kernel premise must use the flipped gamma")
        p = self._prem(m, path)
        cs, ct = _compound(src, "kernel"), _compound(tgt, "kernel")
        self._expect(cs is not None and ct is not None, path, "source or target is not a kernel")
        self._expect(cs[1] == p[2] and ct[1] == p[3], path, "kernel bodies differ")
        self._expect(self._same(pre, p[0]) and self._same(post, p[1]), path, "assertions differ from premise")


def check_derivation(doc, backend=None):
    """Validate a derivation document; never raises on bad input."""
    if backend is None:
        from ..vcgen.backend_b import InstantiationBackend
        backend = InstantiationBackend()
    c = Checker(doc, backend)
    try:
        c.run()
    except _Reject as r:
        return CheckResult(False, r.path, r.msg, c.nodes, c.entailments, c.failures)
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        return CheckResult(False, "", f"malformed derivation: {e!r}", c.nodes, c.entailments, c.failures)
    if c.failures:
        path, msg = c.failures[0]
        return CheckResult(False, path, msg, c.nodes, c.entailments, c.failures)
    return CheckResult(True, "", "ok", c.nodes, c.entailments)
