"""Compact text form for assertions.

    idx(in) = [x + 1, N - 1; 1] && b0 = in[x] && x != N - 1

Sequences: ``idx(a)``, ``nil``, ``[l, h; s]``, ``tl(S)``, ``cons(t, S)``,
``snoc(S, t)``.  Terms: ``hd(S)``, ``a{i -> v}[e]``, ``buf(b)`` (same as
``b``), and ``eq/lt/le(t, u)`` for 0/1-valued comparisons.
"""

from __future__ import annotations

import re

from .terms import (
    And, ArrVar, Cons, Eq, Head, IConst, IVar, Le, Mem, Nil, Not, Op, Range,
    Select, SeqEq, SeqVar, Snoc, Tail, TrueF, Update, conj,
)

_CMP_FUN = {"=": "eq", "<": "lt", "<=": "le"}
_FUN_CMP = {v: k for k, v in _CMP_FUN.items()}


# ------------------------------------------------------------------- printing

def fmt_int(t, nested=False):
    if isinstance(t, IConst):
        return str(t.value)
    if isinstance(t, IVar):
        return t.name
    if isinstance(t, Select):
        return f"{fmt_arr(t.arr)}[{fmt_int(t.idx)}]"
    if isinstance(t, Head):
        return f"hd({fmt_seq(t.seq)})"
    if isinstance(t, Op):
        if t.op in _CMP_FUN:
            return f"{_CMP_FUN[t.op]}({fmt_int(t.left)}, {fmt_int(t.right)})"
        s = f"{fmt_int(t.left, True)} {t.op} {fmt_int(t.right, True)}"
        return f"({s})" if nested else s
    raise TypeError(f"not an integer term: {t!r}")


def fmt_arr(a):
    if isinstance(a, ArrVar):
        return a.name
    if isinstance(a, Update):
        return f"{fmt_arr(a.base)}{{{fmt_int(a.idx)} -> {fmt_int(a.val)}}}"
    raise TypeError(f"not an array term: {a!r}")


def fmt_seq(s):
    if isinstance(s, SeqVar):
        return f"idx({s.name})"
    if isinstance(s, Nil):
        return "nil"
    if isinstance(s, Range):
        return f"[{fmt_int(s.low)}, {fmt_int(s.high)}; {fmt_int(s.step)}]"
    if isinstance(s, Tail):
        return f"tl({fmt_seq(s.rest)})"
    if isinstance(s, Cons):
        return f"cons({fmt_int(s.head)}, {fmt_seq(s.rest)})"
    if isinstance(s, Snoc):
        return f"snoc({fmt_seq(s.rest)}, {fmt_int(s.last)})"
    raise TypeError(f"not a sequence term: {s!r}")


def fmt(f):
    """Formula (or any term) to text."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, Eq):
        return f"{fmt_int(f.left)} = {fmt_int(f.right)}"
    if isinstance(f, Le):
        return f"{fmt_int(f.left)} <= {fmt_int(f.right)}"
    if isinstance(f, Mem):
        return f"{fmt_int(f.elem)} in {fmt_seq(f.seq)}"
    if isinstance(f, SeqEq):
        return f"{fmt_seq(f.left)} = {fmt_seq(f.right)}"
    if isinstance(f, And):
        if not f.items:
            return "true"
        parts = [f"({fmt(g)})" if isinstance(g, And) else fmt(g) for g in f.items]
        return " && ".join(parts)
    if isinstance(f, Not):
        b = f.body
        if isinstance(b, Eq):
            return f"{fmt_int(b.left)} != {fmt_int(b.right)}"
        if isinstance(b, Le):
            return f"{fmt_int(b.right)} < {fmt_int(b.left)}"
        if isinstance(b, Mem):
            return f"{fmt_int(b.elem)} notin {fmt_seq(b.seq)}"
        if isinstance(b, SeqEq):
            return f"{fmt_seq(b.left)} != {fmt_seq(b.right)}"
        return f"!({fmt(b)})"
    if isinstance(f, (IVar, IConst, Select, Head, Op)):
        return fmt_int(f)
    if isinstance(f, (ArrVar, Update)):
        return fmt_arr(f)
    return fmt_seq(f)


# -------------------------------------------------------------------- parsing

class AssertionSyntaxError(ValueError):
    pass


_TOK = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(->|&&|!=|<=|>=|==|[-+*/%<>=!()\[\]{};,]))")

_SEQ_START = {"idx", "nil", "tl", "cons", "snoc"}


def _tokenize(text):
    toks, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m or m.end() == pos:
            raise AssertionSyntaxError(f"bad character at {pos}: {text[pos:pos + 10]!r}")
        num, ident, op = m.groups()
        toks.append(("num", num) if num else ("id", ident) if ident else ("op", op))
        pos = m.end()
    toks.append(("eof", ""))
    return toks


class _P:
    def __init__(self, text):
        self.t = _tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.t[min(self.i + k, len(self.t) - 1)]

    def at(self, v):
        return self.peek()[1] == v and self.peek()[0] != "eof"

    def eat(self, v):
        if not self.at(v):
            raise AssertionSyntaxError(f"expected {v!r}, found {self.peek()[1]!r}")
        self.i += 1

    def name(self):
        k, v = self.peek()
        if k != "id":
            raise AssertionSyntaxError(f"expected a name, found {v!r}")
        self.i += 1
        return v

    # formulas
    def formula(self):
        items = [self.unary()]
        while self.at("&&"):
            self.i += 1
            items.append(self.unary())
        if len(items) == 1:
            return items[0]
        return And(tuple(items))

    def unary(self):
        if self.at("!") and self.peek(1)[1] == "(":
            self.i += 2
            f = self.formula()
            self.eat(")")
            return Not(f)
        if self.at("true"):
            self.i += 1
            return TrueF()
        if self.at("("):
            save = self.i
            self.i += 1
            try:
                f = self.formula()
                self.eat(")")
                if not self.peek()[1] in ("=", "!=", "<", "<=", ">", ">=", "in", "notin",
                                          "+", "-", "*", "/", "%", "["):
                    return f
            except AssertionSyntaxError:
                pass
            self.i = save
        return self.atom()

    def is_seq_start(self):
        k, v = self.peek()
        return (k == "id" and v in _SEQ_START and self.peek(1)[1] == "(" or
                (k == "id" and v == "nil") or v == "[")

    def atom(self):
        if self.is_seq_start():
            left = self.seq()
            if self.at("="):
                self.i += 1
                return SeqEq(left, self.seq())
            if self.at("!="):
                self.i += 1
                return Not(SeqEq(left, self.seq()))
            raise AssertionSyntaxError("expected = or != after sequence")
        left = self.term()
        k, op = self.peek()
        if op in ("in", "notin") and k == "id":
            self.i += 1
            s = self.seq()
            return Mem(left, s) if op == "in" else Not(Mem(left, s))
        if op in ("=", "=="):
            self.i += 1
            return Eq(left, self.term())
        if op == "!=":
            self.i += 1
            return Not(Eq(left, self.term()))
        if op == "<=":
            self.i += 1
            return Le(left, self.term())
        if op == "<":
            self.i += 1
            return Not(Le(self.term(), left))
        if op == ">=":
            self.i += 1
            return Le(self.term(), left)
        if op == ">":
            self.i += 1
            return Not(Le(left, self.term()))
        raise AssertionSyntaxError(f"expected a comparison, found {op!r}")

    # sequences
    def seq(self):
        k, v = self.peek()
        if v == "[":
            self.i += 1
            lo = self.term()
            self.eat(",")
            hi = self.term()
            self.eat(";")
            st = self.term()
            self.eat("]")
            return Range(lo, hi, st)
        if v == "nil":
            self.i += 1
            return Nil()
        if v == "idx":
            self.i += 1
            self.eat("(")
            a = self.name()
            self.eat(")")
            return SeqVar(a)
        if v == "tl":
            self.i += 1
            self.eat("(")
            s = self.seq()
            self.eat(")")
            return Tail(s)
        if v == "cons":
            self.i += 1
            self.eat("(")
            t = self.term()
            self.eat(",")
            s = self.seq()
            self.eat(")")
            return Cons(t, s)
        if v == "snoc":
            self.i += 1
            self.eat("(")
            s = self.seq()
            self.eat(",")
            t = self.term()
            self.eat(")")
            return Snoc(s, t)
        raise AssertionSyntaxError(f"expected a sequence, found {v!r}")

    # integer terms
    def term(self):
        left = self.product()
        while self.at("+") or self.at("-"):
            op = self.peek()[1]
            self.i += 1
            left = Op(op, left, self.product())
        return left

    def product(self):
        left = self.factor()
        while self.at("*") or self.at("/") or self.at("%"):
            op = self.peek()[1]
            self.i += 1
            left = Op(op, left, self.factor())
        return left

    def factor(self):
        k, v = self.peek()
        if v == "-" and k == "op":
            self.i += 1
            k2, v2 = self.peek()
            if k2 == "num":
                self.i += 1
                return IConst(-int(v2))
            return Op("-", IConst(0), self.factor())
        if k == "num":
            self.i += 1
            return IConst(int(v))
        if v == "(":
            self.i += 1
            t = self.term()
            self.eat(")")
            return t
        if k == "id":
            if v == "hd" and self.peek(1)[1] == "(":
                self.i += 2
                s = self.seq()
                self.eat(")")
                return Head(s)
            if v == "buf" and self.peek(1)[1] == "(":
                self.i += 2
                b = self.name()
                self.eat(")")
                return IVar(b)
            if v in _FUN_CMP and self.peek(1)[1] == "(":
                self.i += 2
                a = self.term()
                self.eat(",")
                b = self.term()
                self.eat(")")
                return Op(_FUN_CMP[v], a, b)
            self.i += 1
            if self.at("[") or self.at("{"):
                arr = ArrVar(v)
                while self.at("{"):
                    self.i += 1
                    idx = self.term()
                    self.eat("->")
                    val = self.term()
                    self.eat("}")
                    arr = Update(arr, idx, val)
                self.eat("[")
                idx = self.term()
                self.eat("]")
                return Select(arr, idx)
            return IVar(v)
        raise AssertionSyntaxError(f"unexpected {v!r} in term")


def parse_assertion(text):
    p = _P(text)
    if p.peek()[0] == "eof":
        return TrueF()
    f = p.formula()
    if p.peek()[0] != "eof":
        raise AssertionSyntaxError(f"trailing input at {p.peek()[1]!r}")
    return f


def parse_term(text):
    p = _P(text)
    t = p.term()
    if p.peek()[0] != "eof":
        raise AssertionSyntaxError(f"trailing input at {p.peek()[1]!r}")
    return t


# --------------------------------------------------------------- normalization

def normalize(f):
    """Flatten conjunctions, drop True, remove duplicates, sort by text."""
    if isinstance(f, Not):
        b = normalize(f.body)
        if isinstance(b, Not):
            return b.body
        return Not(b)
    if isinstance(f, And):
        seen = {}
        for g in f.items:
            g = normalize(g)
            for h in (g.items if isinstance(g, And) else (g,)):
                if isinstance(h, TrueF):
                    continue
                seen.setdefault(fmt(h), h)
        items = [seen[k] for k in sorted(seen)]
        return conj(*items)
    return f


def same(f, g):
    return fmt(normalize(f)) == fmt(normalize(g))
