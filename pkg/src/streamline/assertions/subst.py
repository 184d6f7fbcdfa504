"""Simultaneous substitution for registers, arrays and index sequences."""

from __future__ import annotations

from .terms import (
    ARRAY_TERMS, INT_TERMS, SEQ_TERMS, And, ArrVar, Cons, Eq, Head, IConst,
    IVar, Le, Mem, Nil, Not, Op, Range, Select, SeqEq, SeqVar, Snoc, Tail,
    TrueF, Update,
)


class SortError(TypeError):
    pass


class Subst:
    """[t1/x1, ..., tn/xn] split by sort.

    ``ints`` maps register names to integer terms, ``arrs`` array names
    to array terms, ``seqs`` array names to sequence terms for idx(a).
    """

    def __init__(self, ints=None, arrs=None, seqs=None):
        self.ints = dict(ints or {})
        self.arrs = dict(arrs or {})
        self.seqs = dict(seqs or {})
        for k, v in self.ints.items():
            if not isinstance(v, INT_TERMS):
                raise SortError(f"cannot substitute {v!r} for integer variable {k}")
        for k, v in self.arrs.items():
            if not isinstance(v, ARRAY_TERMS):
                raise SortError(f"cannot substitute {v!r} for array {k}")
        for k, v in self.seqs.items():
            if not isinstance(v, SEQ_TERMS):
                raise SortError(f"cannot substitute {v!r} for idx({k})")

    def __bool__(self):
        return bool(self.ints or self.arrs or self.seqs)

    def int(self, t):
        if isinstance(t, IVar):
            return self.ints.get(t.name, t)
        if isinstance(t, IConst):
            return t
        if isinstance(t, Op):
            return Op(t.op, self.int(t.left), self.int(t.right))
        if isinstance(t, Select):
            return Select(self.arr(t.arr), self.int(t.idx))
        if isinstance(t, Head):
            return Head(self.seq(t.seq))
        raise SortError(f"not an integer term: {t!r}")

    def arr(self, a):
        if isinstance(a, ArrVar):
            return self.arrs.get(a.name, a)
        if isinstance(a, Update):
            return Update(self.arr(a.base), self.int(a.idx), self.int(a.val))
        raise SortError(f"not an array term: {a!r}")

    def seq(self, s):
        if isinstance(s, SeqVar):
            return self.seqs.get(s.name, s)
        if isinstance(s, Nil):
            return s
        if isinstance(s, Cons):
            return Cons(self.int(s.head), self.seq(s.rest))
        if isinstance(s, Snoc):
            return Snoc(self.seq(s.rest), self.int(s.last))
        if isinstance(s, Tail):
            return Tail(self.seq(s.rest))
        if isinstance(s, Range):
            return Range(self.int(s.low), self.int(s.high), self.int(s.step))
        raise SortError(f"not a sequence term: {s!r}")

    def formula(self, f):
        if isinstance(f, TrueF):
            return f
        if isinstance(f, Eq):
            return Eq(self.int(f.left), self.int(f.right))
        if isinstance(f, Le):
            return Le(self.int(f.left), self.int(f.right))
        if isinstance(f, Mem):
            return Mem(self.int(f.elem), self.seq(f.seq))
        if isinstance(f, SeqEq):
            return SeqEq(self.seq(f.left), self.seq(f.right))
        if isinstance(f, And):
            return And(tuple(self.formula(g) for g in f.items))
        if isinstance(f, Not):
            return Not(self.formula(f.body))
        raise SortError(f"not a formula: {f!r}")

    def apply(self, x):
        if not self:
            return x
        if isinstance(x, INT_TERMS):
            return self.int(x)
        if isinstance(x, ARRAY_TERMS):
            return self.arr(x)
        if isinstance(x, SEQ_TERMS):
            return self.seq(x)
        return self.formula(x)


def subst(phi, ints=None, arrs=None, seqs=None):
    return Subst(ints, arrs, seqs).apply(phi)
