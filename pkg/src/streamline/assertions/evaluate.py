"""Satisfaction of assertions over (R, H, I).

An undefined subterm (unbound register, missing heap cell, head or tail
of the empty sequence, division by zero, zero step) makes the atomic
formula containing it false; negation then flips that outcome.
"""

from __future__ import annotations

from ..semantics import EvalError, apply_op
from .terms import (
    And, ArrVar, Cons, Eq, Head, IConst, IVar, Le, Mem, Nil, Not, Op, Range,
    Select, SeqEq, SeqVar, Snoc, Tail, TrueF, Update,
)


class Undefined(Exception):
    pass


def seq_range(low, high, step):
    if step == 0:
        raise Undefined("zero step")
    if step > 0:
        return range(low, high + 1, step) if high >= low else range(0)
    return range(low, high - 1, step) if high <= low else range(0)


def seq_equal(a, b):
    if len(a) != len(b):
        return False
    if isinstance(a, range) and isinstance(b, range):
        return a == b
    return all(x == y for x, y in zip(a, b))


class Evaluator:
    def __init__(self, R, H, I):
        self.R = R
        self.H = H
        self.I = I

    def int(self, t):
        if isinstance(t, IConst):
            return t.value
        if isinstance(t, IVar):
            try:
                return self.R[t.name]
            except KeyError:
                raise Undefined(t.name) from None
        if isinstance(t, Op):
            a = self.int(t.left)
            b = self.int(t.right)
            try:
                return apply_op(t.op, a, b)
            except EvalError as e:
                raise Undefined(str(e)) from None
        if isinstance(t, Select):
            return self.select(t.arr, self.int(t.idx))
        if isinstance(t, Head):
            s = self.seq(t.seq)
            if not len(s):
                raise Undefined("hd of empty sequence")
            return s[0]
        raise TypeError(f"not an integer term: {t!r}")

    def select(self, a, m):
        while isinstance(a, Update):
            if self.int(a.idx) == m:
                return self.int(a.val)
            a = a.base
        if isinstance(a, ArrVar):
            try:
                return self.H[(a.name, m)]
            except KeyError:
                raise Undefined(f"{a.name}[{m}]") from None
        raise TypeError(f"not an array term: {a!r}")

    def seq(self, s):
        if isinstance(s, SeqVar):
            try:
                return self.I[s.name]
            except KeyError:
                raise Undefined(f"idx({s.name})") from None
        if isinstance(s, Nil):
            return ()
        if isinstance(s, Range):
            return seq_range(self.int(s.low), self.int(s.high), self.int(s.step))
        if isinstance(s, Tail):
            r = self.seq(s.rest)
            if not len(r):
                raise Undefined("tl of empty sequence")
            return r[1:]
        if isinstance(s, Cons):
            v = self.int(s.head)
            return (v,) + tuple(self.seq(s.rest))
        if isinstance(s, Snoc):
            r = self.seq(s.rest)
            return tuple(r) + (self.int(s.last),)
        raise TypeError(f"not a sequence term: {s!r}")

    def holds(self, f):
        if isinstance(f, TrueF):
            return True
        if isinstance(f, And):
            return all(self.holds(g) for g in f.items)
        if isinstance(f, Not):
            return not self.holds(f.body)
        try:
            if isinstance(f, Eq):
                return self.int(f.left) == self.int(f.right)
            if isinstance(f, Le):
                return self.int(f.left) <= self.int(f.right)
            if isinstance(f, Mem):
                return self.int(f.elem) in self.seq(f.seq)
            if isinstance(f, SeqEq):
                return seq_equal(self.seq(f.left), self.seq(f.right))
        except Undefined:
            return False
        raise TypeError(f"not a formula: {f!r}")


def eval_formula(R, H, I, phi):
    return Evaluator(R, H, I).holds(phi)


def eval_term(R, H, I, t):
    """Value of an integer term, or None when undefined."""
    try:
        return Evaluator(R, H, I).int(t)
    except Undefined:
        return None


def eval_seq(R, H, I, s):
    try:
        return tuple(Evaluator(R, H, I).seq(s))
    except Undefined:
        return None
