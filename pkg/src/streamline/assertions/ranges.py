"""Linear expressions, arithmetic-progression index ranges and the
restricted assertion shape used for inference."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..frontend.ast import BinOp, Const, Var
from .terms import (
    And, ArrVar, Eq, IConst, IVar, Le, Not, Op, Range, Select, SeqEq,
    SeqVar, conj,
)


@dataclass(frozen=True)
class LinExpr:
    const: int = 0
    coeffs: tuple = ()  # sorted ((var, c), ...) with c != 0

    @staticmethod
    def make(const=0, coeffs=None):
        items = tuple(sorted((v, c) for v, c in (coeffs or {}).items() if c))
        return LinExpr(const, items)

    @staticmethod
    def var(name, c=1):
        return LinExpr.make(0, {name: c})

    @property
    def cmap(self):
        return dict(self.coeffs)

    @property
    def vars(self):
        return {v for v, _ in self.coeffs}

    def is_const(self):
        return not self.coeffs

    def __add__(self, other):
        if isinstance(other, int):
            return LinExpr(self.const + other, self.coeffs)
        m = self.cmap
        for v, c in other.coeffs:
            m[v] = m.get(v, 0) + c
        return LinExpr.make(self.const + other.const, m)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if isinstance(other, int):
            return self + (-other)
        return self + (-other)

    def scale(self, k):
        return LinExpr.make(self.const * k, {v: c * k for v, c in self.coeffs})

    def coeff(self, v):
        return self.cmap.get(v, 0)

    def subst(self, m):
        """Replace variables by LinExprs."""
        out = LinExpr(self.const)
        for v, c in self.coeffs:
            out = out + (m[v].scale(c) if v in m else LinExpr.var(v, c))
        return out

    def eval(self, env):
        return self.const + sum(c * env[v] for v, c in self.coeffs)

    def to_term(self):
        t = None
        for v, c in self.coeffs:
            if t is None:
                t = IVar(v) if c == 1 else Op("*", IConst(c), IVar(v))
            elif c == 1:
                t = Op("+", t, IVar(v))
            elif c == -1:
                t = Op("-", t, IVar(v))
            elif c > 0:
                t = Op("+", t, Op("*", IConst(c), IVar(v)))
            else:
                t = Op("-", t, Op("*", IConst(-c), IVar(v)))
        if t is None:
            return IConst(self.const)
        if self.const > 0:
            return Op("+", t, IConst(self.const))
        if self.const < 0:
            return Op("-", t, IConst(-self.const))
        return t

    def to_expr(self):
        """As a program expression (nested BinOps allowed)."""
        e = None
        for v, c in self.coeffs:
            term = Var(v) if abs(c) == 1 else BinOp("*", Const(abs(c)), Var(v))
            if e is None:
                e = term if c > 0 else BinOp("-", Const(0), term)
            else:
                e = BinOp("+" if c > 0 else "-", e, term)
        if e is None:
            return Const(self.const)
        if self.const:
            e = BinOp("+" if self.const > 0 else "-", e, Const(abs(self.const)))
        return e

    def __str__(self):
        from .text import fmt_int
        return fmt_int(self.to_term())


def linear_of_term(t):
    """LinExpr for a linear integer term, or None."""
    if isinstance(t, IConst):
        return LinExpr(t.value)
    if isinstance(t, IVar):
        return LinExpr.var(t.name)
    if isinstance(t, Op):
        a, b = linear_of_term(t.left), linear_of_term(t.right)
        if a is None or b is None:
            return None
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        if t.op == "*":
            if a.is_const():
                return b.scale(a.const)
            if b.is_const():
                return a.scale(b.const)
    return None


def linear_of_expr(e, env=None):
    """LinExpr for a program expression; env maps temporaries to LinExprs."""
    env = env or {}
    if isinstance(e, Const):
        return LinExpr(e.value)
    if isinstance(e, Var):
        if e.name in env:
            return env[e.name]
        return LinExpr.var(e.name)
    if isinstance(e, BinOp):
        a, b = linear_of_expr(e.left, env), linear_of_expr(e.right, env)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            if a.is_const():
                return b.scale(a.const)
            if b.is_const():
                return a.scale(b.const)
    return None


@dataclass(frozen=True)
class IndexRange:
    low: LinExpr
    high: LinExpr
    step: LinExpr

    def term(self):
        return Range(self.low.to_term(), self.high.to_term(), self.step.to_term())

    def __str__(self):
        return f"[{self.low}, {self.high}; {self.step}]"


class RangeError(ValueError):
    pass


def range_to_formula(x, r, polarity="in"):
    """Membership of x in [low, high; step] as linear arithmetic plus a
    divisibility atom.  The step must be a constant."""
    if isinstance(r, IndexRange):
        lo, hi, st = r.low.to_term(), r.high.to_term(), r.step
        if not st.is_const():
            raise RangeError("symbolic step")
        s = st.const
    else:
        lo, hi = r.low, r.high
        step = linear_of_term(r.step)
        if step is None or not step.is_const():
            raise RangeError("symbolic step")
        s = step.const
    if s == 0:
        raise RangeError("zero step")
    if s > 0:
        parts = [Le(lo, x), Le(x, hi)]
        if s != 1:
            parts.append(Eq(Op("%", Op("-", x, lo), IConst(s)), IConst(0)))
    else:
        parts = [Le(hi, x), Le(x, lo)]
        if s != -1:
            parts.append(Eq(Op("%", Op("-", lo, x), IConst(-s)), IConst(0)))
    f = And(tuple(parts))
    return f if polarity == "in" else Not(f)


@dataclass
class RestrictedAssertion:
    ranges: dict = field(default_factory=dict)        # array -> IndexRange
    buffer_facts: list = field(default_factory=list)  # (buf, array, LinExpr)
    loop_facts: list = field(default_factory=list)    # Formulas

    def to_formula(self):
        return restricted_to_formula(self)


def restricted_to_formula(ra):
    parts = [SeqEq(SeqVar(a), r.term()) for a, r in sorted(ra.ranges.items())]
    parts += [Eq(IVar(b), Select(ArrVar(a), i.to_term())) for b, a, i in ra.buffer_facts]
    parts += list(ra.loop_facts)
    return conj(*parts)
