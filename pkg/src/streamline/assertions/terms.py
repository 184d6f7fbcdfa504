"""Assertion terms and formulas over registers, arrays and index sequences."""

from __future__ import annotations

from dataclasses import dataclass

from ..frontend.ast import BinOp, Const, Var


# ---------------------------------------------------------------- integer terms

@dataclass(frozen=True)
class IVar:
    name: str


@dataclass(frozen=True)
class IConst:
    value: int


@dataclass(frozen=True)
class Select:
    arr: "ArrayTerm"
    idx: "IntTerm"


@dataclass(frozen=True)
class Op:
    op: str
    left: "IntTerm"
    right: "IntTerm"


@dataclass(frozen=True)
class Head:
    seq: "SeqTerm"


# ------------------------------------------------------------------ array terms

@dataclass(frozen=True)
class ArrVar:
    name: str


@dataclass(frozen=True)
class Update:
    base: "ArrayTerm"
    idx: "IntTerm"
    val: "IntTerm"


# --------------------------------------------------------- index sequence terms

@dataclass(frozen=True)
class SeqVar:
    name: str  # the array whose index sequence this is


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Cons:
    head: "IntTerm"
    rest: "SeqTerm"


@dataclass(frozen=True)
class Snoc:
    rest: "SeqTerm"
    last: "IntTerm"


@dataclass(frozen=True)
class Tail:
    rest: "SeqTerm"


@dataclass(frozen=True)
class Range:
    """Arithmetic progression [low, high; step]."""
    low: "IntTerm"
    high: "IntTerm"
    step: "IntTerm"


# --------------------------------------------------------------------- formulas

@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class Eq:
    left: "IntTerm"
    right: "IntTerm"


@dataclass(frozen=True)
class Le:
    left: "IntTerm"
    right: "IntTerm"


@dataclass(frozen=True)
class Mem:
    elem: "IntTerm"
    seq: "SeqTerm"


@dataclass(frozen=True)
class SeqEq:
    left: "SeqTerm"
    right: "SeqTerm"


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Not:
    body: "Formula"


IntTerm = IVar | IConst | Select | Op | Head
ArrayTerm = ArrVar | Update
SeqTerm = SeqVar | Nil | Cons | Snoc | Tail | Range
Formula = TrueF | Eq | Le | Mem | SeqEq | And | Not

INT_TERMS = (IVar, IConst, Select, Op, Head)
ARRAY_TERMS = (ArrVar, Update)
SEQ_TERMS = (SeqVar, Nil, Cons, Snoc, Tail, Range)
FORMULAS = (TrueF, Eq, Le, Mem, SeqEq, And, Not)

TRUE = TrueF()
NIL = Nil()


def embed(e):
    """Program expression as an integer term."""
    if isinstance(e, Const):
        return IConst(e.value)
    if isinstance(e, Var):
        return IVar(e.name)
    if isinstance(e, BinOp):
        return Op(e.op, embed(e.left), embed(e.right))
    if isinstance(e, INT_TERMS):
        return e
    raise TypeError(f"cannot embed {e!r}")


def conj(*fs):
    """Conjunction, flattening nested Ands and dropping True."""
    out = []
    for f in fs:
        if isinstance(f, And):
            out.extend(f.items)
        elif isinstance(f, TrueF) or f is None:
            continue
        else:
            out.append(f)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def neg(f):
    if isinstance(f, Not):
        return f.body
    return Not(f)


def implies(a, b):
    return Not(conj(a, Not(b)))


def ne(a, b):
    return Not(Eq(a, b))


def lt(a, b):
    return Not(Le(b, a))


def conjuncts(f):
    if isinstance(f, And):
        out = []
        for g in f.items:
            out.extend(conjuncts(g))
        return out
    if isinstance(f, TrueF):
        return []
    return [f]


def plus(t, n):
    if n == 0:
        return t
    if n > 0:
        return Op("+", t, IConst(n))
    return Op("-", t, IConst(-n))


# ------------------------------------------------------------------ traversal

def free_vars(x, acc=None):
    """Return (int vars, array vars, seq vars) occurring in a term or formula."""
    if acc is None:
        acc = (set(), set(), set())
    ints, arrs, seqs = acc
    if isinstance(x, IVar):
        ints.add(x.name)
    elif isinstance(x, ArrVar):
        arrs.add(x.name)
    elif isinstance(x, SeqVar):
        seqs.add(x.name)
    elif isinstance(x, (IConst, Nil, TrueF)):
        pass
    elif isinstance(x, And):
        for f in x.items:
            free_vars(f, acc)
    else:
        for c in _children(x):
            free_vars(c, acc)
    return acc


def _children(x):
    if isinstance(x, Select):
        return (x.arr, x.idx)
    if isinstance(x, Op):
        return (x.left, x.right)
    if isinstance(x, Head):
        return (x.seq,)
    if isinstance(x, Update):
        return (x.base, x.idx, x.val)
    if isinstance(x, Cons):
        return (x.head, x.rest)
    if isinstance(x, Snoc):
        return (x.rest, x.last)
    if isinstance(x, Tail):
        return (x.rest,)
    if isinstance(x, Range):
        return (x.low, x.high, x.step)
    if isinstance(x, (Eq, Le)):
        return (x.left, x.right)
    if isinstance(x, Mem):
        return (x.elem, x.seq)
    if isinstance(x, SeqEq):
        return (x.left, x.right)
    if isinstance(x, And):
        return x.items
    if isinstance(x, Not):
        return (x.body,)
    return ()


def subterms(x):
    yield x
    for c in _children(x):
        yield from subterms(c)


def int_consts(x):
    return [t for t in subterms(x) if isinstance(t, IConst)]
