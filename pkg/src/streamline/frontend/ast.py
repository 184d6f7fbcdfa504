"""Abstract syntax for the source/target DSL.

Expressions follow the two-operand grammar ``e ::= n | x | x op y``; we
also allow an integer literal in operand position (``x + 1``, ``z0 / 2``).
Anything deeper is split into temporaries by the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Ty(Enum):
    INT = "int"
    BUF = "buf"
    RARR = "rarr"
    WARR = "warr"

    def flipped(self):
        if self is Ty.RARR:
            return Ty.WARR
        if self is Ty.WARR:
            return Ty.RARR
        return self

    @property
    def is_array(self):
        return self in (Ty.RARR, Ty.WARR)


# '=' is equality, '<=' is less-or-equal; both yield 0/1 like '<'.
ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("<", "=", "<=")
OPS = ARITH_OPS + CMP_OPS


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Const | Var | BinOp


def is_atom(e):
    return isinstance(e, (Const, Var))


def expr_vars(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    return set()


# ----------------------------------------------------------------- statements

@dataclass(frozen=True)
class ReadArr:
    x: str
    a: str
    idx: Expr


@dataclass(frozen=True)
class WriteArr:
    a: str
    idx: Expr
    x: str


@dataclass(frozen=True)
class ReadStream:
    x: str
    a: str


@dataclass(frozen=True)
class WriteStream:
    a: str
    x: str


@dataclass(frozen=True)
class Assign:
    x: str
    e: Expr


@dataclass(frozen=True)
class Seq:
    """n-ary sequence; ``Seq(())`` plays the role of skip."""
    items: tuple = ()


@dataclass(frozen=True)
class If:
    x: str
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class For:
    x: str
    init: Expr
    bound: Expr
    step: int
    body: "Stmt"
    # user annotation text, not part of structural identity
    annot: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Kernel:
    body: "Stmt"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple  # of Expr (array arguments are Var)


Stmt = ReadArr | WriteArr | ReadStream | WriteStream | Assign | Seq | If | For | Kernel | Call

SKIP = Seq(())


def seq(*stmts):
    """Build a flattened sequence; a single statement is returned as is."""
    out = []
    for s in stmts:
        if isinstance(s, Seq):
            out.extend(s.items)
        elif s is not None:
            out.append(s)
    if len(out) == 1:
        return out[0]
    return Seq(tuple(out))


def items_of(s):
    if isinstance(s, Seq):
        return s.items
    return (s,)


def children(s):
    if isinstance(s, Seq):
        return s.items
    if isinstance(s, If):
        return (s.then, s.orelse)
    if isinstance(s, (For, Kernel)):
        return (s.body,)
    return ()


def walk(s):
    yield s
    for c in children(s):
        yield from walk(c)


def assigned_vars(s):
    """Registers possibly written by s (loop variables included)."""
    out = set()
    for t in walk(s):
        if isinstance(t, (ReadArr, ReadStream, Assign)):
            out.add(t.x)
        elif isinstance(t, For):
            out.add(t.x)
    return out


def used_vars(s):
    out = set()
    for t in walk(s):
        if isinstance(t, ReadArr):
            out |= expr_vars(t.idx)
        elif isinstance(t, WriteArr):
            out |= expr_vars(t.idx) | {t.x}
        elif isinstance(t, WriteStream):
            out.add(t.x)
        elif isinstance(t, Assign):
            out |= expr_vars(t.e)
        elif isinstance(t, If):
            out.add(t.x)
        elif isinstance(t, For):
            out |= expr_vars(t.init) | expr_vars(t.bound) | {t.x}
        elif isinstance(t, Call):
            for a in t.args:
                out |= expr_vars(a)
    return out


def arrays_of(s):
    out = set()
    for t in walk(s):
        if isinstance(t, (ReadArr, WriteArr, ReadStream, WriteStream)):
            out.add(t.a)
    return out


def has_stream_ops(s):
    return any(isinstance(t, (ReadStream, WriteStream)) for t in walk(s))


# ------------------------------------------------------------------- programs

@dataclass(frozen=True)
class Func:
    name: str
    params: tuple  # of (Ty, name)
    decls: dict
    body: Stmt


@dataclass
class Program:
    decls: dict = field(default_factory=dict)   # name -> Ty (params excluded)
    params: tuple = ()                          # symbolic constants, INT-typed
    requires: tuple = ()                        # comparison Exprs over params
    funcs: dict = field(default_factory=dict)   # name -> Func
    main: Stmt = SKIP

    def ty(self, name):
        if name in self.params:
            return Ty.INT
        return self.decls.get(name)

    def arrays(self):
        return [n for n, t in self.decls.items() if t.is_array]

    def with_main(self, main, extra_decls=None):
        decls = dict(self.decls)
        if extra_decls:
            decls.update(extra_decls)
        return Program(decls, self.params, self.requires, dict(self.funcs), main)


@dataclass
class TypeEnv:
    bindings: dict = field(default_factory=dict)
    params: tuple = ()
    requires: tuple = ()

    def __getitem__(self, name):
        return self.bindings[name]

    def get(self, name, default=None):
        return self.bindings.get(name, default)

    def __contains__(self, name):
        return name in self.bindings

    def flip(self):
        return TypeEnv({k: v.flipped() for k, v in self.bindings.items()},
                       self.params, self.requires)

    def restrict(self, names):
        return TypeEnv({k: v for k, v in self.bindings.items() if k in names},
                       self.params, self.requires)

    def to_json(self):
        return {k: self.bindings[k].value for k in sorted(self.bindings)}

    @staticmethod
    def from_json(d, params=()):
        return TypeEnv({k: Ty(v) for k, v in d.items()}, tuple(params))


def flip(env):
    return env.flip()


class FreshNames:
    """Deterministic fresh-name supply avoiding a set of taken names."""

    def __init__(self, taken=()):
        self.taken = set(taken)
        self.counters = {}

    def __call__(self, prefix):
        k = self.counters.get(prefix, 0)
        while f"{prefix}{k}" in self.taken:
            k += 1
        name = f"{prefix}{k}"
        self.counters[prefix] = k + 1
        self.taken.add(name)
        return name

    def reserve(self, name):
        self.taken.add(name)
