"""Lexer and recursive-descent parser for ``.hdsl`` programs.

Source-level expressions may nest; they are flattened into the
two-operand form with fresh ``_t`` temporaries as the statements are
built.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    Assign, BinOp, Call, Const, For, FreshNames, Func, If, Kernel, Program,
    ReadArr, ReadStream, Seq, Ty, Var, WriteArr, WriteStream, assigned_vars,
    expr_vars, is_atom, seq,
)


class ParseError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


RESERVED = {"int", "rarr", "warr", "buf", "param", "requires", "for", "if",
            "else", "kernel", "func", "call"}

TYPE_WORDS = {"int": Ty.INT, "rarr": Ty.RARR, "warr": Ty.WARR, "buf": Ty.BUF}

_TOKEN_RE = re.compile(r"""
    (?P<annot>//@[^\n]*)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<ws>[ \t\r\n]+)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|\+=|-=|&&|[-+*/%<>=(){}\[\];,.!])
""", re.VERBOSE | re.DOTALL)


@dataclass
class Token:
    kind: str   # num, ident, op, annot, eof
    text: str
    line: int
    col: int


def tokenize(text):
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "annot":
            toks.append(Token("annot", chunk[3:].strip(), line, col))
        elif kind not in ("comment", "ws"):
            toks.append(Token(kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


# Raw (nested) expression nodes used only while parsing.
@dataclass(frozen=True)
class _ArrRef:
    a: str
    idx: object


@dataclass(frozen=True)
class _Raw:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class _Neg:
    e: object


class _Scope:
    """Declarations being collected: globals or a function's locals."""

    def __init__(self, decls, fresh):
        self.decls = decls
        self.fresh = fresh

    def temp(self):
        name = self.fresh("_t")
        self.decls[name] = Ty.INT
        return name


class Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0
        self.kernel_depth = 0
        names = {t.text for t in self.toks if t.kind == "ident"}
        self.fresh = FreshNames(names)

    # -- token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def at(self, text):
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def eat(self, text):
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        if t.text in RESERVED:
            self.error(f"reserved word {t.text!r} used as identifier")
        self.i += 1
        return t.text

    def number(self):
        neg = False
        if self.at("-"):
            self.i += 1
            neg = True
        t = self.tok
        if t.kind != "num":
            self.error("expected integer literal")
        self.i += 1
        return -int(t.text) if neg else int(t.text)

    # -- program level
    def parse_program(self):
        prog = Program()
        scope = _Scope(prog.decls, self.fresh)
        params, requires, stmts = [], [], []
        while self.tok.kind != "eof":
            if self.at("param"):
                self.i += 1
                for n in self.ident_list():
                    params.append(n)
            elif self.at("requires"):
                self.i += 1
                requires.append(self.requires_clause())
                while self.at(","):
                    self.i += 1
                    requires.append(self.requires_clause())
                self.eat(";")
            elif self.at("func"):
                f = self.func()
                if f.name in prog.funcs:
                    self.error(f"function {f.name!r} defined twice")
                prog.funcs[f.name] = f
            else:
                s = self.stmt(scope)
                if s is not None:
                    stmts.append(s)
        prog.params = tuple(params)
        prog.requires = tuple(requires)
        prog.main = _as_block(seq(*stmts))
        return prog

    def ident_list(self):
        names = [self.ident()]
        while self.at(","):
            self.i += 1
            names.append(self.ident())
        self.eat(";")
        return names

    def requires_clause(self):
        tok = self.tok
        e = self.expr()
        if not (isinstance(e, _Raw) and e.op in ("<", "<=", ">", ">=", "==")):
            self.error("requires clause must be a comparison", tok)
        return _fold_cmp(e)

    def func(self):
        self.eat("func")
        name = self.ident()
        self.eat("(")
        params = []
        if not self.at(")"):
            while True:
                t = self.tok
                if t.text not in TYPE_WORDS or t.text == "buf":
                    self.error("expected parameter type")
                self.i += 1
                params.append((TYPE_WORDS[t.text], self.ident()))
                if not self.at(","):
                    break
                self.i += 1
        self.eat(")")
        decls = {}
        scope = _Scope(decls, self.fresh)
        body = self.block(scope)
        return Func(name, tuple(params), decls, body)

    # -- statements
    def block(self, scope):
        self.eat("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block")
            s = self.stmt(scope)
            if s is not None:
                stmts.append(s)
        self.eat("}")
        return _as_block(seq(*stmts))

    def stmt(self, scope):
        t = self.tok
        if t.kind == "annot":
            return self.annotated_for(scope)
        if t.kind == "ident" and t.text in TYPE_WORDS:
            ty = TYPE_WORDS[t.text]
            self.i += 1
            for n in self.ident_list():
                scope.decls[n] = ty
            return None
        if self.at("param") or self.at("requires") or self.at("func"):
            self.error(f"{t.text!r} is only allowed at top level")
        if self.at("for"):
            return self.for_stmt(scope, None)
        if self.at("if"):
            return self.if_stmt(scope)
        if self.at("kernel"):
            self.i += 1
            if self.kernel_depth:
                self.error("kernel blocks cannot be nested", t)
            self.kernel_depth += 1
            body = self.block(scope)
            self.kernel_depth -= 1
            return Kernel(body)
        if self.at("call"):
            self.i += 1
            return self.call_rest(scope, self.ident())
        if self.at("{"):
            return self.block(scope)
        if t.kind == "ident":
            return self.simple_stmt(scope)
        self.error(f"unexpected {t.text or 'end of input'!r}")

    def annotated_for(self, scope):
        texts = []
        while self.tok.kind == "annot":
            txt = self.tok.text
            if txt.startswith("invariant"):
                txt = txt[len("invariant"):].strip()
            texts.append(txt)
            self.i += 1
        if not self.at("for"):
            self.error("an invariant annotation must precede a for loop")
        return self.for_stmt(scope, " && ".join(texts))

    def for_stmt(self, scope, annot):
        self.eat("for")
        self.eat("(")
        x = self.ident()
        self.eat("=")
        init_pre, init = self.norm_expr(self.expr(), scope)
        self.eat(";")
        tok = self.tok
        if self.ident() != x:
            self.error("loop condition must test the loop variable", tok)
        self.eat("!=")
        bound_pre, bound = self.norm_expr(self.expr(), scope)
        self.eat(";")
        tok = self.tok
        if self.ident() != x:
            self.error("loop increment must update the loop variable", tok)
        if self.at("+="):
            self.i += 1
            step = self.number()
        elif self.at("-="):
            self.i += 1
            step = -self.number()
        else:
            self.error("expected += or -=")
        if step == 0:
            self.error("loop step must be nonzero", tok)
        self.eat(")")
        body = self.block(scope)
        if bound_pre:
            src = set()
            for s in bound_pre:
                src |= _rhs_vars(s)
            if src & assigned_vars(body):
                self.error("loop bound depends on variables modified in the body; "
                           "compute it in a temporary first", tok)
        loop = For(x, init, bound, step, body, annot)
        return seq(*init_pre, *bound_pre, loop)

    def if_stmt(self, scope):
        self.eat("if")
        self.eat("(")
        pre, cond = self.cond_var(self.expr(), scope)
        self.eat(")")
        then = self.block(scope)
        orelse = Seq(())
        if self.at("else"):
            self.i += 1
            if self.at("if"):
                orelse = _as_block(self.if_stmt(scope))
            else:
                orelse = self.block(scope)
        return seq(*pre, If(cond, then, orelse))

    def cond_var(self, raw, scope):
        if isinstance(raw, str):
            return [], raw
        pre, e = self.norm_expr(raw, scope)
        if isinstance(e, Var):
            return pre, e.name
        t = scope.temp()
        return pre + [Assign(t, e)], t

    def call_rest(self, scope, name):
        self.eat("(")
        pre, args = [], []
        if not self.at(")"):
            while True:
                p, a = self.atomize(self.expr(), scope)
                pre += p
                args.append(a)
                if not self.at(","):
                    break
                self.i += 1
        self.eat(")")
        self.eat(";")
        return seq(*pre, Call(name, tuple(args)))

    def simple_stmt(self, scope):
        name = self.ident()
        if self.at("("):
            return self.call_rest(scope, name)
        if self.at("."):
            self.i += 1
            tok = self.tok
            meth = self.tok.text
            self.i += 1
            if meth != "write":
                self.error(f"unknown stream operation {meth!r}", tok)
            self.eat("(")
            pre, v = self.var_of(self.expr(), scope)
            self.eat(")")
            self.eat(";")
            return seq(*pre, WriteStream(name, v))
        if self.at("["):
            self.i += 1
            ipre, idx = self.norm_expr(self.expr(), scope)
            self.eat("]")
            self.assign_op()
            vpre, v = self.var_of(self.expr(), scope)
            self.eat(";")
            return seq(*ipre, *vpre, WriteArr(name, idx, v))
        self.assign_op()
        # x := a.read()
        if self.tok.kind == "ident" and self.peek().text == "." and self.peek(2).text == "read":
            a = self.ident()
            self.eat(".")
            self.i += 1
            self.eat("(")
            self.eat(")")
            self.eat(";")
            return ReadStream(name, a)
        raw = self.expr()
        self.eat(";")
        if isinstance(raw, _ArrRef):
            pre, idx = self.norm_expr(raw.idx, scope)
            return seq(*pre, ReadArr(name, raw.a, idx))
        pre, e = self.norm_expr(raw, scope)
        return seq(*pre, Assign(name, e))

    def assign_op(self):
        if self.at(":=") or self.at("="):
            self.i += 1
        else:
            self.error("expected ':='")

    # -- expressions (raw trees)
    def expr(self):
        return self.binary(0)

    _LEVELS = [("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]

    def binary(self, level):
        if level == len(self._LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in self._LEVELS[level]:
            op = self.tok.text
            self.i += 1
            right = self.binary(level + 1)
            left = _Raw(op, left, right)
        return left

    def unary(self):
        if self.at("-"):
            self.i += 1
            inner = self.unary()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return _Neg(inner)
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Const(int(t.text))
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.eat(")")
            return e
        if t.kind == "ident":
            name = self.ident()
            if self.at("["):
                self.i += 1
                idx = self.expr()
                self.eat("]")
                return _ArrRef(name, idx)
            return Var(name)
        self.error(f"unexpected {t.text or 'end of input'!r} in expression")

    # -- normalization into two-operand form
    def norm_expr(self, raw, scope):
        if isinstance(raw, (Const, Var)):
            return [], raw
        if isinstance(raw, _ArrRef):
            pre, idx = self.norm_expr(raw.idx, scope)
            t = scope.temp()
            return pre + [ReadArr(t, raw.a, idx)], Var(t)
        if isinstance(raw, _Neg):
            pre, a = self.atomize(raw.e, scope)
            return pre, BinOp("-", Const(0), a)
        op = raw.op
        lpre, l = self.atomize(raw.left, scope)
        rpre, r = self.atomize(raw.right, scope)
        pre = lpre + rpre
        if op == ">":
            return pre, BinOp("<", r, l)
        if op == ">=":
            return pre, BinOp("<=", r, l)
        if op == "==":
            return pre, BinOp("=", l, r)
        if op == "!=":
            t = scope.temp()
            return pre + [Assign(t, BinOp("=", l, r))], BinOp("-", Const(1), Var(t))
        return pre, BinOp(op, l, r)

    def atomize(self, raw, scope):
        pre, e = self.norm_expr(raw, scope)
        if is_atom(e):
            return pre, e
        t = scope.temp()
        return pre + [Assign(t, e)], Var(t)

    def var_of(self, raw, scope):
        pre, a = self.atomize(raw, scope)
        if isinstance(a, Var):
            return pre, a.name
        t = scope.temp()
        return pre + [Assign(t, a)], t


def _rhs_vars(s):
    if isinstance(s, Assign):
        return expr_vars(s.e)
    if isinstance(s, ReadArr):
        return expr_vars(s.idx) | {s.a}
    return set()


def _fold_cmp(raw):
    """requires-clauses keep nesting; only the comparison is canonicalized."""
    def conv(r):
        if isinstance(r, (Const, Var)):
            return r
        if isinstance(r, _Neg):
            return BinOp("-", Const(0), conv(r.e))
        if isinstance(r, _ArrRef):
            raise ParseError("array access in requires clause")
        if r.op in ("<", "<=", ">", ">=", "==", "!="):
            raise ParseError("nested comparison in requires clause")
        return BinOp(r.op, conv(r.left), conv(r.right))

    l, r = conv(raw.left), conv(raw.right)
    if raw.op == ">":
        return BinOp("<", r, l)
    if raw.op == ">=":
        return BinOp("<=", r, l)
    if raw.op == "==":
        return BinOp("=", l, r)
    return BinOp(raw.op, l, r)


def _as_block(s):
    return s if isinstance(s, Seq) else Seq((s,))


def parse(text):
    """Parse program text into a Program (calls not yet inlined)."""
    return Parser(text).parse_program()


def parse_stmt(text):
    """Parse a bare statement list (used for derivation files)."""
    p = Parser(text)
    scope = _Scope({}, p.fresh)
    stmts = []
    while p.tok.kind != "eof":
        s = p.stmt(scope)
        if s is not None:
            stmts.append(s)
    if scope.decls:
        raise ParseError("statement text needed normalization temporaries")
    return seq(*stmts) if len(stmts) != 1 else stmts[0]
