"""Canonical pretty-printer: 2-space indent, one statement per line."""

from __future__ import annotations

from .ast import (
    Assign, BinOp, Call, Const, For, If, Kernel, ReadArr, ReadStream, Seq, Ty,
    Var, WriteArr, WriteStream,
)

_OP_TEXT = {"=": "=="}


def fmt_expr(e, nested=False):
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        op = _OP_TEXT.get(e.op, e.op)
        text = f"{fmt_expr(e.left, True)} {op} {fmt_expr(e.right, True)}"
        return f"({text})" if nested else text
    raise TypeError(f"not an expression: {e!r}")


def fmt_stmt(s, indent=0):
    return "\n".join(_lines(s, indent))


def _lines(s, ind):
    pad = "  " * ind
    if isinstance(s, Seq):
        out = []
        for t in s.items:
            out.extend(_lines(t, ind))
        return out
    if isinstance(s, ReadArr):
        return [f"{pad}{s.x} := {s.a}[{fmt_expr(s.idx)}];"]
    if isinstance(s, WriteArr):
        return [f"{pad}{s.a}[{fmt_expr(s.idx)}] := {s.x};"]
    if isinstance(s, ReadStream):
        return [f"{pad}{s.x} := {s.a}.read();"]
    if isinstance(s, WriteStream):
        return [f"{pad}{s.a}.write({s.x});"]
    if isinstance(s, Assign):
        return [f"{pad}{s.x} := {fmt_expr(s.e)};"]
    if isinstance(s, Call):
        args = ", ".join(fmt_expr(a) for a in s.args)
        return [f"{pad}call {s.name}({args});"]
    if isinstance(s, If):
        out = [f"{pad}if ({s.x}) {{"]
        out += _lines(s.then, ind + 1)
        if isinstance(s.orelse, Seq) and not s.orelse.items:
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}}} else {{")
            out += _lines(s.orelse, ind + 1)
            out.append(f"{pad}}}")
        return out
    if isinstance(s, For):
        out = []
        if s.annot:
            out.append(f"{pad}//@ invariant {s.annot}")
        inc = f"+= {s.step}" if s.step > 0 else f"-= {-s.step}"
        out.append(f"{pad}for ({s.x} = {fmt_expr(s.init)}; {s.x} != {fmt_expr(s.bound)}; "
                   f"{s.x} {inc}) {{")
        out += _lines(s.body, ind + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, Kernel):
        return [f"{pad}kernel {{", *_lines(s.body, ind + 1), f"{pad}}}"]
    raise TypeError(f"not a statement: {s!r}")


_DECL_ORDER = (Ty.RARR, Ty.WARR, Ty.INT, Ty.BUF)


def fmt_decls(decls, skip=()):
    out = []
    for ty in _DECL_ORDER:
        names = [n for n, t in decls.items() if t is ty and n not in skip]
        if names:
            out.append(f"{ty.value} {', '.join(names)};")
    return out


def fmt_program(p):
    lines = []
    if p.params:
        lines.append(f"param {', '.join(p.params)};")
    for r in p.requires:
        lines.append(f"requires {fmt_expr(r)};")
    lines += fmt_decls(p.decls)
    for f in p.funcs.values():
        ps = ", ".join(f"{t.value} {n}" for t, n in f.params)
        lines.append(f"func {f.name}({ps}) {{")
        lines += ["  " + d for d in fmt_decls(f.decls)]
        lines += _lines(f.body, 1)
        lines.append("}")
    lines += _lines(p.main, 0)
    return "\n".join(lines) + "\n"
