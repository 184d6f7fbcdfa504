"""Call inlining for non-recursive functions."""

from __future__ import annotations

from .ast import (
    Assign, BinOp, Call, For, FreshNames, If, Kernel, Program, ReadArr,
    ReadStream, Seq, Ty, Var, WriteArr, WriteStream, seq, walk,
)


class InlineError(Exception):
    pass


def rename_expr(e, m):
    if isinstance(e, Var):
        return Var(m.get(e.name, e.name))
    if isinstance(e, BinOp):
        return BinOp(e.op, rename_expr(e.left, m), rename_expr(e.right, m))
    return e


def rename_stmt(s, m):
    """Rename variables (registers and arrays alike) according to m."""
    r = lambda n: m.get(n, n)
    if isinstance(s, Seq):
        return Seq(tuple(rename_stmt(t, m) for t in s.items))
    if isinstance(s, ReadArr):
        return ReadArr(r(s.x), r(s.a), rename_expr(s.idx, m))
    if isinstance(s, WriteArr):
        return WriteArr(r(s.a), rename_expr(s.idx, m), r(s.x))
    if isinstance(s, ReadStream):
        return ReadStream(r(s.x), r(s.a))
    if isinstance(s, WriteStream):
        return WriteStream(r(s.a), r(s.x))
    if isinstance(s, Assign):
        return Assign(r(s.x), rename_expr(s.e, m))
    if isinstance(s, If):
        return If(r(s.x), rename_stmt(s.then, m), rename_stmt(s.orelse, m))
    if isinstance(s, For):
        return For(r(s.x), rename_expr(s.init, m), rename_expr(s.bound, m), s.step,
                   rename_stmt(s.body, m), s.annot and _rename_annot(s.annot, m))
    if isinstance(s, Kernel):
        return Kernel(rename_stmt(s.body, m))
    if isinstance(s, Call):
        return Call(s.name, tuple(rename_expr(a, m) for a in s.args))
    raise TypeError(s)


def _rename_annot(text, m):
    import re
    return re.sub(r"[A-Za-z_][A-Za-z0-9_]*", lambda mo: m.get(mo.group(), mo.group()), text)


def check_acyclic(funcs):
    graph = {n: [t.name for t in walk(f.body) if isinstance(t, Call)]
             for n, f in funcs.items()}
    state = {}

    def visit(n, path):
        if state.get(n) == 1:
            cyc = path[path.index(n):] + [n]
            raise InlineError(f"recursive call detected: {' -> '.join(cyc)}")
        if state.get(n) == 2:
            return
        state[n] = 1
        for m in graph.get(n, ()):
            if m in graph:
                visit(m, path + [n])
        state[n] = 2

    for n in sorted(graph):
        visit(n, [])


def inline(p):
    """Expand every call; returns a Program without functions."""
    check_acyclic(p.funcs)
    if not p.funcs and not any(isinstance(t, Call) for t in walk(p.main)):
        return p
    taken = set(p.decls) | set(p.params)
    for f in p.funcs.values():
        taken |= set(f.decls) | {n for _, n in f.params}
    fresh = FreshNames(taken)
    decls = dict(p.decls)

    def expand(s, stack):
        if isinstance(s, Call):
            return expand_call(s, stack)
        if isinstance(s, Seq):
            return seq(*(expand(t, stack) for t in s.items)) if s.items else s
        if isinstance(s, If):
            return If(s.x, _block(expand(s.then, stack)), _block(expand(s.orelse, stack)))
        if isinstance(s, For):
            return For(s.x, s.init, s.bound, s.step, _block(expand(s.body, stack)), s.annot)
        if isinstance(s, Kernel):
            return Kernel(_block(expand(s.body, stack)))
        return s

    def expand_call(c, stack):
        f = p.funcs.get(c.name)
        if f is None:
            raise InlineError(f"call to undefined function {c.name!r}")
        if c.name in stack:
            cycle = " -> ".join(stack[stack.index(c.name):] + (c.name,))
            raise InlineError(f"recursive call detected: {cycle}")
        if len(c.args) != len(f.params):
            raise InlineError(f"{c.name} expects {len(f.params)} arguments, got {len(c.args)}")
        m, pre = {}, []
        for (ty, name), arg in zip(f.params, c.args):
            if ty.is_array:
                if not isinstance(arg, Var):
                    raise InlineError(f"array argument {name!r} of {c.name} must be a variable")
                m[name] = arg.name
            else:
                local = fresh(f"{c.name}_{name}")
                decls[local] = Ty.INT
                m[name] = local
                pre.append(Assign(local, arg))
        for name, ty in f.decls.items():
            local = fresh(f"{c.name}_{name}")
            decls[local] = ty
            m[name] = local
        body = rename_stmt(f.body, m)
        return seq(*pre, expand(body, stack + (c.name,)))

    main = _block(expand(p.main, ()))
    return Program(decls, p.params, p.requires, {}, main)


def _block(s):
    return s if isinstance(s, Seq) else Seq((s,))
