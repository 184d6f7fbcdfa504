"""Peephole removal of single-use stream buffers:

    b := a.read(); x := b    ->  x := a.read()
    b := x; a.write(b)       ->  a.write(x)

applied only when b is a buffer that is dead afterwards."""

from __future__ import annotations

from ..frontend.ast import (
    Assign, For, If, Kernel, ReadArr, ReadStream, Seq, Ty, Var, WriteArr,
    WriteStream, expr_vars,
)


def _uses_defs(s):
    if isinstance(s, ReadArr):
        return expr_vars(s.idx), {s.x}
    if isinstance(s, WriteArr):
        return expr_vars(s.idx) | {s.x}, set()
    if isinstance(s, ReadStream):
        return set(), {s.x}
    if isinstance(s, WriteStream):
        return {s.x}, set()
    if isinstance(s, Assign):
        return expr_vars(s.e), {s.x}
    raise TypeError(s)


def live_in(s, out):
    """Registers live before s given those live after it (over-approximate)."""
    if isinstance(s, Seq):
        for t in reversed(s.items):
            out = live_in(t, out)
        return out
    if isinstance(s, If):
        return live_in(s.then, out) | live_in(s.orelse, out) | {s.x}
    if isinstance(s, Kernel):
        return live_in(s.body, out)
    if isinstance(s, For):
        head = set(out) | expr_vars(s.bound) | {s.x}
        while True:
            new = head | live_in(s.body, head)
            if new == head:
                break
            head = new
        return (head - {s.x}) | expr_vars(s.init)
    uses, defs = _uses_defs(s)
    return (set(out) - defs) | uses


def simplify(p):
    """Return p with the two buffer peepholes applied everywhere."""
    bufs = {n for n, t in p.decls.items() if t is Ty.BUF}
    main = _block(p.main, set(), bufs)
    used = _all_names(main)
    decls = {n: t for n, t in p.decls.items() if t is not Ty.BUF or n in used}
    out = p.with_main(main)
    out.decls = decls
    return out


def _block(s, out, bufs):
    items = list(s.items) if isinstance(s, Seq) else [s]
    # live-after sets, right to left
    lives = [None] * len(items)
    cur = set(out)
    for i in range(len(items) - 1, -1, -1):
        lives[i] = cur
        cur = live_in(items[i], cur)
    res = []
    i = 0
    while i < len(items):
        a = items[i]
        b = items[i + 1] if i + 1 < len(items) else None
        after = lives[i + 1] if b is not None else None
        if (isinstance(a, ReadStream) and isinstance(b, Assign) and a.x in bufs
                and b.e == Var(a.x) and a.x not in after):
            res.append(ReadStream(b.x, a.a))
            i += 2
            continue
        if (isinstance(a, Assign) and isinstance(a.e, Var) and isinstance(b, WriteStream)
                and a.x in bufs and b.x == a.x and a.x not in after):
            res.append(WriteStream(b.a, a.e.name))
            i += 2
            continue
        res.append(_inner(a, lives[i], bufs))
        i += 1
    return Seq(tuple(res))


def _inner(s, out, bufs):
    if isinstance(s, If):
        return If(s.x, _block(s.then, out, bufs), _block(s.orelse, out, bufs))
    if isinstance(s, Kernel):
        return Kernel(_block(s.body, out, bufs))
    if isinstance(s, For):
        head = set(out) | expr_vars(s.bound) | {s.x}
        while True:
            new = head | live_in(s.body, head)
            if new == head:
                break
            head = new
        return For(s.x, s.init, s.bound, s.step, _block(s.body, head, bufs), s.annot)
    return s


def _all_names(s):
    from ..frontend.ast import used_vars, assigned_vars
    return used_vars(s) | assigned_vars(s)
