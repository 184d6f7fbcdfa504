"""Buffer insertion: plan per-loop windows over array accesses and build
the two-track skeleton that pairs every source statement with its
target counterpart plus inserted stream/buffer commands."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .assertions.ranges import LinExpr, linear_of_expr
from .frontend.ast import (
    Assign, For, FreshNames, If, Kernel, ReadArr, ReadStream, Seq, Ty, Var,
    WriteArr, WriteStream, assigned_vars, expr_vars, items_of, walk,
)
from .semantics import EvalError, HashHeap, eval_expr

# ------------------------------------------------------------------- skeleton


@dataclass
class RAssign:
    x: str
    e: object


@dataclass
class RRead:
    """source x := a[idx]  /  target x := buf"""
    x: str
    a: str
    idx: object
    buf: str


@dataclass
class RWrite:
    """source a[idx] := x  /  target buf := x"""
    a: str
    idx: object
    x: str
    buf: str


@dataclass
class RKeepRead:
    x: str
    a: str
    idx: object


@dataclass
class RKeepWrite:
    a: str
    idx: object
    x: str


@dataclass
class RIf:
    x: str
    then: "RSeq"
    orelse: "RSeq"


@dataclass
class RFor:
    x: str
    init: object
    bound: object
    step: int
    body: "RSeq"
    loop_id: int
    annot: str | None = None


@dataclass
class RKernel:
    body: "RSeq"


@dataclass
class RSeq:
    items: list = field(default_factory=list)


@dataclass
class InsRead:
    buf: str
    a: str
    index: object = None   # LinExpr (window) or Expr (direct), informational


@dataclass
class InsWrite:
    a: str
    buf: str
    index: object          # source index expression


@dataclass
class InsMove:
    dst: str
    src: str


INSERTIONS = (InsRead, InsWrite, InsMove)


def is_insertion(n):
    return isinstance(n, INSERTIONS)


def skel_walk(n):
    yield n
    if isinstance(n, RSeq):
        for m in n.items:
            yield from skel_walk(m)
    elif isinstance(n, RIf):
        yield from skel_walk(n.then)
        yield from skel_walk(n.orelse)
    elif isinstance(n, (RFor, RKernel)):
        yield from skel_walk(n.body)


def loops_of(n):
    return [m for m in skel_walk(n) if isinstance(m, RFor)]


# --------------------------------------------------------------- projections

def _idx_expr(index):
    if isinstance(index, LinExpr):
        return index.to_expr()
    return index


def project(n, side):
    """side: 'source', 'target' or 'buffer' (buffer-only translation)."""
    if isinstance(n, RSeq):
        return Seq(tuple(_flat(project(m, side) for m in n.items)))
    if isinstance(n, RAssign):
        return Assign(n.x, n.e)
    if isinstance(n, RRead):
        if side == "source":
            return ReadArr(n.x, n.a, n.idx)
        return Assign(n.x, Var(n.buf))
    if isinstance(n, RWrite):
        if side == "target":
            return Assign(n.buf, Var(n.x))
        return WriteArr(n.a, n.idx, n.x)
    if isinstance(n, RKeepRead):
        return ReadArr(n.x, n.a, n.idx)
    if isinstance(n, RKeepWrite):
        return WriteArr(n.a, n.idx, n.x)
    if isinstance(n, RIf):
        return If(n.x, project(n.then, side), project(n.orelse, side))
    if isinstance(n, RFor):
        return For(n.x, n.init, n.bound, n.step, project(n.body, side),
                   n.annot if side == "source" else None)
    if isinstance(n, RKernel):
        return Kernel(project(n.body, side))
    if isinstance(n, InsRead):
        if side == "source":
            return None
        if side == "buffer":
            return ReadArr(n.buf, n.a, _idx_expr(n.index))
        return ReadStream(n.buf, n.a)
    if isinstance(n, InsWrite):
        if side == "target":
            return WriteStream(n.a, n.buf)
        return None
    if isinstance(n, InsMove):
        if side == "source":
            return None
        return Assign(n.dst, Var(n.src))
    raise TypeError(n)


def _flat(xs):
    out = []
    for x in xs:
        if x is None:
            continue
        if isinstance(x, Seq):
            out.extend(x.items)
        else:
            out.append(x)
    return out


# ------------------------------------------------------------ access analysis

class Unplannable(Exception):
    pass


@dataclass
class Access:
    pos_in_body: int      # index of the top-level item
    stmt: ReadArr
    index: LinExpr        # in terms of the loop variable and invariants
    c: int
    d: LinExpr            # index - c*x


def resolve_linear(body, x):
    """Forward pass over the top-level items of a loop body.

    Returns, per top-level item position, the environment mapping
    registers to LinExprs (None = unknown) valid before that item.
    """
    modified = assigned_vars(body)
    env = {v: None for v in modified}
    env[x] = LinExpr.var(x)
    envs = []
    for item in items_of(body):
        envs.append(dict(env))
        if isinstance(item, Assign):
            env[item.x] = _lin(item.e, env)
        elif isinstance(item, (ReadArr, ReadStream)):
            env[item.x] = None
        else:
            for v in assigned_vars(item):
                if v != x:
                    env[v] = None
    return envs


def _lin(e, env):
    for v in expr_vars(e):
        if v in env and env[v] is None:
            return None
    return linear_of_expr(e, {k: v for k, v in env.items() if v is not None})


def collect_access_indices(loop, arrays):
    """Top-level reads per array in a loop body, as affine index expressions.

    Returns (accesses, reasons): accesses maps array -> [Access];
    reasons maps arrays that cannot be windowed to a short explanation.
    """
    accesses, reasons = {}, {}
    body = loop.body
    if loop.x in assigned_vars(body):
        for a in arrays:
            reasons[a] = "loop variable modified in body"
        return accesses, reasons
    envs = resolve_linear(body, loop.x)
    items = items_of(body)
    for i, item in enumerate(items):
        if isinstance(item, ReadArr) and item.a in arrays:
            idx = _lin(item.idx, envs[i])
            if idx is None:
                reasons.setdefault(item.a, "index is not affine in the loop variable")
                continue
            c = idx.coeff(loop.x)
            d = idx - LinExpr.var(loop.x, c)
            accesses.setdefault(item.a, []).append(Access(i, item, idx, c, d))
        elif not isinstance(item, WriteArr):
            for t in walk(item):
                if isinstance(t, (ReadArr, WriteArr)) and t.a in arrays:
                    reasons.setdefault(t.a, "accessed under a branch or nested loop")
    for a in list(accesses):
        if a in reasons:
            del accesses[a]
    return accesses, reasons


@dataclass
class WindowPlan:
    array: str
    loop_id: int
    x: str
    c: int
    d0: LinExpr
    base: int
    sigma: int
    s: int
    K: int
    L: int
    positions: dict           # top-level item index -> position
    slot_bufs: list = field(default_factory=list)

    @property
    def carried(self):
        return self.L - self.K

    def index(self, p, x_value=None):
        """Index of window position p, with the loop variable or a LinExpr for it."""
        xv = LinExpr.var(self.x) if x_value is None else x_value
        return xv.scale(self.c) + self.d0 + (self.base + self.sigma * p * self.s)

    def describe(self):
        return {"array": self.array, "loop": self.loop_id, "stride": self.s,
                "fresh_per_iter": self.K, "window": self.L,
                "buffers": list(self.slot_bufs)}


def plan_buffers(accs, step, dense=False):
    """Window plan for the reads of one array in one loop (no buffer names yet)."""
    if not accs:
        raise Unplannable("no accesses")
    cs = {a.c for a in accs}
    if len(cs) != 1:
        raise Unplannable("accesses advance at different rates")
    c = cs.pop()
    if c == 0:
        raise Unplannable("index does not depend on the loop variable")
    d0 = accs[0].d
    offs = []
    for a in accs:
        diff = a.d - d0
        if not diff.is_const():
            raise Unplannable("non-constant offset between indices")
        offs.append(diff.const)
    delta = c * step
    sigma = 1 if delta > 0 else -1
    base = min(offs) if sigma > 0 else max(offs)
    s = 1 if dense else math.gcd(abs(delta), *[abs(k - base) for k in offs])
    K = abs(delta) // s
    if abs(delta) % s:
        raise Unplannable("stride does not divide the per-iteration shift")
    pos = {a.pos_in_body: sigma * (k - base) // s for a, k in zip(accs, offs)}
    L = max(max(pos.values()) + 1, K)
    return WindowPlan(accs[0].stmt.a, -1, "", c, d0, base, sigma, s, K, L, pos)


def natural_stride_above_one(p, arrays):
    """Arrays for which some loop's natural stride exceeds 1 (dense mode differs)."""
    out = set()
    for loop in [t for t in walk(p.main) if isinstance(t, For)]:
        accs, _ = collect_access_indices(loop, arrays)
        for a, lst in accs.items():
            try:
                if plan_buffers(lst, loop.step).s > 1:
                    out.add(a)
            except Unplannable:
                pass
    return out


# ------------------------------------------------------------- construction

@dataclass
class Skeleton:
    root: RSeq
    converted: frozenset
    bufs: list
    plans: list
    diagnostics: dict
    loops: dict               # loop_id -> RFor

    def source(self):
        return project(self.root, "source")

    def target(self):
        return project(self.root, "target")

    def buffer_only(self):
        return project(self.root, "buffer")


def build_skeleton(p, converted, dense=()):
    """Insert buffers for the arrays in ``converted`` (reads through
    windows where possible, direct otherwise; writes always direct)."""
    converted = frozenset(converted)
    taken = set(p.decls) | set(p.params)
    fresh = FreshNames(taken)
    bufs, plans, diags = [], [], {}
    loop_counter = [0]
    loops = {}

    def newbuf():
        b = fresh("b")
        bufs.append(b)
        return b

    def block(s):
        items = []
        for t in items_of(s) if isinstance(s, Seq) else (s,):
            items.extend(stmt(t))
        return RSeq(items)

    def stmt(s):
        if isinstance(s, Seq):
            return block(s).items
        if isinstance(s, Assign):
            return [RAssign(s.x, s.e)]
        if isinstance(s, ReadArr):
            if s.a in converted:
                b = newbuf()
                return [InsRead(b, s.a, s.idx), RRead(s.x, s.a, s.idx, b)]
            return [RKeepRead(s.x, s.a, s.idx)]
        if isinstance(s, WriteArr):
            if s.a in converted:
                b = newbuf()
                return [RWrite(s.a, s.idx, s.x, b), InsWrite(s.a, b, s.idx)]
            return [RKeepWrite(s.a, s.idx, s.x)]
        if isinstance(s, If):
            return [RIf(s.x, block(s.then), block(s.orelse))]
        if isinstance(s, Kernel):
            return [RKernel(block(s.body))]
        if isinstance(s, For):
            return loop(s)
        raise TypeError(f"unexpected statement in source program: {s!r}")

    def loop(s):
        lid = loop_counter[0]
        loop_counter[0] += 1
        accs, reasons = collect_access_indices(s, converted)
        for a, r in reasons.items():
            diags.setdefault(a, []).append(f"loop {lid}: {r}; reads stay direct")
        wplans = {}
        for a, lst in sorted(accs.items()):
            try:
                wp = plan_buffers(lst, s.step, dense=a in dense)
            except Unplannable as e:
                diags.setdefault(a, []).append(f"loop {lid}: {e}; reads stay direct")
                continue
            init = linear_of_expr(s.init)
            if init is None or expr_vars(s.init) & assigned_vars(s.body):
                if wp.carried > 0:
                    diags.setdefault(a, []).append(f"loop {lid}: init not affine; reads stay direct")
                    continue
            wp.loop_id, wp.x = lid, s.x
            wp.slot_bufs = [newbuf() for _ in range(wp.carried)]
            wplans[a] = (wp, init)
            plans.append(wp)
        pre = []
        for a, (wp, init) in wplans.items():
            for p_ in range(wp.carried):
                pre.append(InsRead(wp.slot_bufs[p_], a, wp.index(p_, init)))
        body = window_body(s, wplans)
        node = RFor(s.x, s.init, s.bound, s.step, body, lid, s.annot)
        loops[lid] = node
        return pre + [node]

    def window_body(s, wplans):
        items = items_of(s.body)
        holders, unread = {}, {}
        later_use = {}
        for a, (wp, _) in wplans.items():
            holders[a] = {p_: wp.slot_bufs[p_] for p_ in range(wp.carried)}
            unread[a] = list(range(wp.carried, wp.L))
            uses = [(i, p_) for i, p_ in sorted(wp.positions.items())]
            later_use[a] = uses
        out = []

        def read_fresh(a, upto, at_item):
            wp, _ = wplans[a]
            while unread[a] and unread[a][0] <= upto:
                q = unread[a].pop(0)
                slot = q - wp.K
                used_later = any(i > at_item and p_ == slot
                                 for i, p_ in later_use[a]) if slot >= 0 else True
                if slot >= 0 and q < 2 * wp.K and not used_later and \
                        holders[a].get(slot) == wp.slot_bufs[slot]:
                    b = wp.slot_bufs[slot]
                    del holders[a][slot]
                else:
                    b = newbuf()
                holders[a][q] = b
                out.append(InsRead(b, a, wp.index(q)))

        for i, item in enumerate(items):
            if isinstance(item, ReadArr) and item.a in wplans and i in wplans[item.a][0].positions:
                wp, _ = wplans[item.a]
                p_ = wp.positions[i]
                if p_ >= wp.carried:
                    read_fresh(item.a, p_, i)
                out.append(RRead(item.x, item.a, item.idx, holders[item.a][p_]))
            else:
                out.extend(stmt(item))
        for a, (wp, _) in wplans.items():
            read_fresh(a, wp.L, len(items))
            for p_ in range(wp.carried):
                src = holders[a][p_ + wp.K]
                if src != wp.slot_bufs[p_]:
                    out.append(InsMove(wp.slot_bufs[p_], src))
        return RSeq(out)

    root = block(p.main)
    return Skeleton(root, converted, bufs, plans, diags, loops)


def target_program(p, skel, simplify_fn=None, side="target"):
    """Target program (with declarations) from a skeleton."""
    main = project(skel.root, side)
    decls = dict(p.decls)
    for b in skel.bufs:
        decls[b] = Ty.BUF
    t = p.with_main(main, decls)
    if simplify_fn is not None:
        t = simplify_fn(t)
    return t


# -------------------------------------------------------------- observation

class _Stop(Exception):
    pass


@dataclass
class Observation:
    cut: object            # loop id or "end"
    env: dict              # loop variables in scope + params
    seqs: dict             # array -> tuple of producer indices


def observe(skel, params, seed=0, fuel=200000):
    """Run the target side of the skeleton, tagging every stream element
    with the source index it was produced from; record each stream's
    pending tags at every loop-condition check and at the end."""
    R = dict(params)
    H = {}
    base = HashHeap(seed)
    S = {a: deque() for a in skel.converted}
    obs = []
    steps = [0]
    scope = []

    def ev(e):
        try:
            return eval_expr(R, e)
        except EvalError:
            raise _Stop() from None

    def heap_get(a, m):
        if (a, m) in H:
            return H[(a, m)]
        return base[(a, m)]

    def record(cut):
        env = dict(params)
        for v in scope:
            env[v] = R[v]
        obs.append(Observation(cut, env, {a: tuple(t for _, t in q) for a, q in S.items()}))

    def run(n):
        steps[0] += 1
        if steps[0] > fuel:
            raise _Stop()
        if isinstance(n, RSeq):
            for m in n.items:
                run(m)
        elif isinstance(n, RAssign):
            R[n.x] = ev(n.e)
        elif isinstance(n, RRead):
            if n.buf not in R:
                raise _Stop()
            R[n.x] = R[n.buf]
        elif isinstance(n, RWrite):
            R[n.buf] = R[n.x]
        elif isinstance(n, RKeepRead):
            R[n.x] = heap_get(n.a, ev(n.idx))
        elif isinstance(n, RKeepWrite):
            H[(n.a, ev(n.idx))] = R[n.x]
        elif isinstance(n, RIf):
            run(n.then if R.get(n.x, 0) != 0 else n.orelse)
        elif isinstance(n, RKernel):
            run(n.body)
        elif isinstance(n, InsRead):
            q = S[n.a]
            if not q:
                raise _Stop()
            R[n.buf] = q.popleft()[0]
        elif isinstance(n, InsWrite):
            S[n.a].append((R[n.buf], ev(n.index)))
        elif isinstance(n, InsMove):
            R[n.dst] = R[n.src]
        elif isinstance(n, RFor):
            k = ev(n.init)
            scope.append(n.x)
            try:
                while True:
                    R[n.x] = k
                    record(n.loop_id)
                    if k == ev(n.bound):
                        break
                    run(n.body)
                    k = R[n.x] + n.step
                    steps[0] += 1
                    if steps[0] > fuel:
                        raise _Stop()
            finally:
                scope.pop()
        else:
            raise TypeError(n)

    ok = True
    try:
        run(skel.root)
        record("end")
    except (_Stop, KeyError):
        ok = False
    return obs, ok
