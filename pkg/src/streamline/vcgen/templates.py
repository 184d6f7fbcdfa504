"""Cut invariants: linear range templates per (cut, array), plus the
buffer and loop facts that are extracted from the skeleton."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

from ..assertions import (
    ArrVar, Eq, IConst, IVar, IndexRange, Le, LinExpr, Nil, Op, Select,
    SeqEq, SeqVar, conj, embed, linear_of_expr, parse_assertion,
)
from ..assertions.evaluate import seq_range, Undefined
from ..bufferpass import (
    InsMove, InsRead, RAssign, RFor, RKeepRead, RKernel, RRead, RWrite, skel_walk,
)
from ..frontend.ast import expr_vars
from .derive import loop_guard, requires_formula

CONSTS = (0, -1, 1, -2, 2)


def coeff_values(k):
    """0, -1, 1, ..., -k, k: the enumeration order of coefficients."""
    out = [0]
    for c in range(1, k + 1):
        out += [-c, c]
    return tuple(out)


COEFFS = coeff_values(2)
EMPTY = IndexRange(LinExpr(0), LinExpr(-1), LinExpr(1))


@dataclass
class LoopInfo:
    node: RFor
    outer: list                 # enclosing loop ids, outermost first
    modified: set               # registers assigned anywhere in the body
    bufs_written: set


@dataclass
class Template:
    cut: object                 # loop id or "end"
    array: str
    vars: tuple                 # loop variables the coefficients range over
    distinguished: tuple        # LinExprs over params
    coeffs: tuple = COEFFS

    def candidates(self):
        """Linear candidates in enumeration order."""
        for base in list(map(LinExpr, CONSTS)) + list(self.distinguished):
            for cs in itertools.product(self.coeffs, repeat=len(self.vars)):
                e = base
                for v, c in zip(self.vars, cs):
                    e = e + LinExpr.var(v, c)
                yield e


def loop_table(root):
    table = {}

    def go(n, outer):
        if isinstance(n, RFor):
            mod, bufs = set(), set()
            for m in skel_walk(n.body):
                if isinstance(m, (RAssign, RRead, RKeepRead)):
                    mod.add(m.x)
                elif isinstance(m, RFor):
                    mod.add(m.x)
                if isinstance(m, InsRead):
                    bufs.add(m.buf)
                elif isinstance(m, InsMove):
                    bufs.add(m.dst)
                elif isinstance(m, RWrite):
                    bufs.add(m.buf)
            table[n.loop_id] = LoopInfo(n, list(outer), mod, bufs)
            outer = outer + [n.loop_id]
            go(n.body, outer)
            return
        for attr in ("items",):
            for m in getattr(n, attr, ()):
                go(m, outer)
        for attr in ("then", "orelse", "body"):
            if hasattr(n, attr):
                go(getattr(n, attr), outer)

    go(root, [])
    return table


def param_defs(root, params):
    """Registers set once, in straight-line code, to a linear function of
    the params (typically hoisted loop bounds).  Returns the definitions
    and, per loop id, the ones already executed when the loop starts."""
    counts = Counter()
    for m in skel_walk(root):
        if isinstance(m, (RAssign, RRead, RKeepRead, RFor)):
            counts[m.x] += 1
    defs, avail = {}, {}

    def go(items):
        for n in items:
            if isinstance(n, RAssign) and counts[n.x] == 1:
                lin = linear_of_expr(n.e, defs)
                if lin is not None and lin.vars <= set(params):
                    defs[n.x] = lin
            elif isinstance(n, RKernel):
                go(n.body.items)
            else:
                for m in skel_walk(n):
                    if isinstance(m, RFor):
                        avail[m.loop_id] = dict(defs)

    go(root.items)
    return defs, avail


def distinguished_constants(table, params, defs=None):
    """Loop inits and bounds (and their neighbours) that are linear in params."""
    out = []
    for lid in sorted(table):
        n = table[lid].node
        for e in (n.init, n.bound):
            lin = linear_of_expr(e, defs)
            if lin is None or lin.is_const() or not lin.vars <= set(params):
                continue
            for d in (0, -1, 1, -2):
                cand = lin + d
                if cand not in out:
                    out.append(cand)
    return tuple(out)


def window_offsets(skel, params):
    """Offsets of window positions relative to the loop variable, for
    windows reaching further than the default constants."""
    out = []
    for wp in skel.plans:
        if not wp.d0.vars <= set(params):
            continue
        for k in range(wp.L + 1):
            off = wp.d0 + (wp.base + wp.sigma * k * wp.s)
            if off.is_const() and off.const in CONSTS:
                continue
            if off not in out:
                out.append(off)
    return tuple(out)


def make_templates(skel, p, coeff_range=2):
    cs = coeff_values(coeff_range)
    table = loop_table(skel.root)
    D = distinguished_constants(table, p.params, param_defs(skel.root, p.params)[0])
    D += tuple(o for o in window_offsets(skel, p.params) if o not in D)
    temps = []
    for lid in sorted(table):
        info = table[lid]
        vs = tuple(table[o].node.x for o in info.outer) + (info.node.x,)
        for a in sorted(skel.converted):
            temps.append(Template(lid, a, vs, D, cs))
    for a in sorted(skel.converted):
        temps.append(Template("end", a, (), D, cs))
    return temps


# ------------------------------------------------------------------ facts

def _loop_facts(n):
    x, e, m, s = IVar(n.x), embed(n.init), embed(n.bound), n.step
    if s > 0:
        facts = [Le(e, x), Le(x, m)]
    else:
        facts = [Le(m, x), Le(x, e)]
    if abs(s) > 1:
        k = IConst(abs(s))
        if s > 0:
            facts += [Eq(Op("%", Op("-", x, e), k), IConst(0)),
                      Eq(Op("%", Op("-", m, e), k), IConst(0))]
        else:
            facts += [Eq(Op("%", Op("-", e, x), k), IConst(0)),
                      Eq(Op("%", Op("-", e, m), k), IConst(0))]
    return facts


def _entry_ok(n):
    """init <= bound (oriented by step) and divisibility, as a formula."""
    e, m, s = embed(n.init), embed(n.bound), n.step
    parts = [Le(e, m) if s > 0 else Le(m, e)]
    if abs(s) > 1:
        parts.append(Eq(Op("%", Op("-", m, e), IConst(abs(s))), IConst(0)))
    return conj(*parts)


@dataclass
class CutFacts:
    """Everything in a cut invariant except the range bindings."""
    facts: dict = field(default_factory=dict)     # loop id -> Formula
    requires: object = None
    notes: dict = field(default_factory=dict)


def cut_facts(skel, p, backend):
    table = loop_table(skel.root)
    req = requires_formula(p.requires)
    plans_by_loop = {}
    for wp in skel.plans:
        plans_by_loop.setdefault(wp.loop_id, []).append(wp)
    _, avail = param_defs(skel.root, p.params)
    own_facts, notes = {}, {}
    for lid in sorted(table):
        info = table[lid]
        n = info.node
        invariant_bounds = not ((expr_vars(n.init) | expr_vars(n.bound)) & (info.modified | {n.x}))
        facts = []
        if invariant_bounds:
            defs = [Eq(IVar(t), lin.to_term()) for t, lin in sorted(avail.get(lid, {}).items())]
            ctx = conj(req, *defs, *[conj(*own_facts[o], loop_guard(table[o].node.x, table[o].node.bound))
                              for o in info.outer])
            if backend.check(ctx, _entry_ok(n)).valid:
                facts = _loop_facts(n)
            else:
                notes[lid] = "loop bounds not ordered under requires; loop facts omitted"
        own_facts[lid] = facts
    out = {}
    for lid in sorted(table):
        info = table[lid]
        parts = [req]
        parts += [Eq(IVar(t), lin.to_term()) for t, lin in sorted(avail.get(lid, {}).items())]
        parts += _buffer_facts(plans_by_loop.get(lid, ()))
        parts += own_facts[lid]
        for o in info.outer:
            oinfo = table[o]
            on = oinfo.node
            if on.x in info.modified:
                continue
            if not ((expr_vars(on.init) | expr_vars(on.bound)) & info.modified):
                parts += own_facts[o]
                parts.append(loop_guard(on.x, on.bound))
            for wp in plans_by_loop.get(o, ()):
                bf = _buffer_facts([wp])
                if set(wp.slot_bufs) & info.bufs_written:
                    continue
                if (wp.d0.vars | {wp.x}) & info.modified:
                    continue
                parts += bf
        if info.node.annot:
            parts.append(parse_assertion(info.node.annot))
        out[lid] = conj(*parts)
    return CutFacts(out, req, notes)


def _buffer_facts(plans):
    out = []
    for wp in plans:
        for k, b in enumerate(wp.slot_bufs):
            out.append(Eq(IVar(b), Select(ArrVar(wp.array), wp.index(k).to_term())))
    return out


def build_invariants(skel, facts, ranges):
    """ranges: cut -> {array: IndexRange}.  Returns (invs, phi_init, phi_end)."""
    invs = {}
    for lid, f in facts.facts.items():
        rs = ranges.get(lid, {})
        invs[lid] = conj(*[SeqEq(SeqVar(a), rs.get(a, EMPTY).term()) for a in sorted(skel.converted)], f)
    rs = ranges.get("end", {})
    phi_end = conj(*[SeqEq(SeqVar(a), rs.get(a, EMPTY).term()) for a in sorted(skel.converted)],
                   facts.requires)
    phi_init = conj(*[SeqEq(SeqVar(a), Nil()) for a in sorted(skel.converted)], facts.requires)
    return invs, phi_init, phi_end


# ------------------------------------------------------- observation pruning

def _denotes(r, env, seq):
    try:
        lo, hi, st = r.low.eval(env), r.high.eval(env), r.step.eval(env)
        return tuple(seq_range(lo, hi, st)) == seq
    except (Undefined, KeyError):
        return False


def range_candidates(tmpl, observations, limit=None):
    """IndexRanges for one (cut, array) consistent with every observation,
    in lexicographic (low, high, step) enumeration order."""
    obs = [(o.env, o.seqs.get(tmpl.array, ())) for o in observations if o.cut == tmpl.cut]
    cands = list(tmpl.candidates())
    lows = [c for c in cands if all(not s or _ev(c, env) == s[0] for env, s in obs)]
    steps = [c for c in cands if all(_ev(c, env) != 0 and (len(s) < 2 or _ev(c, env) == s[1] - s[0])
                                     for env, s in obs)]
    out = []
    for lo in lows:
        for hi in cands:
            if not all(_high_ok(lo, hi, env, s) for env, s in obs):
                continue
            for st in steps:
                r = IndexRange(lo, hi, st)
                if all(_denotes(r, env, s) for env, s in obs):
                    out.append(r)
                    if limit and len(out) >= limit:
                        return out
    return out


def _ev(c, env):
    try:
        return c.eval(env)
    except KeyError:
        return None


def _high_ok(lo, hi, env, s):
    h = _ev(hi, env)
    if h is None:
        return False
    if not s:
        return True
    if len(s) == 1:
        return True
    return (s[-1] <= h) if s[1] > s[0] else (h <= s[-1])
