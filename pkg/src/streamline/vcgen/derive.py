"""Approximate weakest preconditions over skeletons, and the derivation
tree that the translation rules produce from them.

The walk goes right to left.  Every loop is a cut: its invariant is
supplied by the caller, and the walk records three kinds of entailment
(initial, inductive, exit) wherever a computed precondition has to meet
a required one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..assertions import (
    ArrVar, Eq, Head, IConst, IVar, Le, Mem, Not, Op, Select, SeqVar, Snoc,
    Tail, Update, conj, embed, ne, subst,
)
from ..assertions.text import normalize, fmt
from ..bufferpass import (
    InsMove, InsRead, InsWrite, RAssign, RFor, RIf, RKeepRead, RKeepWrite,
    RKernel, RRead, RSeq, RWrite, is_insertion, project,
)
from ..frontend.ast import BinOp, Seq


def cmp_formula(e):
    """A comparison expression (requires clause) as a formula."""
    if isinstance(e, BinOp) and e.op in ("<", "=", "<="):
        left, right = embed(e.left), embed(e.right)
        if e.op == "=":
            return Eq(left, right)
        if e.op == "<=":
            return Le(left, right)
        return Not(Le(right, left))
    return Not(Eq(embed(e), IConst(0)))


def requires_formula(requires):
    return conj(*[cmp_formula(r) for r in requires])


# ------------------------------------------------------------------ awp rules

def pre_assign(x, e, post):
    return subst(post, ints={x: embed(e)})


def pre_read_mem(x, a, idx, b, post):
    return conj(Eq(IVar(b), Select(ArrVar(a), embed(idx))), subst(post, ints={x: IVar(b)}))


def pre_write_mem(a, idx, x, b, post):
    e = embed(idx)
    return conj(Not(Mem(e, SeqVar(a))),
                subst(post, ints={b: IVar(x)}, arrs={a: Update(ArrVar(a), e, IVar(x))}))


def pre_ins_rbuf(b, a, post):
    return subst(post, ints={b: Select(ArrVar(a), Head(SeqVar(a)))},
                 seqs={a: Tail(SeqVar(a))})


def pre_ins_wbuf(a, b, n, post):
    n = embed(n)
    return conj(Not(Mem(n, SeqVar(a))), Eq(Select(ArrVar(a), n), IVar(b)),
                subst(post, seqs={a: Snoc(SeqVar(a), n)}))


def pre_ins_move(x, y, post):
    return subst(post, ints={x: IVar(y)})


def pre_keep_read(x, a, idx, post):
    return subst(post, ints={x: Select(ArrVar(a), embed(idx))})


def pre_keep_write(a, idx, x, post):
    return subst(post, arrs={a: Update(ArrVar(a), embed(idx), IVar(x))})


def guarded(x, p1, p2):
    """Precondition of an If whose branches need p1 and p2."""
    xv = IVar(x)
    return conj(Not(conj(ne(xv, IConst(0)), Not(p1))),
                Not(conj(Eq(xv, IConst(0)), Not(p2))))


def loop_exit(x, bound):
    return Eq(IVar(x), embed(bound))


def loop_guard(x, bound):
    return ne(IVar(x), embed(bound))


def loop_next(inv, x, step):
    return subst(inv, ints={x: Op("+", IVar(x), IConst(step)) if step > 0
                            else Op("-", IVar(x), IConst(-step))})


def loop_entry(inv, x, init):
    return subst(inv, ints={x: embed(init)})


class NoInvariant(Exception):
    pass


def awp(node, post, invs=None):
    """Approximate weakest precondition of a skeleton node (or list of
    nodes).  Loops need their invariant in ``invs[loop_id]``."""
    if isinstance(node, list):
        for n in reversed(node):
            post = awp(n, post, invs)
        return post
    if isinstance(node, RSeq):
        return awp(node.items, post, invs)
    if isinstance(node, RAssign):
        return pre_assign(node.x, node.e, post)
    if isinstance(node, RRead):
        return pre_read_mem(node.x, node.a, node.idx, node.buf, post)
    if isinstance(node, RWrite):
        return pre_write_mem(node.a, node.idx, node.x, node.buf, post)
    if isinstance(node, RKeepRead):
        return pre_keep_read(node.x, node.a, node.idx, post)
    if isinstance(node, RKeepWrite):
        return pre_keep_write(node.a, node.idx, node.x, post)
    if isinstance(node, InsRead):
        return pre_ins_rbuf(node.buf, node.a, post)
    if isinstance(node, InsWrite):
        return pre_ins_wbuf(node.a, node.buf, node.index, post)
    if isinstance(node, InsMove):
        return pre_ins_move(node.dst, node.src, post)
    if isinstance(node, RIf):
        return guarded(node.x, awp(node.then, post, invs), awp(node.orelse, post, invs))
    if isinstance(node, RKernel):
        return awp(node.body, post, invs)
    if isinstance(node, RFor):
        if invs is None or node.loop_id not in invs:
            raise NoInvariant(node.loop_id)
        return loop_entry(invs[node.loop_id], node.x, node.init)
    raise TypeError(f"no awp equation for {node!r}")


# ------------------------------------------------------------------ derivation

@dataclass
class DNode:
    rule: str
    gamma: str
    pre: object
    post: object
    source: object          # Stmt, or None for insertion judgments
    target: object
    premises: list = field(default_factory=list)
    side: dict = field(default_factory=dict)


@dataclass
class VC:
    kind: str               # init | inductive | exit | branch
    loop: object            # loop id, or None
    hyp: object
    concl: object
    path: str = ""

    def key(self):
        return fmt(normalize(self.hyp)) + " ==> " + fmt(normalize(self.concl))


def _src(n):
    return project(n, "source")


def _tgt(n):
    return project(n, "target")


class Deriver:
    """Builds the derivation for a skeleton against given cut invariants."""

    def __init__(self, invs, phi_init, phi_end):
        self.invs = invs
        self.phi_init = phi_init
        self.phi_end = phi_end
        self.vcs = []

    def run(self, root):
        body = self.seq(root.items, self.phi_end, "host", "root")
        self.vcs.append(VC("init", None, self.phi_init, body.pre, "root"))
        return DNode("Tr-Conseq", "host", self.phi_init, self.phi_end,
                     body.source, body.target, [body],
                     {"entail": [[self.phi_init, body.pre], [body.post, self.phi_end]]})

    # a list of skeleton nodes against a postcondition
    def seq(self, items, post, g, path):
        units, cur = [], []
        for n in items:
            if is_insertion(n):
                cur.append(n)
            else:
                units.append((cur, n))
                cur = []
        trailing = cur
        # trailing insertions, right to left
        tails = []
        p = post
        for t in reversed(trailing):
            node = self.ins(t, p, g)
            tails.append(node)
            p = node.pre
        tails.reverse()
        # units, right to left
        built = []
        for k in range(len(units) - 1, -1, -1):
            lead, s = units[k]
            d = self.stmt(s, p, g, f"{path}.{k}")
            for t in reversed(lead):
                ins = self.ins(t, d.pre, g)
                d = DNode("Tr-InsertL", g, ins.pre, d.post, d.source,
                          Seq((ins.target, d.target)), [ins, d])
            built.append(d)
            p = d.pre
        built.reverse()
        if not built:
            d = DNode("Tr-Skip", g, p, p, Seq(()), Seq(()))
        else:
            d = built[-1]
            for left in reversed(built[:-1]):
                d = DNode("Tr-Seq", g, left.pre, d.post, Seq((left.source, d.source)),
                          Seq((left.target, d.target)), [left, d])
        for t in tails:
            d = DNode("Tr-InsertR", g, d.pre, t.post, d.source,
                      Seq((d.target, t.target)), [d, t])
        return d

    def ins(self, n, post, g):
        if isinstance(n, InsRead):
            return DNode("Tr-InsRBuf", g, pre_ins_rbuf(n.buf, n.a, post), post, None, _tgt(n))
        if isinstance(n, InsWrite):
            return DNode("Tr-InsWBuf", g, pre_ins_wbuf(n.a, n.buf, n.index, post), post,
                         None, _tgt(n), side={"index": embed(n.index)})
        if isinstance(n, InsMove):
            return DNode("Tr-InsMove", g, pre_ins_move(n.dst, n.src, post), post, None, _tgt(n))
        raise TypeError(n)

    def stmt(self, n, post, g, path):
        if isinstance(n, RAssign):
            return DNode("Tr-Assign", g, pre_assign(n.x, n.e, post), post, _src(n), _tgt(n))
        if isinstance(n, RRead):
            return DNode("Tr-ReadMem", g, pre_read_mem(n.x, n.a, n.idx, n.buf, post), post,
                         _src(n), _tgt(n))
        if isinstance(n, RWrite):
            return DNode("Tr-WriteMem", g, pre_write_mem(n.a, n.idx, n.x, n.buf, post), post,
                         _src(n), _tgt(n))
        if isinstance(n, RKeepRead):
            return DNode("Tr-KeepRead", g, pre_keep_read(n.x, n.a, n.idx, post), post,
                         _src(n), _tgt(n))
        if isinstance(n, RKeepWrite):
            return DNode("Tr-KeepWrite", g, pre_keep_write(n.a, n.idx, n.x, post), post,
                         _src(n), _tgt(n))
        if isinstance(n, RKernel):
            d = self.seq(n.body.items, post, "kernel", path + ".k")
            return DNode("Tr-Kernel", g, d.pre, d.post, _src(n), _tgt(n), [d])
        if isinstance(n, RIf):
            return self.branch(n, post, g, path)
        if isinstance(n, RFor):
            return self.loop(n, post, g, path)
        raise TypeError(n)

    def branch(self, n, post, g, path):
        d1 = self.seq(n.then.items, post, g, path + ".t")
        d2 = self.seq(n.orelse.items, post, g, path + ".e")
        pre = guarded(n.x, d1.pre, d2.pre)
        xv = IVar(n.x)
        prems = []
        for d, fact, tag in ((d1, ne(xv, IConst(0)), "t"), (d2, Eq(xv, IConst(0)), "e")):
            hyp = conj(pre, fact)
            self.vcs.append(VC("branch", None, hyp, d.pre, f"{path}.{tag}"))
            prems.append(DNode("Tr-Conseq", g, hyp, post, d.source, d.target, [d],
                               {"entail": [[hyp, d.pre], [d.post, post]]}))
        return DNode("Tr-If", g, pre, post, _src(n), _tgt(n), prems)

    def loop(self, n, post, g, path):
        inv = self.invs[n.loop_id]
        nxt = loop_next(inv, n.x, n.step)
        body = self.seq(n.body.items, nxt, g, path + ".b")
        inner_pre = conj(inv, loop_guard(n.x, n.bound))
        self.vcs.append(VC("inductive", n.loop_id, inner_pre, body.pre, path))
        wrapped = DNode("Tr-Conseq", g, inner_pre, nxt, body.source, body.target, [body],
                        {"entail": [[inner_pre, body.pre], [body.post, nxt]]})
        entry = loop_entry(inv, n.x, n.init)
        exit_ = conj(inv, loop_exit(n.x, n.bound))
        fnode = DNode("Tr-For", g, entry, exit_, _src(n), _tgt(n), [wrapped],
                      {"invariant": inv})
        self.vcs.append(VC("exit", n.loop_id, exit_, post, path))
        return DNode("Tr-Conseq", g, entry, post, fnode.source, fnode.target, [fnode],
                     {"entail": [[entry, entry], [exit_, post]]})


def derive(root, invs, phi_init, phi_end):
    d = Deriver(invs, phi_init, phi_end)
    tree = d.run(root)
    return tree, d.vcs


def gen_vcs(root, invs, phi_init, phi_end, kinds=("init", "inductive", "exit")):
    _, vcs = derive(root, invs, phi_init, phi_end)
    return [v for v in vcs if v.kind in kinds]
