"""Internal validity backend: a propositional pass over atoms, then
exhaustive instantiation of the remaining variables over a small test
domain.  Not a decision procedure, so results carry the unsound flag."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..assertions import (
    And, Cons, Eq, Head, IConst, IVar, Le, Mem, Nil, Not, Op, Range,
    Select, SeqEq, SeqVar, Snoc, Tail, TrueF, Update, Undefined, conjuncts,
    free_vars, linear_of_term, seq_range,
)
from ..assertions.evaluate import seq_equal
from ..assertions.text import fmt, normalize
from ..semantics import EvalError, HashHeap, apply_op

MODE = "unsound-instantiation"


@dataclass
class Result:
    status: str                   # valid | invalid | unknown
    reason: str = ""
    model: dict = field(default_factory=dict)

    @property
    def valid(self):
        return self.status == "valid"


# ------------------------------------------------------------------ compiling

def _undef(msg="undefined"):
    raise Undefined(msg)


def compile_int(t):
    if isinstance(t, IConst):
        v = t.value
        return lambda R, H, I: v
    if isinstance(t, IVar):
        n = t.name

        def var(R, H, I):
            try:
                return R[n]
            except KeyError:
                raise Undefined(n) from None
        return var
    if isinstance(t, Op):
        f, g, op = compile_int(t.left), compile_int(t.right), t.op
        if op == "+":
            return lambda R, H, I: f(R, H, I) + g(R, H, I)
        if op == "-":
            return lambda R, H, I: f(R, H, I) - g(R, H, I)
        if op == "*":
            return lambda R, H, I: f(R, H, I) * g(R, H, I)

        def binop(R, H, I):
            try:
                return apply_op(op, f(R, H, I), g(R, H, I))
            except EvalError as e:
                raise Undefined(str(e)) from None
        return binop
    if isinstance(t, Select):
        return _compile_select(t.arr, compile_int(t.idx))
    if isinstance(t, Head):
        s = compile_seq(t.seq)

        def head(R, H, I):
            v = s(R, H, I)
            if not len(v):
                raise Undefined("hd")
            return v[0]
        return head
    raise TypeError(f"not an integer term: {t!r}")


def _compile_select(a, idx):
    chain = []
    while isinstance(a, Update):
        chain.append((compile_int(a.idx), compile_int(a.val)))
        a = a.base
    name = a.name

    def select(R, H, I):
        m = idx(R, H, I)
        for i, v in chain:
            if i(R, H, I) == m:
                return v(R, H, I)
        try:
            return H[(name, m)]
        except KeyError:
            raise Undefined(f"{name}[{m}]") from None
    return select


def compile_seq(s):
    if isinstance(s, SeqVar):
        n = s.name

        def var(R, H, I):
            try:
                return I[n]
            except KeyError:
                raise Undefined(n) from None
        return var
    if isinstance(s, Nil):
        return lambda R, H, I: ()
    if isinstance(s, Range):
        lo, hi, st = compile_int(s.low), compile_int(s.high), compile_int(s.step)
        return lambda R, H, I: seq_range(lo(R, H, I), hi(R, H, I), st(R, H, I))
    if isinstance(s, Tail):
        r = compile_seq(s.rest)

        def tail(R, H, I):
            v = r(R, H, I)
            if not len(v):
                raise Undefined("tl")
            return v[1:]
        return tail
    if isinstance(s, Cons):
        h, r = compile_int(s.head), compile_seq(s.rest)
        return lambda R, H, I: (h(R, H, I),) + tuple(r(R, H, I))
    if isinstance(s, Snoc):
        r, last = compile_seq(s.rest), compile_int(s.last)
        return lambda R, H, I: tuple(r(R, H, I)) + (last(R, H, I),)
    raise TypeError(f"not a sequence term: {s!r}")


def compile_formula(f):
    """Closure (R, H, I) -> bool with the same partiality as eval_formula."""
    if isinstance(f, TrueF):
        return lambda R, H, I: True
    if isinstance(f, And):
        parts = [compile_formula(g) for g in f.items]
        return lambda R, H, I: all(p(R, H, I) for p in parts)
    if isinstance(f, Not):
        b = compile_formula(f.body)
        return lambda R, H, I: not b(R, H, I)
    if isinstance(f, Eq):
        a, b = compile_int(f.left), compile_int(f.right)
        test = lambda R, H, I: a(R, H, I) == b(R, H, I)  # noqa: E731
    elif isinstance(f, Le):
        a, b = compile_int(f.left), compile_int(f.right)
        test = lambda R, H, I: a(R, H, I) <= b(R, H, I)  # noqa: E731
    elif isinstance(f, Mem):
        a, s = compile_int(f.elem), compile_seq(f.seq)
        test = lambda R, H, I: a(R, H, I) in s(R, H, I)  # noqa: E731
    elif isinstance(f, SeqEq):
        a, b = compile_seq(f.left), compile_seq(f.right)
        test = lambda R, H, I: seq_equal(a(R, H, I), b(R, H, I))  # noqa: E731
    else:
        raise TypeError(f"not a formula: {f!r}")

    def atom(R, H, I):
        try:
            return test(R, H, I)
        except Undefined:
            return False
    return atom


# --------------------------------------------------------------- propositional

def _is_atom(f):
    return not isinstance(f, (And, Not, TrueF))


def _trivial(f):
    if isinstance(f, (Eq, Le, SeqEq)) and f.left == f.right:
        return True
    if isinstance(f, (Eq, Le)) and isinstance(f.left, IConst) and isinstance(f.right, IConst):
        return f.left.value == f.right.value if isinstance(f, Eq) else f.left.value <= f.right.value
    return None


def _simp(f, asg):
    """True, False, or a residual formula under a partial atom assignment."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, And):
        out = []
        for g in f.items:
            r = _simp(g, asg)
            if r is False:
                return False
            if r is not True:
                out.extend(r.items if isinstance(r, And) else (r,))
        if not out:
            return True
        return out[0] if len(out) == 1 else And(tuple(out))
    if isinstance(f, Not):
        r = _simp(f.body, asg)
        if isinstance(r, bool):
            return not r
        return Not(r)
    if f in asg:
        return asg[f]
    t = _trivial(f)
    return f if t is None else t


def _first_atom(f):
    if isinstance(f, And):
        for g in f.items:
            a = _first_atom(g)
            if a is not None:
                return a
        return None
    if isinstance(f, Not):
        return _first_atom(f.body)
    if isinstance(f, TrueF):
        return None
    return f


def prop_sat(f, budget=4000):
    """False when f is propositionally unsatisfiable (atoms as opaque
    letters), True when satisfiable or the branching budget runs out."""
    count = [0]

    def go(f, asg):
        count[0] += 1
        if count[0] > budget:
            return True
        while True:
            r = _simp(f, asg)
            if isinstance(r, bool):
                return r
            f = r
            units = {}
            for g in (f.items if isinstance(f, And) else (f,)):
                if _is_atom(g):
                    units[g] = True
                elif isinstance(g, Not) and _is_atom(g.body):
                    units[g.body] = False
            if not units:
                break
            asg = {**asg, **units}
        a = _first_atom(f)
        return go(f, {**asg, a: True}) or go(f, {**asg, a: False})

    return go(f, {})


# --------------------------------------------------------------- instantiation

def _definition(c, ints_def, seqs_def):
    """(kind, name, term) if conjunct c defines a variable."""
    if isinstance(c, SeqEq):
        for l, r in ((c.left, c.right), (c.right, c.left)):
            if isinstance(l, SeqVar) and l.name not in free_vars(r)[2]:
                return ("seq", l.name, r)
        return None
    if isinstance(c, Eq):
        for l, r in ((c.left, c.right), (c.right, c.left)):
            if isinstance(l, IVar) and l.name not in free_vars(r)[0]:
                return ("int", l.name, r)
        lin = linear_of_term(Op("-", c.left, c.right))
        if lin is not None:
            for v, k in lin.coeffs:
                if abs(k) == 1:
                    rest = lin - type(lin).var(v, k)
                    t = (rest.scale(-1) if k == 1 else rest).to_term()
                    return ("int", v, t)
    return None


class InstantiationBackend:
    name = "internal"
    mode = MODE

    def __init__(self, domain=range(-2, 13), seeds=(0, 1), budget=400000,
                 seq_pool=None):
        self.domain = tuple(domain)
        self.seeds = tuple(seeds)
        self.budget = budget
        self.heaps = [HashHeap(s, -1000, 1000) for s in self.seeds]
        self.seq_pool = seq_pool or [(), (0,), (1,), (0, 1), (1, 0), (0, 1, 2), (2, 1, 0), (0, 2, 4)]
        self.cache = {}
        self.stats = {"queries": 0, "cache_hits": 0, "propositional": 0, "instances": 0}

    def check(self, hyp, concl):
        self.stats["queries"] += 1
        hyp_n, concl_n = normalize(hyp), normalize(concl)
        key = fmt(hyp_n) + " ==> " + fmt(concl_n)
        if key in self.cache:
            self.stats["cache_hits"] += 1
            return self.cache[key]
        res = self._check(hyp_n, concl_n)
        self.cache[key] = res
        return res

    def _check(self, hyp, concl):
        neg_goal = And((hyp, Not(concl)))
        if not prop_sat(neg_goal):
            self.stats["propositional"] += 1
            return Result("valid", "propositional")
        return self._instantiate(hyp, concl)

    def _instantiate(self, hyp, concl):
        hyps = conjuncts(hyp)
        ints, arrs, seqs = free_vars(hyp)
        i2, a2, s2 = free_vars(concl)
        ints |= i2
        seqs |= s2
        # definitions, avoiding cycles
        defs = {}
        deps = {}
        for c in hyps:
            d = _definition(c, defs, None)
            if d is None:
                continue
            kind, name, term = d
            key = (kind, name)
            if key in defs:
                continue
            fi, _, fs = free_vars(term)
            needs = {("int", v) for v in fi} | {("seq", v) for v in fs}
            if self._reaches(deps, needs, key):
                continue
            defs[key] = term
            deps[key] = needs
        enum_ints = sorted(v for v in ints if ("int", v) not in defs)
        enum_seqs = sorted(v for v in seqs if ("seq", v) not in defs)
        # order: enumerated vars by how many hypotheses mention them
        weight = {v: sum(v in free_vars(c)[0] for c in hyps) for v in enum_ints}
        enum_ints.sort(key=lambda v: -weight[v])
        order = [("int", v) for v in enum_ints] + [("seq", v) for v in enum_seqs]
        # schedule: after each enumerated var, the definitions that become ready
        schedule, known, pending = [], set(), dict(defs)
        checks = [(compile_formula(c), self._needs(c)) for c in hyps]
        done_checks = set()

        def flush(step):
            progress = True
            while progress:
                progress = False
                for k in list(pending):
                    if deps[k] <= known:
                        comp = compile_int(pending[k]) if k[0] == "int" else compile_seq(pending[k])
                        step[1].append((k, comp))
                        known.add(k)
                        del pending[k]
                        progress = True
            for i, (chk, need) in enumerate(checks):
                if i not in done_checks and need <= known:
                    step[2].append(chk)
                    done_checks.add(i)

        head = (None, [], [])
        flush(head)
        schedule.append(head)
        for k in order:
            known.add(k)
            step = (k, [], [])
            flush(step)
            schedule.append(step)
        if pending:
            # leftover definitions whose inputs never become known: enumerate them
            for k in sorted(pending):
                known.add(k)
                step = (k, [], [])
                flush(step)
                schedule.append(step)
        rest = [chk for i, (chk, _) in enumerate(checks) if i not in done_checks]
        goal = compile_formula(concl)
        count = [0]

        def values(k):
            return self.domain if k[0] == "int" else self.seq_pool

        def run(i, R, I, H):
            if i == len(schedule):
                count[0] += 1
                if count[0] > self.budget:
                    raise _Budget()
                if all(c(R, H, I) for c in rest) and not goal(R, H, I):
                    raise _Counter(dict(R), {k: tuple(v) for k, v in I.items()})
                return
            k, dfs, chks = schedule[i]
            for v in (values(k) if k is not None else (None,)):
                if k is not None:
                    (R if k[0] == "int" else I)[k[1]] = v
                ok = True
                for (dk, comp) in dfs:
                    try:
                        (R if dk[0] == "int" else I)[dk[1]] = comp(R, H, I)
                    except Undefined:
                        ok = False
                        break
                if ok and all(c(R, H, I) for c in chks):
                    run(i + 1, R, I, H)
                for (dk, _) in dfs:
                    (R if dk[0] == "int" else I).pop(dk[1], None)
            if k is not None:
                (R if k[0] == "int" else I).pop(k[1], None)

        try:
            for H in self.heaps:
                run(0, {}, {}, H)
        except _Counter as c:
            self.stats["instances"] += count[0]
            return Result("invalid", "counterexample", {"ints": c.R, "seqs": c.I})
        except _Budget:
            self.stats["instances"] += count[0]
            return Result("unknown", "instantiation budget exceeded")
        self.stats["instances"] += count[0]
        return Result("valid", "instantiation")

    @staticmethod
    def _needs(c):
        fi, _, fs = free_vars(c)
        return {("int", v) for v in fi} | {("seq", v) for v in fs}

    @staticmethod
    def _reaches(deps, needs, target):
        stack, seen = list(needs), set()
        while stack:
            k = stack.pop()
            if k == target:
                return True
            if k in seen:
                continue
            seen.add(k)
            stack.extend(deps.get(k, ()))
        return False


class _Counter(Exception):
    def __init__(self, R, I):
        self.R, self.I = R, I


class _Budget(Exception):
    pass
