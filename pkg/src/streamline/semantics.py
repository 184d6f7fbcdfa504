"""Big-step reference interpreters for source (heap) and target (stream) programs."""

from __future__ import annotations

import json
import zlib
from collections import Counter, deque
from dataclasses import dataclass, field

from .frontend.ast import (
    Assign, BinOp, Call, Const, For, If, Kernel, ReadArr, ReadStream, Seq, Ty,
    Var, WriteArr, WriteStream, has_stream_ops,
)
from .frontend.printer import fmt_stmt

DEFAULT_FUEL = 10 ** 7


class EvalError(Exception):
    """Expression evaluation failed (unbound variable, division by zero)."""


class Stuck(Exception):
    def __init__(self, reason, stmt=None):
        super().__init__(reason)
        self.reason = reason
        self.stmt = stmt


class OutOfFuel(Exception):
    pass


def tdiv(a, b):
    if b == 0:
        raise EvalError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def tmod(a, b):
    return a - b * tdiv(a, b)


def apply_op(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return tdiv(a, b)
    if op == "%":
        return tmod(a, b)
    if op == "<":
        return int(a < b)
    if op == "=":
        return int(a == b)
    if op == "<=":
        return int(a <= b)
    raise EvalError(f"unknown operator {op!r}")


def eval_expr(R, e, rules=None):
    if isinstance(e, Const):
        if rules is not None:
            rules["R-Const"] += 1
        return e.value
    if isinstance(e, Var):
        if rules is not None:
            rules["R-Var"] += 1
        try:
            return R[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}") from None
    if isinstance(e, BinOp):
        a = eval_expr(R, e.left, rules)
        b = eval_expr(R, e.right, rules)
        if rules is not None:
            rules["R-Op"] += 1
        return apply_op(e.op, a, b)
    raise EvalError(f"not an expression: {e!r}")


@dataclass
class ExecReport:
    status: str = "ok"                  # ok | stuck | fuel
    reason: str = ""
    location: str = ""
    steps: int = 0
    regs: dict = field(default_factory=dict)
    heap: dict = field(default_factory=dict)       # (a, m) -> v
    streams: dict = field(default_factory=dict)    # a -> list
    counters: dict = field(default_factory=dict)   # a -> {heap_reads, ...}
    rules: Counter = field(default_factory=Counter)
    trace: list | None = None

    @property
    def ok(self):
        return self.status == "ok"

    @property
    def stuck(self):
        return self.status == "stuck"

    def count(self, a, kind):
        return self.counters.get(a, {}).get(kind, 0)

    def total(self, kind):
        return sum(c.get(kind, 0) for c in self.counters.values())

    def heap_of(self, a):
        return {m: v for (b, m), v in self.heap.items() if b == a}

    def to_json(self):
        heap = {}
        for (a, m), v in sorted(self.heap.items()):
            heap.setdefault(a, {})[str(m)] = v
        d = {
            "status": self.status,
            "reason": self.reason,
            "location": self.location,
            "steps": self.steps,
            "regs": dict(sorted(self.regs.items())),
            "heap": heap,
            "streams": {a: list(s) for a, s in sorted(self.streams.items())},
            "counters": {a: dict(sorted(c.items())) for a, c in sorted(self.counters.items())},
            "rules": dict(sorted(self.rules.items())),
        }
        if self.trace is not None:
            d["trace"] = self.trace
        return d

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


_KINDS = ("heap_reads", "heap_writes", "stream_reads", "stream_writes")


class Interpreter:
    def __init__(self, regs=None, heap=None, streams=None, fuel=DEFAULT_FUEL,
                 allow_streams=True, allow_heap=True, trace=False):
        self.R = dict(regs or {})
        self.H = dict(heap or {})
        self.S = {a: deque(v) for a, v in (streams or {}).items()}
        self.fuel = fuel
        self.steps = 0
        self.allow_streams = allow_streams
        self.allow_heap = allow_heap
        self.rules = Counter()
        self.counters = {}
        self.trace = [] if trace else None

    def bump(self, a, kind):
        c = self.counters.get(a)
        if c is None:
            c = self.counters[a] = {k: 0 for k in _KINDS}
        c[kind] += 1

    def tick(self):
        self.steps += 1
        if self.steps > self.fuel:
            raise OutOfFuel()

    def ev(self, e, s):
        try:
            return eval_expr(self.R, e, self.rules)
        except EvalError as ex:
            raise Stuck(str(ex), s) from None

    def var(self, x, s):
        try:
            return self.R[x]
        except KeyError:
            raise Stuck(f"unbound variable {x!r}", s) from None

    def exec(self, s):
        self.tick()
        if isinstance(s, Seq):
            # n-ary sequence is a right-nested chain of R-Seq
            if len(s.items) > 1:
                self.rules["R-Seq"] += len(s.items) - 1
            for t in s.items:
                self.exec(t)
        elif isinstance(s, Assign):
            self.R[s.x] = self.ev(s.e, s)
            self.rules["R-Assign"] += 1
        elif isinstance(s, ReadArr):
            if not self.allow_heap:
                raise Stuck(f"array read of {s.a!r} in stream-only mode", s)
            m = self.ev(s.idx, s)
            try:
                v = self.H[(s.a, m)]
            except KeyError:
                raise Stuck(f"undefined address ({s.a}, {m})", s) from None
            self.R[s.x] = v
            self.bump(s.a, "heap_reads")
            self.rules["R-ReadArray"] += 1
            if self.trace is not None:
                self.trace.append(["read", s.a, m, v])
        elif isinstance(s, WriteArr):
            if not self.allow_heap:
                raise Stuck(f"array write of {s.a!r} in stream-only mode", s)
            m = self.ev(s.idx, s)
            v = self.var(s.x, s)
            self.H[(s.a, m)] = v
            self.bump(s.a, "heap_writes")
            self.rules["R-WriteArray"] += 1
            if self.trace is not None:
                self.trace.append(["write", s.a, m, v])
        elif isinstance(s, ReadStream):
            if not self.allow_streams:
                raise Stuck("stream operation in source program", s)
            q = self.S.get(s.a)
            if not q:
                raise Stuck(f"read on empty stream {s.a!r}", s)
            self.R[s.x] = q.popleft()
            self.bump(s.a, "stream_reads")
            self.rules["R-Read"] += 1
            if self.trace is not None:
                self.trace.append(["pop", s.a, self.R[s.x]])
        elif isinstance(s, WriteStream):
            if not self.allow_streams:
                raise Stuck("stream operation in source program", s)
            v = self.var(s.x, s)
            self.S.setdefault(s.a, deque()).append(v)
            self.bump(s.a, "stream_writes")
            self.rules["R-Write"] += 1
            if self.trace is not None:
                self.trace.append(["push", s.a, v])
        elif isinstance(s, If):
            if self.var(s.x, s) != 0:
                self.rules["R-IfTrue"] += 1
                self.exec(s.then)
            else:
                self.rules["R-IfFalse"] += 1
                self.exec(s.orelse)
        elif isinstance(s, For):
            self.exec_for(s)
        elif isinstance(s, Kernel):
            self.rules["R-CallKer"] += 1
            self.exec(s.body)
        elif isinstance(s, Call):
            raise Stuck(f"call to {s.name!r} (program not inlined)", s)
        else:
            raise Stuck(f"unknown statement {s!r}", s)

    def exec_for(self, s):
        k = self.ev(s.init, s)
        while True:
            m = self.ev(s.bound, s)
            if k == m:
                self.R[s.x] = k
                self.rules["R-ForExit"] += 1
                return
            self.rules["R-ForLoop"] += 1
            self.R[s.x] = k
            self.exec(s.body)
            self.tick()
            # the next init is x+n under the post-body registers
            k = self.var(s.x, s) + s.step

    def run(self, s):
        rep = ExecReport()
        try:
            self.exec(s)
        except Stuck as st:
            rep.status = "stuck"
            rep.reason = st.reason
            rep.location = fmt_stmt(st.stmt).splitlines()[0].strip() if st.stmt is not None else ""
        except OutOfFuel:
            rep.status = "fuel"
            rep.reason = f"fuel exhausted after {self.fuel} steps"
        except RecursionError:
            rep.status = "fuel"
            rep.reason = "nesting too deep"
        rep.steps = self.steps
        rep.regs = dict(self.R)
        rep.heap = dict(self.H)
        rep.streams = {a: list(q) for a, q in self.S.items()}
        rep.counters = self.counters
        rep.rules = self.rules
        rep.trace = self.trace
        return rep


def _init_regs(p, params):
    missing = [n for n in p.params if n not in params]
    if missing:
        raise ValueError(f"missing value for param {', '.join(missing)}")
    return {n: int(params[n]) for n in p.params}


def run_source(p, H0=None, params=None, fuel=DEFAULT_FUEL, trace=False):
    R = _init_regs(p, params or {})
    it = Interpreter(R, H0, None, fuel, allow_streams=False, trace=trace)
    return it.run(p.main)


def run_target(p, S0=None, params=None, fuel=DEFAULT_FUEL, H0=None, trace=False):
    """Run a target program; H0 holds the arrays that stayed arrays."""
    R = _init_regs(p, params or {})
    it = Interpreter(R, H0, S0, fuel, allow_streams=True, trace=trace)
    return it.run(p.main)


def run_program(p, doc, fuel=DEFAULT_FUEL, trace=False):
    """Pick the interpreter by program contents; doc is the input document."""
    params, heap, streams = parse_input(doc)
    if has_stream_ops(p.main):
        return run_target(p, streams, params, fuel, heap, trace)
    return run_source(p, heap, params, fuel, trace)


def parse_input(doc):
    if not isinstance(doc, dict):
        raise ValueError("input document must be a JSON object")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ValueError("'params' must be an object")
    heap = {}
    for a, cells in doc.get("heap", {}).items():
        for m, v in cells.items():
            heap[(a, int(m))] = int(v)
    streams = {a: [int(v) for v in vs] for a, vs in doc.get("streams", {}).items()}
    return {k: int(v) for k, v in params.items()}, heap, streams


# ------------------------------------------------------------ simulation relation

@dataclass
class SourceState:
    regs: dict
    heap: dict


@dataclass
class TargetState:
    regs: dict
    streams: dict


def check_sim_relation(src, tgt, gamma, phi, I):
    """The state correspondence used by the correctness argument."""
    from .assertions import eval_formula

    for x, ty in gamma.bindings.items():
        if ty is Ty.INT:
            if src.regs.get(x) != tgt.regs.get(x):
                return False
    for a, ty in gamma.bindings.items():
        if not ty.is_array:
            continue
        seq = list(I.get(a, ()))
        if len(set(seq)) != len(seq):
            return False
        stream = list(tgt.streams.get(a, ()))
        if len(stream) < len(seq):
            return False
        for i, m in enumerate(seq):
            if (a, m) not in src.heap:
                return False
            if src.heap[(a, m)] != stream[i]:
                return False
    return eval_formula(tgt.regs, src.heap, I, phi)


class HashHeap:
    """Total heap with deterministic pseudo-random contents in [lo, hi]."""

    def __init__(self, seed=0, lo=-100, hi=100):
        self.seed = seed
        self.lo, self.hi = lo, hi
        self._names = {}

    def _name(self, a):
        h = self._names.get(a)
        if h is None:
            h = self._names[a] = zlib.crc32(a.encode())
        return h

    def __getitem__(self, key):
        a, m = key
        v = (self._name(a) * 0x9E3779B1 + m * 0x85EBCA77 + self.seed * 0xC2B2AE3D) & 0xFFFFFFFF
        v ^= v >> 15
        v = (v * 0x2C1B3C6D) & 0xFFFFFFFF
        v ^= v >> 12
        return self.lo + v % (self.hi - self.lo + 1)

    def __contains__(self, key):
        return True
