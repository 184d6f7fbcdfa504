"""Differential execution of a source program against its translation.

Each case runs both interpreters from related initial states and
compares termination status, every INT register, and the final stream
contents against the source heap read along the end-of-program index
ranges.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..frontend.ast import Ty, TypeEnv
from ..assertions.evaluate import Undefined, seq_range
from ..assertions.terms import TrueF
from ..semantics import (
    SourceState, TargetState, check_sim_relation, run_source, run_target,
)

FUEL = 2_000_000


@dataclass
class Case:
    params: dict
    heap: dict

    def to_json(self):
        heap = {}
        for (a, m), v in sorted(self.heap.items()):
            heap.setdefault(a, {})[str(m)] = v
        return {"params": dict(self.params), "heap": heap}


@dataclass
class Mismatch:
    case: Case
    reason: str


@dataclass
class DiffResult:
    cases: int = 0
    mismatch: Mismatch = None
    statuses: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.mismatch is None


def _cells(n):
    return range(-2, 4 * n + 16)


def make_case(p, rng, n):
    params = {}
    for k, name in enumerate(p.params):
        params[name] = n if k == 0 else rng.randint(1, 32)
    heap = {}
    for a in p.arrays():
        for m in _cells(max(params.values(), default=1)):
            heap[(a, m)] = rng.randint(-100, 100)
    return Case(params, heap)


def _holds(p, params):
    from ..semantics import EvalError, eval_expr
    try:
        return all(eval_expr(params, r) != 0 for r in p.requires)
    except EvalError:
        return False


def sample_cases(p, n_cases=200, seed=0, n_range=(1, 32)):
    """Seeded inputs; the first parameter sweeps n_range before random draws."""
    rng = random.Random(seed)
    lo, hi = n_range
    out = []
    sweep = list(range(lo, hi + 1))
    tries = 0
    while len(out) < n_cases and tries < 50 * n_cases:
        n = sweep[tries] if tries < len(sweep) else rng.randint(lo, hi)
        tries += 1
        c = make_case(p, rng, n)
        if _holds(p, c.params):
            out.append(c)
    return out


def _end_witness(ranges, regs):
    I = {}
    for a, r in ranges.items():
        try:
            I[a] = tuple(seq_range(r.low.eval(regs), r.high.eval(regs), r.step.eval(regs)))
        except (Undefined, KeyError):
            return None
    return I


def compare(src, tgt, case, converted=(), end_ranges=None, fuel=FUEL):
    """(reason, source report, target report); reason is None when the runs agree."""
    kept = set(src.arrays()) - set(converted)
    rs = run_source(src, dict(case.heap), case.params, fuel)
    th = {k: v for k, v in case.heap.items() if k[0] in kept}
    rt = run_target(tgt, {}, case.params, fuel, th)
    if rs.status != rt.status:
        return f"source {rs.status} ({rs.reason}) but target {rt.status} ({rt.reason})", rs, rt
    if not rs.ok:
        return None, rs, rt
    ints = {n for n, t in src.decls.items() if t is Ty.INT} | set(src.params)
    for x in sorted(ints):
        if rs.regs.get(x) != rt.regs.get(x):
            return f"register {x}: source {rs.regs.get(x)} target {rt.regs.get(x)}", rs, rt
    for a in sorted(kept):
        if rs.heap_of(a) != rt.heap_of(a):
            return f"array {a} differs", rs, rt
    if end_ranges is not None:
        I = _end_witness(end_ranges, rs.regs)
        if I is None:
            return "end ranges undefined in the final state", rs, rt
        gamma = TypeEnv({x: Ty.INT for x in ints} | {a: src.decls[a] for a in converted})
        if not check_sim_relation(SourceState(rs.regs, rs.heap), TargetState(rt.regs, rt.streams),
                                  gamma, TrueF(), I):
            return "final streams do not match the source heap along the end ranges", rs, rt
        for a in converted:
            if len(rt.streams.get(a, ())) != len(I[a]):
                return f"stream {a} holds {len(rt.streams.get(a, ()))} elements, expected {len(I[a])}", rs, rt
    return None, rs, rt


def shrink(src, tgt, case, converted, end_ranges, fuel=FUEL):
    """Lower the first parameter while the mismatch persists."""
    if not src.params:
        return case, None
    name = src.params[0]
    best, why = case, None
    for n in range(1, case.params[name]):
        params = dict(case.params)
        params[name] = n
        if not _holds(src, params):
            continue
        c = Case(params, {k: v for k, v in case.heap.items() if k[1] in _cells(n)})
        reason, _, _ = compare(src, tgt, c, converted, end_ranges, fuel)
        if reason is not None:
            return c, reason
    return best, why


def diff(src, tgt, converted=(), end_ranges=None, n_cases=200, seed=0, n_range=(1, 32),
         fuel=FUEL, cases=None):
    res = DiffResult()
    for case in cases if cases is not None else sample_cases(src, n_cases, seed, n_range):
        reason, rs, rt = compare(src, tgt, case, converted, end_ranges, fuel)
        res.cases += 1
        res.statuses[rs.status] = res.statuses.get(rs.status, 0) + 1
        if reason is not None:
            small, why = shrink(src, tgt, case, converted, end_ranges, fuel)
            res.mismatch = Mismatch(small, why or reason)
            return res
    return res


def diff_translation(t, **kw):
    """Differential test of a Translation result."""
    conv = tuple(t.report.get("converted", ()))
    ends = None
    if t.solution is not None and not t.report.get("buffer_only"):
        ends = t.solution.assignment.ranges.get("end", {})
    if t.report.get("buffer_only"):
        conv = ()
    return diff(t.source, t.target, conv, ends, **kw)
