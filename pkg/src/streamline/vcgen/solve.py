"""Invariant search: observation-pruned enumeration of range templates,
checked against the generated VCs, one array at a time."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..assertions import LinExpr
from ..bufferpass import build_skeleton, natural_stride_above_one, observe
from ..semantics import EvalError, eval_expr
from .backend_b import InstantiationBackend
from .derive import gen_vcs
from .templates import (
    build_invariants, cut_facts, make_templates, range_candidates,
)


@dataclass
class SolverConfig:
    backend: object = None
    param_values: tuple = tuple(range(1, 13))
    combo_budget: int = 400
    per_cut_limit: int = 12
    seed: int = 0
    coeff_range: int = 2               # coefficients range over -k..k

    def get_backend(self):
        if self.backend is None:
            self.backend = InstantiationBackend()
        return self.backend


@dataclass
class Assignment:
    ranges: dict                       # cut -> {array: IndexRange}
    mode: dict = field(default_factory=dict)

    def coefficients(self, cut, loopvar):
        """Template coefficients for the arrays at one cut: c{i}0 is the
        part free of the loop variable, c{i}1 its coefficient, with
        i = 3k + (0 low | 1 high | 2 step) for the k-th array by name."""
        out = {}
        rs = self.ranges.get(cut, {})
        for k, a in enumerate(sorted(rs)):
            r = rs[a]
            for j, part in enumerate((r.low, r.high, r.step)):
                c1 = part.coeff(loopvar) if loopvar else 0
                rest = part - LinExpr.var(loopvar, c1) if c1 else part
                out[f"c{3 * k + j}0"] = str(rest)
                out[f"c{3 * k + j}1"] = c1
        return out


@dataclass
class NoSolution:
    reason: str


@dataclass
class Unknown:
    reason: str


def param_testset(p, values):
    """Parameter bindings used for observation runs, small first."""
    names = list(p.params)
    if not names:
        return [{}]
    if len(names) > 1:
        values = [v for v in values if v <= 5]
    out = []
    for combo in itertools.product(values, repeat=len(names)):
        env = dict(zip(names, combo))
        if all(_holds(r, env) for r in p.requires):
            out.append(env)
    return out


def _holds(r, env):
    try:
        return eval_expr(env, r) != 0
    except EvalError:
        return False


def check_vcs(vcs, backend):
    """First failing VC (with its result), or None when all are valid."""
    order = sorted(range(len(vcs)), key=lambda i: {"init": 0, "exit": 1, "inductive": 2}.get(vcs[i].kind, 3))
    for i in order:
        r = backend.check(vcs[i].hyp, vcs[i].concl)
        if not r.valid:
            return vcs[i], r
    return None


def search(skel, p, cfg, observations=None):
    """Ranges for every converted array at every cut, or NoSolution/Unknown."""
    backend = cfg.get_backend()
    if observations is None:
        observations = []
        for env in param_testset(p, cfg.param_values):
            obs, _ = observe(skel, env, seed=cfg.seed)
            observations.extend(obs)
    facts = cut_facts(skel, p, backend)
    temps = make_templates(skel, p, cfg.coeff_range)
    per_cut = {}
    for t in temps:
        cands = range_candidates(t, observations, limit=cfg.per_cut_limit)
        if not cands:
            return NoSolution(f"no range for {t.array} at cut {t.cut} fits the observed stream order")
        per_cut.setdefault(t.cut, {})[t.array] = cands
    cuts = sorted((c for c in per_cut if c != "end")) + (["end"] if "end" in per_cut else [])
    slots = [(c, a) for c in cuts for a in sorted(per_cut[c])]
    lists = [per_cut[c][a] for c, a in slots]
    last = None
    for n, combo in enumerate(itertools.product(*lists)):
        if n >= cfg.combo_budget:
            return Unknown(f"candidate budget exhausted ({cfg.combo_budget}); last failure: {last}")
        ranges = {}
        for (c, a), r in zip(slots, combo):
            ranges.setdefault(c, {})[a] = r
        invs, phi_init, phi_end = build_invariants(skel, facts, ranges)
        vcs = gen_vcs(skel.root, invs, phi_init, phi_end)
        bad = check_vcs(vcs, backend)
        if bad is None:
            return Assignment(ranges), facts
        vc, res = bad
        last = f"{vc.kind} VC at loop {vc.loop} is {res.status}"
    return NoSolution(f"no candidate verified; last failure: {last}")


@dataclass
class Solution:
    converted: tuple
    dense: tuple
    skeleton: object
    assignment: Assignment
    facts: object
    given_up: dict                     # array -> reason
    diagnostics: dict


def _producers(p):
    from ..frontend.ast import WriteArr, walk
    return {s.a for s in walk(p.main) if isinstance(s, WriteArr)}


def solve(p, cfg=None, arrays=None):
    """Choose the conversion set and ranges for program p."""
    cfg = cfg or SolverConfig()
    arrays = sorted(arrays if arrays is not None else p.arrays())
    produced = _producers(p)
    given_up, ok, diags = {}, [], {}
    for a in arrays:
        if a not in produced:
            given_up[a] = "never written, so its stream would have no producer"
            continue
        modes = [False]
        if a in natural_stride_above_one(p, {a}):
            modes.append(True)
        reasons = []
        for dense in modes:
            skel = build_skeleton(p, {a}, dense={a} if dense else ())
            for k, v in skel.diagnostics.items():
                diags.setdefault(k, []).extend(v)
                if k == a:
                    reasons += [m for m in v if m not in reasons]
            res = search(skel, p, cfg)
            if isinstance(res, tuple):
                ok.append((a, dense))
                break
            reasons.append(("dense" if dense else "natural") + ": " + res.reason)
        else:
            given_up[a] = "; ".join(reasons)
    # combine; drop arrays greedily if the union does not verify
    chosen = []
    final = None
    for a, dense in ok:
        trial = chosen + [(a, dense)]
        skel = build_skeleton(p, {x for x, _ in trial}, dense={x for x, d in trial if d})
        res = search(skel, p, cfg)
        if isinstance(res, tuple):
            chosen = trial
            final = (skel, res)
        else:
            given_up[a] = "verified alone but not together with " + ", ".join(x for x, _ in chosen)
    if final is None:
        skel = build_skeleton(p, set())
        res = search(skel, p, cfg)
        final = (skel, res)
    skel, (asg, facts) = final
    return Solution(tuple(x for x, _ in chosen), tuple(x for x, d in chosen if d), skel, asg,
                    facts, given_up, {k: sorted(set(v)) for k, v in diags.items()})
