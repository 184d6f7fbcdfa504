import itertools

import pytest
from hypothesis import given, settings, strategies as st

from streamline.assertions import (
    And, ArrVar, Eq, IConst, IVar, Le, Mem, Not, Op, Select, SeqVar, TrueF,
    eval_formula, fmt, parse_assertion, same,
)
from streamline.bufferpass import InsMove, InsRead, InsWrite, RAssign, RIf, RRead, RSeq, RWrite
from streamline.frontend.ast import BinOp, Const, Var
from streamline.semantics import HashHeap
from streamline.vcgen import InstantiationBackend
from streamline.vcgen.backend_a import SmtBackend, query
from streamline.vcgen.derive import (
    awp, guarded, pre_assign, pre_ins_rbuf, pre_ins_wbuf, pre_read_mem, pre_write_mem,
)
from streamline.vcgen.solve import SolverConfig, solve
from streamline.vcgen.templates import coeff_values, make_templates

from conftest import CORPUS, needs_z3, program, translation

A = parse_assertion


# ------------------------------------------------------------------ awp rules

def test_awp_assign():
    assert pre_assign("x", BinOp("+", Var("x"), Const(1)), A("x <= N")) == A("x + 1 <= N")


def test_awp_read_through_buffer():
    pre = pre_read_mem("y0", "in", Var("x"), "b0", A("y0 = 3"))
    assert same(pre, A("b0 = in[x] && b0 = 3"))


def test_awp_stream_read():
    pre = pre_ins_rbuf("b0", "in", A("b0 = in[x] && idx(in) = [x + 1, N - 1; 1]"))
    assert same(pre, A("in[hd(idx(in))] = in[x] && tl(idx(in)) = [x + 1, N - 1; 1]"))


def test_awp_write():
    pre = pre_write_mem("out", Var("x"), "z1", "b1", A("b1 = out[x]"))
    assert same(pre, A("x notin idx(out) && z1 = out{x -> z1}[x]"))


def test_awp_stream_write():
    pre = pre_ins_wbuf("out", "b1", Var("x"), A("idx(out) = [0, x; 1]"))
    assert same(pre, A("x notin idx(out) && out[x] = b1 && snoc(idx(out), x) = [0, x; 1]"))


def test_awp_branch():
    node = RIf("c", RSeq([RAssign("y", Const(1))]), RSeq([RAssign("y", Const(2))]))
    pre = awp(node, A("y = 1"))
    assert pre == guarded("c", A("1 = 1"), A("2 = 1"))
    assert eval_formula({"c": 5}, {}, {}, pre)
    assert not eval_formula({"c": 0}, {}, {}, pre)


# ------------------------------------------------------------------ templates

def test_coefficient_order():
    assert coeff_values(0) == (0,)
    assert coeff_values(2) == (0, -1, 1, -2, 2)


def test_templates_for_filter():
    t = translation("filter")
    temps = make_templates(t.skeleton, program("filter"))
    cuts = {(x.cut, x.array) for x in temps}
    assert cuts == {(c, a) for c in (0, 1, "end") for a in ("in", "out")}
    tmpl = next(x for x in temps if x.cut == 1)
    assert tmpl.vars == ("x",)
    assert "N - 1" in {str(d) for d in tmpl.distinguished}
    wide = make_templates(t.skeleton, program("filter"), coeff_range=3)
    assert len(list(wide[0].candidates())) > len(list(tmpl.candidates()))


def test_filter_invariant_coefficients():
    c = translation("filter").report["coefficients"]["1"]
    want = {"c00": "1", "c01": 1, "c10": "N - 1", "c11": 0, "c20": "1", "c21": 0,
            "c30": "0", "c31": 0, "c40": "-1", "c41": 1, "c50": "1", "c51": 0}
    assert c == want


def test_filter_vc_counts():
    t = translation("filter")
    assert t.report["vc_counts"] == {"init": 1, "inductive": 2, "exit": 2}
    assert sorted(v.kind for v in t.vcs) == ["exit", "exit", "inductive", "inductive", "init"]


def test_coeff_range_zero_cannot_track_the_window():
    res = solve(program("filter"), SolverConfig(coeff_range=0))
    assert "in" not in res.converted


def test_give_up_reason_for_table_lookup():
    assert "affine" in translation("kmp").report["given_up"]["a"]


# ------------------------------------------------------------- backend B

def test_internal_backend_examples():
    b = InstantiationBackend()
    assert b.check(A("x = 1"), A("x <= 1")).valid
    r = b.check(A("x <= 3"), A("x = 3"))
    assert r.status == "invalid" and r.model["ints"]["x"] != 3
    assert b.check(A("idx(a) = [0, 3; 1]"), A("hd(idx(a)) = 0")).valid
    assert b.check(A("idx(a) = [x + 1, N; 1] && x < N"), A("tl(idx(a)) = [x + 2, N; 1]")).valid
    assert b.mode == "unsound-instantiation"


IV = ("x", "y")
lin = st.recursive(st.one_of(st.sampled_from(IV).map(IVar), st.integers(-3, 4).map(IConst)),
                   lambda t: st.builds(Op, st.sampled_from("+-"), t, t), max_leaves=3)
atom = st.one_of(st.builds(Eq, lin, lin), st.builds(Le, lin, lin))
formula = st.recursive(atom, lambda f: st.one_of(st.builds(Not, f),
                                                  st.lists(f, min_size=2, max_size=3).map(lambda x: And(tuple(x)))),
                       max_leaves=4)


@settings(max_examples=300, deadline=None)
@given(formula, formula)
def test_internal_backend_agrees_with_enumeration(hyp, concl):
    b = InstantiationBackend()
    r = b.check(hyp, concl)
    counter = None
    for vals in itertools.product(b.domain, repeat=2):
        R = dict(zip(IV, vals))
        if eval_formula(R, {}, {}, hyp) and not eval_formula(R, {}, {}, concl):
            counter = R
            break
    # valid means no counterexample inside the domain; a reported model
    # must be a real counterexample (it may lie outside the domain)
    if r.status == "valid":
        assert counter is None
    if r.status == "invalid":
        R = {v: r.model["ints"].get(v, 0) for v in IV}
        assert eval_formula(R, {}, {}, hyp) and not eval_formula(R, {}, {}, concl)
    if counter is not None:
        assert r.status != "valid"


# ---------------------------------------------------------- awp soundness

REGS = ("x", "y", "b", "c")
expr = st.one_of(st.sampled_from(REGS).map(Var), st.integers(-2, 4).map(Const),
                 st.builds(BinOp, st.sampled_from("+-"), st.sampled_from(REGS).map(Var),
                           st.integers(0, 2).map(Const)))
reg = st.sampled_from(REGS)
simple = st.one_of(
    st.builds(RAssign, reg, expr),
    st.builds(RRead, reg, st.just("a"), expr, st.sampled_from(("b", "c"))),
    st.builds(RWrite, st.just("a"), expr, reg, st.sampled_from(("b", "c"))),
    st.builds(InsRead, st.sampled_from(("b", "c")), st.just("a"), st.none()),
    st.builds(InsWrite, st.just("a"), st.sampled_from(("b", "c")), expr),
    st.builds(InsMove, st.sampled_from(("b", "c")), reg),
)
block = st.lists(simple, max_size=4).map(RSeq)
node = st.one_of(simple, st.builds(RIf, reg, block, block))
program_ = st.lists(node, max_size=5).map(RSeq)

term = st.one_of(st.sampled_from(REGS).map(IVar), st.integers(-2, 4).map(IConst),
                 st.builds(Select, st.just(ArrVar("a")), st.sampled_from(REGS).map(IVar)))
post_atom = st.one_of(st.builds(Eq, term, term), st.builds(Le, term, term),
                      st.builds(Mem, term, st.just(SeqVar("a"))), st.just(TrueF()))
post = st.recursive(post_atom, lambda f: st.one_of(st.builds(Not, f),
                                                    st.lists(f, min_size=2, max_size=3).map(lambda x: And(tuple(x)))),
                    max_leaves=4)


class Stuck(Exception):
    pass


def ev(R, e):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return R[e.name]
    a, b = ev(R, e.left), ev(R, e.right)
    return a + b if e.op == "+" else a - b


def step(n, R, H, I):
    """Joint execution: the source heap with its ghost index sequence,
    and the target registers."""
    if isinstance(n, RSeq):
        for m in n.items:
            step(m, R, H, I)
    elif isinstance(n, RAssign):
        R[n.x] = ev(R, n.e)
    elif isinstance(n, RRead):
        R[n.x] = R[n.buf]
    elif isinstance(n, RWrite):
        m = ev(R, n.idx)
        if m in I["a"]:
            raise Stuck()
        R[n.buf] = R[n.x]
        H[("a", m)] = R[n.x]
    elif isinstance(n, InsRead):
        if not I["a"] or ("a", I["a"][0]) not in H:
            raise Stuck()
        R[n.buf] = H[("a", I["a"][0])]
        I["a"] = I["a"][1:]
    elif isinstance(n, InsWrite):
        I["a"] = I["a"] + (ev(R, n.index),)
    elif isinstance(n, InsMove):
        R[n.dst] = R[n.src]
    elif isinstance(n, RIf):
        step(n.then if R[n.x] != 0 else n.orelse, R, H, I)


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(program_, post, st.lists(st.integers(-2, 4), min_size=4, max_size=4),
       st.lists(st.integers(-2, 4), max_size=3, unique=True), st.integers(0, 3))
def test_awp_is_sound(prog, phi, regs, seq, seed):
    R = dict(zip(REGS, regs))
    heap = HashHeap(seed, -2, 4)
    H = {("a", m): heap["a", m] for m in range(-4, 9)}
    I = {"a": tuple(seq)}
    pre = awp(prog, phi)
    if not eval_formula(R, H, I, pre):
        return
    try:
        step(prog, R, H, I)
    except (Stuck, KeyError):
        return
    assert eval_formula(R, H, I, phi), fmt(pre)


# ------------------------------------------------------------- backend A

def test_missing_solver_is_unknown(tmp_path):
    b = SmtBackend(path=str(tmp_path / "nope"))
    assert not b.available
    assert b.check(A("x = 1"), A("x <= 1")).status == "unknown"


def test_query_text_shape():
    q = query(A("idx(a) = [0, N; 1]"), A("0 in idx(a)"))
    assert q.startswith("(set-logic ALL)") and q.rstrip().endswith("(check-sat)")
    assert "(declare-fun" in q or "(declare-const" in q


@needs_z3
def test_smt_examples(tmp_path):
    b = SmtBackend(dump_dir=tmp_path)
    assert b.check(A("x = 1"), A("x <= 1")).valid
    assert b.check(A("x <= 3"), A("x = 3")).status == "invalid"
    assert b.check(A("idx(a) = [x + 1, N; 1] && x < N"), A("tl(idx(a)) = [x + 2, N; 1]")).valid
    assert b.check(A("idx(a) = [0, N; 1]"), A("N + 1 in idx(a)")).status == "invalid"
    assert b.check(A("x notin idx(a)"), A("snoc(idx(a), x) != idx(a)")).valid
    assert len(list(tmp_path.glob("*.smt2"))) == 5


@needs_z3
@pytest.mark.parametrize("name", CORPUS)
def test_smt_confirms_corpus_vcs(name):
    t = translation(name)
    b = SmtBackend(timeout_ms=20000)
    for vc in t.vcs:
        assert b.check(vc.hyp, vc.concl).valid, (vc.kind, vc.loop)
