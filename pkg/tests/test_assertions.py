import pytest
from hypothesis import given, settings, strategies as st

from streamline.assertions import (
    And, ArrVar, Cons, Eq, Head, IConst, IVar, IndexRange, Le, LinExpr, Mem, Nil,
    Not, Op, Range, RangeError, RestrictedAssertion, Select, SeqEq, SeqVar, Snoc,
    SortError, Subst, Tail, TrueF, Update, eval_formula, eval_seq, eval_term, fmt,
    normalize, parse_assertion, range_to_formula, restricted_to_formula, same,
    seq_range, subst,
)

# ------------------------------------------------------------------ generators

REGS = ("x", "y", "z")
ARRS = ("a", "b")
VALS = st.integers(-3, 6)


def int_terms():
    leaf = st.one_of(st.sampled_from(REGS).map(IVar), VALS.map(IConst))

    def grow(t):
        arr = st.recursive(st.sampled_from(ARRS).map(ArrVar),
                           lambda a: st.builds(Update, a, t, t), max_leaves=2)
        seq = st.one_of(st.sampled_from(ARRS).map(SeqVar), st.just(Nil()),
                        st.builds(lambda s: Tail(SeqVar(s)), st.sampled_from(ARRS)))
        return st.one_of(
            st.builds(Op, st.sampled_from(["+", "-", "*", "/", "%", "<", "=", "<="]), t, t),
            st.builds(Select, arr, t),
            st.builds(Head, seq),
        )

    return st.recursive(leaf, grow, max_leaves=5)


INT = int_terms()
ARR = st.recursive(st.sampled_from(ARRS).map(ArrVar), lambda a: st.builds(Update, a, INT, INT), max_leaves=2)
SEQ = st.recursive(
    st.one_of(st.sampled_from(ARRS).map(SeqVar), st.just(Nil()),
              st.builds(Range, INT, INT, st.sampled_from([1, 2, -1]).map(IConst))),
    lambda s: st.one_of(st.builds(Cons, INT, s), st.builds(Snoc, s, INT), st.builds(Tail, s)),
    max_leaves=3)
ATOM = st.one_of(st.just(TrueF()), st.builds(Eq, INT, INT), st.builds(Le, INT, INT),
                 st.builds(Mem, INT, SEQ), st.builds(SeqEq, SEQ, SEQ))
FORMULA = st.recursive(ATOM, lambda f: st.one_of(st.builds(Not, f),
                                                  st.lists(f, min_size=2, max_size=3).map(lambda xs: And(tuple(xs)))),
                       max_leaves=5)


@st.composite
def states(draw):
    R = {x: draw(VALS) for x in REGS if draw(st.integers(0, 5))}
    H = {}
    for a in ARRS:
        for m in range(-3, 7):
            if draw(st.integers(0, 4)):
                H[(a, m)] = draw(VALS)
    I = {a: tuple(draw(st.lists(st.integers(-3, 6), max_size=4, unique=True))) for a in ARRS}
    return R, H, I


LEMMA = settings(max_examples=1000, deadline=None, derandomize=True)

# ------------------------------------------------------------------ examples


def test_true_holds():
    assert eval_formula({}, {}, {}, TrueF())


def test_buffer_fact_against_head():
    phi = Eq(IVar("b"), Select(ArrVar("a"), Head(SeqVar("a"))))
    assert eval_formula({"b": 2}, {("a", 1): 2}, {"a": (1, 0)}, phi)


def test_undefined_head_is_false():
    phi = Eq(Head(SeqVar("a")), IConst(0))
    assert not eval_formula({}, {}, {"a": ()}, phi)
    assert eval_formula({}, {}, {"a": ()}, Not(phi))


def test_undefined_select_is_false():
    assert not eval_formula({}, {}, {}, Eq(Select(ArrVar("a"), IConst(0)), IConst(0)))


def test_eval_is_total_on_bad_terms():
    assert eval_term({}, {}, {}, Op("/", IConst(1), IConst(0))) is None
    assert eval_seq({}, {}, {}, Tail(Nil())) is None
    assert not eval_formula({}, {}, {}, SeqEq(Range(IConst(0), IConst(3), IConst(0)), Nil()))


def test_subst_register():
    assert subst(Eq(IVar("x"), IConst(0)), ints={"x": IVar("y")}) == Eq(IVar("y"), IConst(0))


def test_subst_sequence():
    phi = SeqEq(SeqVar("a"), SeqVar("J"))
    assert subst(phi, seqs={"a": Tail(SeqVar("a"))}) == SeqEq(Tail(SeqVar("a")), SeqVar("J"))


def test_subst_array():
    phi = Eq(IVar("b"), Select(ArrVar("a"), IConst(1)))
    new = subst(phi, arrs={"a": Update(ArrVar("a"), IVar("e"), IVar("x"))})
    assert new == Eq(IVar("b"), Select(Update(ArrVar("a"), IVar("e"), IVar("x")), IConst(1)))


def test_subst_is_simultaneous():
    phi = Eq(IVar("x"), IVar("y"))
    assert subst(phi, ints={"x": IVar("y"), "y": IVar("x")}) == Eq(IVar("y"), IVar("x"))


def test_subst_sort_error():
    with pytest.raises(SortError):
        Subst(ints={"x": SeqVar("a")})
    with pytest.raises(SortError):
        Subst(arrs={"a": IVar("x")})


def test_membership_examples():
    r = IndexRange(LinExpr(0), LinExpr(6), LinExpr(2))
    f = range_to_formula(IVar("x"), r)
    assert eval_formula({"x": 4}, {}, {}, f)
    assert not eval_formula({"x": 3}, {}, {}, f)
    unit = range_to_formula(IVar("x"), IndexRange(LinExpr.var("l"), LinExpr.var("h"), LinExpr(1)))
    assert same(unit, parse_assertion("l <= x && x <= h"))
    empty = range_to_formula(IVar("x"), IndexRange(LinExpr(5), LinExpr(3), LinExpr(1)), "notin")
    assert all(eval_formula({"x": v}, {}, {}, empty) for v in range(-5, 10))


def test_symbolic_step_rejected():
    with pytest.raises(RangeError):
        range_to_formula(IVar("x"), IndexRange(LinExpr(0), LinExpr(6), LinExpr.var("s")))


@pytest.mark.parametrize("step", [1, 2, 3, -1, -2, -5])
def test_membership_matches_enumeration(step):
    for lo in range(-6, 7):
        for hi in range(-6, 7):
            seq = list(seq_range(lo, hi, step))
            if len(seq) > 64:
                continue
            f = range_to_formula(IVar("x"), IndexRange(LinExpr(lo), LinExpr(hi), LinExpr(step)))
            g = range_to_formula(IVar("x"), IndexRange(LinExpr(lo), LinExpr(hi), LinExpr(step)), "notin")
            for v in range(-8, 9):
                assert eval_formula({"x": v}, {}, {}, f) == (v in seq)
                assert eval_formula({"x": v}, {}, {}, g) == (v not in seq)


def test_range_denotation():
    assert list(seq_range(0, 6, 2)) == [0, 2, 4, 6]
    assert list(seq_range(6, 0, -3)) == [6, 3, 0]
    assert list(seq_range(5, 3, 1)) == []


def test_restricted_forms():
    assert restricted_to_formula(RestrictedAssertion()) == TrueF()
    ra = RestrictedAssertion(
        {"in": IndexRange(LinExpr.var("x") + 1, LinExpr.var("N") - 1, LinExpr(1)),
         "out": IndexRange(LinExpr(0), LinExpr.var("x") - 1, LinExpr(1))},
        [("b0", "in", LinExpr.var("x"))],
        [parse_assertion("x != N - 1")])
    want = parse_assertion("idx(in) = [x + 1, N - 1; 1] && idx(out) = [0, x - 1; 1] && b0 = in[x] && x != N - 1")
    assert same(restricted_to_formula(ra), want)
    merge = parse_assertion("i + j = k && k < N + N && i <= N && j <= N")
    ra = RestrictedAssertion({}, [], [merge])
    assert restricted_to_formula(ra) == merge


def test_text_round_trip_examples():
    for text in ["idx(in) = [x + 1, N - 1; 1] && b0 = in[x] && x != N - 1",
                 "x notin idx(out) && snoc(idx(out), x) = [0, x; 1]",
                 "out{x -> z1}[x] = z1 && tl(idx(in)) = nil",
                 "hd(cons(3, idx(a))) = 3 && !(x <= 2)"]:
        f = parse_assertion(text)
        assert parse_assertion(fmt(f)) == f


def test_normalize_dedups_and_sorts():
    f = parse_assertion("y = 1 && x = 0 && y = 1 && true")
    assert fmt(normalize(f)) == "x = 0 && y = 1"
    assert same(parse_assertion("!(!(x = 0))"), parse_assertion("x = 0"))


# ------------------------------------------------------------------ properties

@settings(max_examples=300, deadline=None)
@given(FORMULA)
def test_text_round_trip(f):
    assert same(parse_assertion(fmt(f)), f)


@settings(max_examples=300, deadline=None)
@given(FORMULA, states())
def test_eval_total(f, s):
    R, H, I = s
    assert eval_formula(R, H, I, f) in (True, False)


@LEMMA
@given(FORMULA, st.sampled_from(REGS), INT, states())
def test_lemma_register_substitution(phi, x, e, s):
    R, H, I = s
    v = eval_term(R, H, I, e)
    if v is None:
        return
    assert eval_formula(R, H, I, subst(phi, ints={x: e})) == eval_formula({**R, x: v}, H, I, phi)


@LEMMA
@given(FORMULA, st.sampled_from(ARRS), INT, st.sampled_from(REGS), states())
def test_lemma_array_update(phi, a, e, x, s):
    R, H, I = s
    m = eval_term(R, H, I, e)
    if m is None or x not in R:
        return
    lhs = eval_formula(R, H, I, subst(phi, arrs={a: Update(ArrVar(a), e, IVar(x))}))
    assert lhs == eval_formula(R, {**H, (a, m): R[x]}, I, phi)


@LEMMA
@given(FORMULA, st.sampled_from(ARRS), INT, st.booleans(), states())
def test_lemma_index_sequences(phi, a, e, tail, s):
    R, H, I = s
    if tail:
        if not I[a]:
            return
        lhs = eval_formula(R, H, I, subst(phi, seqs={a: Tail(SeqVar(a))}))
        assert lhs == eval_formula(R, H, {**I, a: I[a][1:]}, phi)
    else:
        v = eval_term(R, H, I, e)
        if v is None:
            return
        lhs = eval_formula(R, H, I, subst(phi, seqs={a: Snoc(SeqVar(a), e)}))
        assert lhs == eval_formula(R, H, {**I, a: I[a] + (v,)}, phi)
