import pytest
from hypothesis import given, settings, strategies as st

from streamline.frontend import (
    InlineError, ParseError, TypeCheckError, fmt_program, inline, load, parse,
    parse_stmt, typecheck,
)
from streamline.frontend.annotate import AnnotationError, annotate, parse_annotations
from streamline.frontend.ast import (
    Assign, BinOp, Const, For, If, Kernel, Program, ReadArr, ReadStream, Seq,
    Ty, Var, WriteArr, WriteStream, walk,
)

from conftest import CORPUS, corpus_text

FILTER = corpus_text("filter")


def test_read_statement():
    assert parse_stmt("x := a[i];") == ReadArr("x", "a", Var("i"))


def test_filter_kernel_shape():
    p = parse(FILTER)
    k = [s for s in walk(p.main) if isinstance(s, Kernel)][0]
    loop = k.body.items[0]
    assert isinstance(loop, For)
    assert (loop.x, loop.init, loop.step) == ("x", Const(0), 1)
    assert loop.bound == BinOp("-", Var("N"), Const(1))
    kinds = [type(s).__name__ for s in loop.body.items]
    assert kinds == ["ReadArr", "ReadArr", "Assign", "Assign", "WriteArr"]


def test_nested_kernel_rejected():
    with pytest.raises(ParseError):
        parse("kernel { kernel { } }")


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as e:
        parse("int x;\nx := ;")
    assert "2" in str(e.value)


def test_nested_expressions_get_temporaries():
    p = load("int x, y, z;\nz := x + y * 2;")
    first, second = p.main.items
    assert first.e == BinOp("*", Var("y"), Const(2))
    assert second == Assign("z", BinOp("+", Var("x"), Var(first.x)))
    assert p.decls[first.x] is Ty.INT


def test_inline_without_calls_is_identity():
    p = parse(FILTER)
    assert inline(p).main == p.main


def test_inline_twice_gives_fresh_locals():
    p = inline(parse("int z;\nfunc f() { int y; y := 1; z := y; }\ncall f();\ncall f();"))
    names = [s.x for s in walk(p.main) if isinstance(s, Assign) and s.e == Const(1)]
    assert len(names) == 2 and names[0] != names[1]
    assert not p.funcs


def test_inline_array_arguments():
    p = load("param N; rarr a; warr b; int x, v;\n"
             "func cp(rarr s, warr d, int n) { int i, t; for (i = 0; i != n; i += 1) { t := s[i]; d[i] := t; } }\n"
             "for (x = 0; x != N; x += 1) { v := x; a[x] := v; }\n"
             "kernel { call cp(a, b, N); }\n"
             "for (x = 0; x != N; x += 1) { v := b[x]; }")
    arrays = {s.a for s in walk(p.main) if isinstance(s, (ReadArr, WriteArr))}
    assert arrays == {"a", "b"}


def test_recursion_rejected():
    with pytest.raises(InlineError):
        inline(parse("func f() { call g(); }\nfunc g() { call f(); }\ncall f();"))


def test_typecheck_accepts_filter_with_kernel_view():
    env = typecheck(load(FILTER))
    assert env["in"] is Ty.RARR and env["out"] is Ty.WARR
    assert env["x"] is Ty.INT


def test_typecheck_rejects_read_and_write_in_one_region():
    with pytest.raises(TypeCheckError):
        load("rarr a; int x;\nkernel { x := a[0]; a[1] := x; }")


def test_typecheck_rejects_unbound():
    with pytest.raises(TypeCheckError):
        load("int x;\nx := y;")


def test_typecheck_rejects_buffer_in_source():
    p = inline(parse("int x; buf b;\nx := b + 1;"))
    with pytest.raises(TypeCheckError):
        typecheck(p)
    typecheck(p, target=True)


def test_empty_program():
    env = typecheck(parse(""))
    assert env.bindings == {}


def test_typecheck_order_independent():
    a = typecheck(load("rarr a; warr b; int x, y;\nkernel { x := a[0]; b[0] := x; }"))
    b = typecheck(load("int y, x; warr b; rarr a;\nkernel { x := a[0]; b[0] := x; }"))
    assert a.bindings == b.bindings


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trip(name):
    p = parse(corpus_text(name))
    q = parse(fmt_program(p))
    assert q.main == p.main and q.decls == p.decls and q.params == p.params


def test_annotation_file():
    p = load(corpus_text("merge"))
    notes = parse_annotations("# merge\n0: k <= N + N\n")
    q = annotate(p, notes)
    loops = [s for s in walk(q.main) if isinstance(s, For)]
    assert loops[0].annot == "k <= N + N" or "k <= N + N" in loops[1].annot
    with pytest.raises(AnnotationError):
        annotate(p, {9: "x = 0"})
    with pytest.raises(AnnotationError):
        parse_annotations("zero: x = 0")


# ------------------------------------------------------------ round-trip property

REGS = ("x", "y", "z", "N")
ARRS = ("a", "b")
atom = st.one_of(st.sampled_from(REGS).map(Var), st.integers(-9, 99).map(Const))
expr = st.one_of(atom, st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "%", "<", "=", "<="]),
                                 atom, atom))
dest = st.sampled_from(REGS[:3])


def simple():
    return st.one_of(
        st.builds(Assign, dest, expr),
        st.builds(ReadArr, dest, st.sampled_from(ARRS), expr),
        st.builds(WriteArr, st.sampled_from(ARRS), expr, dest),
        st.builds(ReadStream, dest, st.sampled_from(ARRS)),
        st.builds(WriteStream, st.sampled_from(ARRS), dest),
    )


def block(inner):
    return st.lists(inner, max_size=3).map(lambda xs: Seq(tuple(xs)))


def stmts(in_kernel):
    base = simple()

    def extend(inner):
        opts = [
            st.builds(If, dest, block(inner), block(inner)),
            st.builds(For, dest, expr, expr, st.sampled_from([1, 2, -1, -3]), block(inner)),
        ]
        return st.one_of(*opts)

    s = st.recursive(base, extend, max_leaves=8)
    if in_kernel:
        return s
    return st.one_of(s, block(s).map(Kernel))


@settings(max_examples=300, deadline=None)
@given(st.lists(stmts(False), max_size=4))
def test_parse_print_round_trip(items):
    p = Program({"x": Ty.INT, "y": Ty.INT, "z": Ty.INT, "a": Ty.RARR, "b": Ty.WARR},
                ("N",), (), {}, Seq(tuple(items)))
    q = parse(fmt_program(p))
    assert q.main == p.main
    assert q.decls == p.decls
