import json

import pytest

from streamline.assertions import parse_assertion
from streamline.frontend import load, parse, parse_stmt
from streamline.frontend.ast import Const, For, Seq, Ty, TypeEnv, Var, BinOp
from streamline.semantics import (
    EvalError, HashHeap, SourceState, TargetState, check_sim_relation, eval_expr,
    parse_input, run_program, run_source, run_target,
)

from conftest import program, translation


def test_eval_const():
    assert eval_expr({}, Const(7)) == 7


def test_eval_op():
    assert eval_expr({"x": 3, "y": 4}, BinOp("+", Var("x"), Var("y"))) == 7


@pytest.mark.parametrize("a,b", [(7, 2), (-7, 2), (7, -2), (-7, -2), (0, 5), (99, 7), (-1, 3)])
def test_division_truncates(a, b):
    q = int(a / b)                    # float division truncated: fine at this size
    R = {"x": a, "y": b}
    assert eval_expr(R, BinOp("/", Var("x"), Var("y"))) == q
    assert eval_expr(R, BinOp("%", Var("x"), Var("y"))) == a - b * q


def test_division_by_zero():
    with pytest.raises(EvalError):
        eval_expr({"x": 1, "y": 0}, BinOp("/", Var("x"), Var("y")))


def test_unbound_variable():
    with pytest.raises(EvalError):
        eval_expr({}, Var("q"))


def test_filter_source_n4():
    rep = run_source(program("filter"), {}, {"N": 4})
    assert rep.ok
    assert rep.heap_of("out") == {0: 0, 1: 1, 2: 2}


def test_filter_target_n4():
    rep = run_target(translation("filter").target, {}, {"N": 4})
    assert rep.ok
    assert rep.streams["out"] == [0, 1, 2]


def test_for_exit_binds_bound():
    s = For("x", Const(5), Const(5), 1, Seq((parse_stmt("y := 1;"),)))
    p = parse("int x, y;\ny := 0;")
    rep = run_source(p.with_main(Seq((parse_stmt("y := 0;"), s))), {}, {})
    assert rep.regs["x"] == 5 and rep.regs["y"] == 0
    assert rep.rules["R-ForExit"] == 1 and rep.rules["R-ForLoop"] == 0


def test_stuck_on_undefined_address():
    p = load("rarr a; int x;\nkernel { x := a[0]; }")
    rep = run_source(p, {}, {})
    assert rep.status == "stuck"
    assert "a" in rep.reason and rep.location == "x := a[0];"


def test_stream_read_pops_head():
    p = load("rarr a; int x;\nkernel { x := a.read(); }")
    rep = run_target(p, {"a": [4, 9]}, {})
    assert rep.regs["x"] == 4 and rep.streams["a"] == [9]


def test_stream_write_appends():
    p = load("warr a; int x;\nkernel { x := 7; a.write(x); }")
    rep = run_target(p, {}, {})
    assert rep.streams["a"] == [7]


def test_empty_stream_is_stuck():
    p = load("rarr a; int x;\nkernel { x := a.read(); }")
    assert run_target(p, {}, {}).status == "stuck"


def test_fuel_exhaustion_is_distinct():
    p = load("int x, y;\nfor (x = 0; x != -1; x += 1) { y := x; }")
    rep = run_source(p, {}, {}, fuel=500)
    assert rep.status == "fuel"


def test_missing_param():
    with pytest.raises(ValueError):
        run_source(program("filter"), {}, {})


# one directed test per reduction rule

RULE_PROGRAMS = {
    "R-Const": ("int x;\nx := 3;", {}),
    "R-Var": ("int x, y;\ny := 2;\nx := y;", {}),
    "R-Op": ("int x, y;\ny := 2;\nx := y + 1;", {}),
    "R-Assign": ("int x;\nx := 3;", {}),
    "R-Seq": ("int x, y;\nx := 1;\ny := 2;", {}),
    "R-IfTrue": ("int x, y;\nx := 1;\nif (x) { y := 5; } else { y := 6; }", {"y": 5}),
    "R-IfFalse": ("int x, y;\nx := 0;\nif (x) { y := 5; } else { y := 6; }", {"y": 6}),
    "R-ForLoop": ("int x, y;\ny := 0;\nfor (x = 0; x != 3; x += 1) { y := y + x; }", {"y": 3}),
    "R-ForExit": ("int x;\nfor (x = 2; x != 2; x += 1) { }", {"x": 2}),
    "R-ReadArray": ("warr a; int x, y;\nkernel { x := 4; a[1] := x; }\ny := a[1];", {"y": 4}),
    "R-WriteArray": ("warr a; int x;\nkernel { x := 4; a[1] := x; }", {}),
    "R-CallKer": ("int x;\nkernel { x := 9; }", {"x": 9}),
    "R-Read": ("rarr a; int x;\nx := 3;\na.write(x);\nkernel { x := a.read(); }", {"x": 3}),
    "R-Write": ("warr a; int x;\nkernel { x := 8; a.write(x); }", {}),
}


@pytest.mark.parametrize("rule", sorted(RULE_PROGRAMS))
def test_reduction_rule(rule):
    text, regs = RULE_PROGRAMS[rule]
    p = load(text)
    rep = run_program(p, {})
    assert rep.ok, rep.reason
    assert rep.rules[rule] >= 1
    for k, v in regs.items():
        assert rep.regs[k] == v


def test_write_array_updates_heap():
    rep = run_program(load(RULE_PROGRAMS["R-WriteArray"][0]), {})
    assert rep.heap == {("a", 1): 4}


def test_for_loop_step_and_descending():
    p = load("int x, y;\ny := 0;\nfor (x = 6; x != 0; x -= 2) { y := y * 10; y := y + x; }")
    rep = run_source(p, {}, {})
    assert rep.regs["y"] == 642 and rep.regs["x"] == 0


def test_for_loop_rebinds_after_body():
    # the body moves x; the next iteration starts from x + step
    p = load("int x, y;\ny := 0;\nfor (x = 0; x != 6; x += 1) { x := x + 1; y := y + 1; }")
    rep = run_source(p, {}, {})
    assert rep.regs["y"] == 3


def test_sim_relation_examples():
    gamma = TypeEnv({"a": Ty.RARR})
    H = {("a", 1): 2, ("a", 0): 3}
    true = parse_assertion("true")
    assert check_sim_relation(SourceState({}, {}), TargetState({}, {}), TypeEnv({}), true, {})
    assert check_sim_relation(SourceState({}, H), TargetState({}, {"a": [2, 3]}), gamma, true, {"a": (1, 0)})
    assert not check_sim_relation(SourceState({}, H), TargetState({}, {"a": [3, 2]}), gamma, true, {"a": (1, 0)})


def test_sim_relation_register_and_domain_clauses():
    gamma = TypeEnv({"x": Ty.INT, "a": Ty.RARR})
    true = parse_assertion("true")
    H = {("a", 0): 1}
    assert not check_sim_relation(SourceState({"x": 1}, H), TargetState({"x": 2}, {"a": [1]}), gamma, true, {"a": (0,)})
    assert not check_sim_relation(SourceState({"x": 1}, H), TargetState({"x": 1}, {"a": [1, 1]}), gamma, true, {"a": (0, 5)})
    phi = parse_assertion("idx(a) = [0, 0; 1] && x = 1")
    assert check_sim_relation(SourceState({"x": 1}, H), TargetState({"x": 1}, {"a": [1]}), gamma, phi, {"a": (0,)})


def test_filter_counters():
    for n in (2, 5, 17):
        rs = run_source(program("filter"), {}, {"N": n})
        rt = run_target(translation("filter").target, {}, {"N": n})
        assert rs.count("in", "heap_reads") == 2 * (n - 1)
        assert rt.count("in", "stream_reads") == n
        assert rt.count("out", "stream_writes") == n - 1


def test_deterministic():
    a = run_source(program("merge"), {("d1", i): i for i in range(8)} | {("d2", i): 2 * i for i in range(8)}, {"N": 8})
    b = run_source(program("merge"), {("d1", i): i for i in range(8)} | {("d2", i): 2 * i for i in range(8)}, {"N": 8})
    assert a.to_json() == b.to_json()


def test_json_input_and_report():
    doc = {"params": {"N": 8}, "heap": {"a": {"0": 5}}, "streams": {"a": [1, 2]}}
    params, heap, streams = parse_input(doc)
    assert params == {"N": 8} and heap == {("a", 0): 5} and streams == {"a": [1, 2]}
    rep = run_program(program("filter"), {"params": {"N": 3}})
    d = json.loads(rep.dumps())
    assert d["heap"]["out"] == {"0": 0, "1": 1}
    assert list(d) == sorted(d)


def test_trace():
    rep = run_target(translation("filter").target, {}, {"N": 2}, trace=True)
    kinds = [t[0] for t in rep.trace]
    assert kinds.count("push") == 3 and kinds.count("pop") == 2


def test_hash_heap_is_total_and_stable():
    h = HashHeap(3)
    assert ("a", 10 ** 9) in h
    assert h["a", 4] == HashHeap(3)["a", 4]
    assert -100 <= h["b", -7] <= 100
