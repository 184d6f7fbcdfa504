import re
import subprocess

import pytest

from streamline.emit import (
    HOST_CELLS, STUB_HEADER, EmitConfig, emit_all, emit_baseline, emit_host, emit_kernel, fill_value,
)
from streamline.frontend import load
from streamline.semantics import run_source, run_target

from conftest import CORPUS, needs_cxx, program, translation


def test_deterministic():
    t = translation("merge")
    assert emit_all(t.target, program("merge")) == emit_all(t.target, program("merge"))


def test_parameter_styles():
    k = emit_kernel(translation("filter").target, EmitConfig(name="filter"))
    assert "void filter(hls::stream<data_t> &in, hls::stream<data_t> &out, data_t N, data_t &x)" in k
    assert "#pragma HLS INTERFACE axis port=in" in k
    kmp = emit_kernel(translation("kmp").target)
    assert "data_t *a" in kmp and "#pragma HLS INTERFACE m_axi port=a" in kmp
    base = emit_baseline(program("filter"), EmitConfig(name="filter", style="baseline"))
    assert "data_t *in" in base and "hls::stream" not in base.split("int main")[0].split("typedef")[1]


def test_kernel_locals_and_ops():
    k = emit_kernel(translation("filter").target)
    assert "data_t b1 = 0, y0 = 0, y1 = 0, z0 = 0, z1 = 0;" in k
    assert "b1 = in.read();" in k and "out.write(z1);" in k
    merge = emit_kernel(translation("merge").target)
    assert "==" in merge and ":=" not in merge


def test_width_and_depth():
    t = translation("filter").target
    assert "typedef int16_t data_t;" in emit_kernel(t, EmitConfig(width=16))
    assert "#pragma HLS STREAM variable=in depth=64" in emit_kernel(t, EmitConfig(depth=64))
    with pytest.raises(ValueError):
        EmitConfig(width=12)


def test_rev_note():
    assert "descending host loop" in emit_host(translation("filter_rev").target)
    assert "descending host loop" not in emit_host(translation("filter").target)


def test_empty_kernel():
    p = load("int x;\nkernel { }\nx := 1;")
    k = emit_kernel(p, EmitConfig(name="e"))
    assert "void e(" in k
    assert "e();" in emit_host(p, EmitConfig(name="e"))


def test_file_set():
    t = translation("filter")
    files = emit_all(t.target, program("filter"), EmitConfig(name="f"))
    assert sorted(files) == ["f_baseline.cpp", "f_host.cpp", "f_kernel.cpp"]
    assert sorted(emit_all(t.target, None, EmitConfig(name="f"), buffer_only=True)) == ["f_kernel.cpp"]


def compile_and_run(tmp_path, text, n):
    (tmp_path / "hls_stream.h").write_text(STUB_HEADER)
    src = tmp_path / "m.cpp"
    src.write_text(text)
    exe = tmp_path / "m"
    cp = subprocess.run(["g++", "-std=c++17", "-w", "-I", str(tmp_path), str(src), "-o", str(exe)],
                        capture_output=True, text=True)
    assert cp.returncode == 0, cp.stderr
    out = subprocess.run([str(exe), str(n)], capture_output=True, text=True, check=True).stdout
    return {k: int(v) for k, v in re.findall(r"(\w+)=(-?\d+)", out)}


@needs_cxx
@pytest.mark.parametrize("name", CORPUS)
def test_compiled_programs_match_interpreter(tmp_path, name):
    n = 7
    t = translation(name)
    src = program(name)
    cfg = EmitConfig(name="k", width=64, fill=True)
    heap = {(a, i): fill_value(i) for a in src.arrays() for i in range(HOST_CELLS)}
    got = compile_and_run(tmp_path, emit_host(t.target, cfg, with_kernels=True), n)
    kept = set(src.arrays()) - set(t.report["converted"])
    rep = run_target(t.target, {}, {"N": n}, H0={k: v for k, v in heap.items() if k[0] in kept})
    assert rep.ok and got
    assert got == {k: rep.regs[k] for k in got}
    base = compile_and_run(tmp_path, emit_baseline(src, EmitConfig(name="k", width=64, fill=True,
                                                                  style="baseline")), n)
    rs = run_source(src, heap, {"N": n})
    assert base == {k: rs.regs[k] for k in base}
