"""HLS-style C++ generation for target programs (and baselines for sources).

Each `kernel { ... }` region becomes a function.  Converted arrays are
passed as `hls::stream` references, arrays that stayed arrays as
pointers.  Registers shared with the host are passed by reference,
kernel-only registers become locals.
"""

from __future__ import annotations

from dataclasses import dataclass

from .frontend.ast import (
    Assign, BinOp, Const, For, If, Kernel, ReadArr, ReadStream, Seq, Ty, Var,
    WriteArr, WriteStream, arrays_of, assigned_vars, expr_vars, used_vars, walk,
)

WIDTHS = (8, 16, 32, 64)
HOST_CELLS = 4096

STUB_HEADER = """\
// Minimal stand-in for the vendor header, enough for syntax checks and
// software runs.
#pragma once
#include <deque>
#include <stdexcept>

namespace hls {
template <typename T>
class stream {
 public:
  stream() {}
  explicit stream(const char *) {}
  T read() {
    if (q_.empty()) throw std::runtime_error("read from empty stream");
    T v = q_.front();
    q_.pop_front();
    return v;
  }
  void write(const T &v) { q_.push_back(v); }
  bool empty() const { return q_.empty(); }

 private:
  std::deque<T> q_;
};
}  // namespace hls
"""


@dataclass
class EmitConfig:
    name: str = "prog"
    width: int = 32
    depth: int = None            # stream depth hint, emitted as a pragma
    style: str = "streamed"      # baseline | buffered | streamed
    fill: bool = False           # host arrays start from fill_value(i) instead of zero

    def __post_init__(self):
        if self.width not in WIDTHS:
            raise ValueError(f"integer width must be one of {WIDTHS}")
        if self.style not in ("baseline", "buffered", "streamed"):
            raise ValueError(f"unknown style {self.style!r}")


def fill_value(i):
    """Initial host array contents when EmitConfig.fill is set."""
    return (i * 37 + 11) % 201 - 100


_C_OPS = {"=": "=="}


def c_expr(e):
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        op = _C_OPS.get(e.op, e.op)
        return f"({c_expr(e.left)} {op} {c_expr(e.right)})"
    raise TypeError(e)


def _strip(text):
    return text[1:-1] if text.startswith("(") and text.endswith(")") else text


def c_stmt(s, ind, calls):
    pad = "  " * ind
    if isinstance(s, Seq):
        out = []
        for t in s.items:
            out += c_stmt(t, ind, calls)
        return out
    if isinstance(s, Assign):
        return [f"{pad}{s.x} = {_strip(c_expr(s.e))};"]
    if isinstance(s, ReadArr):
        return [f"{pad}{s.x} = {s.a}[{_strip(c_expr(s.idx))}];"]
    if isinstance(s, WriteArr):
        return [f"{pad}{s.a}[{_strip(c_expr(s.idx))}] = {s.x};"]
    if isinstance(s, ReadStream):
        return [f"{pad}{s.x} = {s.a}.read();"]
    if isinstance(s, WriteStream):
        return [f"{pad}{s.a}.write({s.x});"]
    if isinstance(s, If):
        out = [f"{pad}if ({s.x}) {{", *c_stmt(s.then, ind + 1, calls)]
        if isinstance(s.orelse, Seq) and not s.orelse.items:
            return out + [f"{pad}}}"]
        return out + [f"{pad}}} else {{", *c_stmt(s.orelse, ind + 1, calls), f"{pad}}}"]
    if isinstance(s, For):
        inc = f"{s.x} += {s.step}" if s.step > 0 else f"{s.x} -= {-s.step}"
        return [f"{pad}for ({s.x} = {_strip(c_expr(s.init))}; {s.x} != {_strip(c_expr(s.bound))}; {inc}) {{",
                *c_stmt(s.body, ind + 1, calls), f"{pad}}}"]
    if isinstance(s, Kernel):
        return [f"{pad}{calls[id(s)]};"]
    raise TypeError(s)


def _kernels(p):
    return [s for s in walk(p.main) if isinstance(s, Kernel)]


def _host_vars(p):
    """Registers mentioned outside every kernel region."""
    names = set()

    def go(s):
        if isinstance(s, Kernel):
            return
        if isinstance(s, Seq):
            for t in s.items:
                go(t)
        elif isinstance(s, For):
            names.update({s.x} | expr_vars(s.init) | expr_vars(s.bound))
            go(s.body)
        elif isinstance(s, If):
            names.add(s.x)
            go(s.then)
            go(s.orelse)
        else:
            names.update(used_vars(s) | assigned_vars(s))

    go(p.main)
    return names


@dataclass
class _KernelSig:
    name: str
    params: list                 # (c declaration, argument text)
    locals: list


def _signature(p, k, name, streamed, host_vars):
    arrays = sorted(arrays_of(k.body))
    regs = sorted((used_vars(k.body) | assigned_vars(k.body)) - set(arrays))
    params = []
    for a in arrays:
        if a in streamed:
            params.append((f"hls::stream<data_t> &{a}", a))
        else:
            params.append((f"data_t *{a}", a))
    for n in p.params:
        if n in regs:
            params.append((f"data_t {n}", n))
    locs = []
    for r in regs:
        if r in p.params:
            continue
        if r in host_vars:
            params.append((f"data_t &{r}", r))
        else:
            locs.append(r)
    return _KernelSig(name, params, locs)


def _streamed(p):
    return {s.a for s in walk(p.main) if isinstance(s, (ReadStream, WriteStream))}


def _names(p, cfg):
    ks = _kernels(p)
    return {id(k): cfg.name if i == 0 else f"{cfg.name}_{i}" for i, k in enumerate(ks)}


def _prelude(cfg):
    return [
        "#include <cstdint>",
        '#include "hls_stream.h"',
        "",
        f"typedef int{cfg.width}_t data_t;",
        "",
    ]


def _kernel_fn(p, k, sig, cfg, streamed):
    decl = ", ".join(d for d, _ in sig.params)
    out = [f"void {sig.name}({decl}) {{"]
    for a in sorted(arrays_of(k.body)):
        if a in streamed:
            out.append(f"#pragma HLS INTERFACE axis port={a}")
            if cfg.depth:
                out.append(f"#pragma HLS STREAM variable={a} depth={cfg.depth}")
        else:
            out.append(f"#pragma HLS INTERFACE m_axi port={a}")
    if sig.locals:
        out.append("  data_t " + ", ".join(f"{r} = 0" for r in sig.locals) + ";")
    out += c_stmt(k.body, 1, {})
    out.append("}")
    return out


def _sigs(p, cfg):
    streamed = _streamed(p)
    hv = _host_vars(p)
    names = _names(p, cfg)
    return streamed, [(k, _signature(p, k, names[id(k)], streamed, hv)) for k in _kernels(p)]


def emit_kernel(t, cfg=None):
    """Kernel functions of a program, one per kernel region."""
    cfg = cfg or EmitConfig()
    streamed, sigs = _sigs(t, cfg)
    out = _prelude(cfg)
    for k, sig in sigs:
        out += _kernel_fn(t, k, sig, cfg, streamed)
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def _rev_note(t, streamed):
    """True when host code moves a stream inside a descending loop."""
    def go(s, desc):
        if isinstance(s, Kernel):
            return False
        if isinstance(s, Seq):
            return any(go(u, desc) for u in s.items)
        if isinstance(s, For):
            return go(s.body, desc or s.step < 0)
        if isinstance(s, If):
            return go(s.then, desc) or go(s.orelse, desc)
        return desc and isinstance(s, (ReadStream, WriteStream)) and s.a in streamed
    return go(t.main, False)


def emit_host(t, cfg=None, with_kernels=False):
    """Host program: streams declared locally, kernels called in place."""
    cfg = cfg or EmitConfig()
    streamed, sigs = _sigs(t, cfg)
    out = _prelude(cfg)
    out += ["#include <cstdio>", "#include <cstdlib>", ""]
    if with_kernels:
        for k, sig in sigs:
            out += _kernel_fn(t, k, sig, cfg, streamed)
            out.append("")
    else:
        for _, sig in sigs:
            out.append(f"void {sig.name}({', '.join(d for d, _ in sig.params)});")
        if sigs:
            out.append("")
    if _rev_note(t, streamed):
        out += [
            "// Streams below are produced or consumed by a descending host loop.",
            "// A DMA engine moves the buffer in ascending address order; the",
            "// element order inside each stream is the logical one used here.",
            "",
        ]
    kept = sorted(a for a in t.arrays() if a not in streamed)
    if kept and streamed:
        out += ["// Arrays that stayed arrays are plain host buffers shared by pointer.", ""]
    out.append("int main(int argc, char **argv) {")
    for i, n in enumerate(t.params, 1):
        out.append(f"  data_t {n} = argc > {i} ? (data_t)std::atoi(argv[{i}]) : 16;")
    for a in sorted(streamed):
        out.append(f"  hls::stream<data_t> {a};")
    for a in kept:
        out.append(f"  static data_t {a}[{HOST_CELLS}];")
    if kept and cfg.fill:
        out.append(f"  for (int i = 0; i < {HOST_CELLS}; i++) {{")
        out += [f"    {a}[i] = (data_t)((i * 37 + 11) % 201 - 100);" for a in kept]
        out.append("  }")
    hv = sorted(n for n in _host_vars(t) | {r for _, s in sigs for d, r in s.params if d.startswith("data_t &")}
                if t.decls.get(n) in (Ty.INT, Ty.BUF))
    if hv:
        out.append("  data_t " + ", ".join(f"{r} = 0" for r in hv) + ";")
    calls = {id(k): f"{sig.name}({', '.join(a for _, a in sig.params)})" for k, sig in sigs}
    out += c_stmt(t.main, 1, calls)
    ints = sorted(n for n, ty in t.decls.items() if ty is Ty.INT and n in hv)
    for r in ints:
        out.append(f'  std::printf("{r}=%lld\\n", (long long){r});')
    out.append("  return 0;")
    out.append("}")
    return "\n".join(out) + "\n"


def emit_baseline(p, cfg=None):
    """Source program as plain C++ with pointer interfaces."""
    cfg = cfg or EmitConfig(style="baseline")
    return emit_host(p, cfg, with_kernels=True)


def emit_all(t, source=None, cfg=None, buffer_only=False):
    """File name -> text for one translated program."""
    cfg = cfg or EmitConfig()
    files = {f"{cfg.name}_kernel.cpp": emit_kernel(t, cfg)}
    if not buffer_only:
        files[f"{cfg.name}_host.cpp"] = emit_host(t, cfg)
    if source is not None:
        files[f"{cfg.name}_baseline.cpp"] = emit_baseline(source, cfg)
    return files
