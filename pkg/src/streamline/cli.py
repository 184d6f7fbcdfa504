"""Command line: translate, run, diff, verify.

Exit codes: 0 ok, 1 input error, 2 verification failure, 3 diff
mismatch, 4 stuck or out-of-fuel run.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from pathlib import Path

from .assertions import AssertionSyntaxError
from .emit import STUB_HEADER, EmitConfig, emit_all
from .frontend import InlineError, ParseError, TypeCheckError, fmt_program, load
from .frontend.annotate import AnnotationError, annotate, parse_annotations
from .frontend.ast import ReadStream, WriteStream, has_stream_ops, walk
from .semantics import DEFAULT_FUEL, run_program
from .translate import TranslateConfig, check_derivation, dumps, translate
from .translate.difftest import diff, diff_translation
from .vcgen import InstantiationBackend, SolverConfig
from .vcgen.backend_a import SmtBackend

REPORT_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_VERIFY, EXIT_DIFF, EXIT_STUCK = 0, 1, 2, 3, 4
INPUT_ERRORS = (OSError, ParseError, TypeCheckError, InlineError, AnnotationError,
                AssertionSyntaxError, ValueError)


class InputError(Exception):
    pass


def _out(args, doc, text=None):
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    elif text:
        print(text)


def _load(path, annotations=None):
    p = load(Path(path).read_text())
    if annotations:
        p = annotate(p, parse_annotations(Path(annotations).read_text()))
    return p


def _backend(args):
    use_smt = args.backend == "smt" or (args.backend is None and args.solver_path)
    if use_smt:
        b = SmtBackend(args.solver_path, args.solver_timeout_ms, args.dump_smt)
        if not b.available:
            raise InputError("no SMT solver found (use --solver-path or STREAMLINE_SOLVER)")
        return b
    return InstantiationBackend()


def _config(args):
    solver = SolverConfig(backend=_backend(args), seed=args.seed, coeff_range=args.coeff_range)
    return TranslateConfig(simplify=not args.no_simplify, buffer_only=args.buffer_only, solver=solver)


def _name(path):
    stem = re.sub(r"\W", "_", Path(path).stem)
    return stem if stem and not stem[0].isdigit() else f"k_{stem}"


def _add_translate_flags(sp):
    sp.add_argument("--buffer-only", action="store_true",
                    help="stop after buffer insertion; no stream interfaces")
    sp.add_argument("--no-simplify", action="store_true",
                    help="keep the two-step b := a.read(); x := b form")
    sp.add_argument("--backend", choices=("internal", "smt"),
                    help="validity backend (default: smt when --solver-path is given)")
    sp.add_argument("--solver-path", help="SMT solver binary (default: $STREAMLINE_SOLVER, then z3)")
    sp.add_argument("--solver-timeout-ms", type=int, default=10000)
    sp.add_argument("--dump-smt", metavar="DIR", help="write every SMT query to DIR/*.smt2")
    sp.add_argument("--coeff-range", type=int, default=2, metavar="K",
                    help="template coefficients range over -K..K")
    sp.add_argument("--annotate", metavar="FILE", help="loop invariants, '<loop-index>: <assertion>' per line")
    sp.add_argument("--seed", type=int, default=0)


# ------------------------------------------------------------------ translate

def cmd_translate(args):
    t0 = time.perf_counter()
    p = _load(args.file, args.annotate)
    cfg = _config(args)
    t = translate(p, cfg)
    name = args.name or _name(args.file)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {f"{name}.target.hdsl": fmt_program(t.target)}
    verdict = None
    if t.derivation is not None:
        files[f"{name}.deriv.json"] = dumps(t.derivation)
        res = check_derivation(t.derivation, cfg.solver.get_backend())
        verdict = {"ok": res.ok, "path": res.path, "message": res.message,
                   "nodes": res.nodes, "entailments": res.entailments,
                   "failures": [list(f) for f in res.failures]}
    style = "buffered" if args.buffer_only else "streamed"
    files.update(emit_all(t.target, p, EmitConfig(name=name, width=args.width, depth=args.depth, style=style),
                          buffer_only=args.buffer_only))
    if args.stub_header:
        files["hls_stream.h"] = STUB_HEADER
    for fn, text in files.items():
        (outdir / fn).write_text(text)
    report = {
        "version": REPORT_VERSION,
        "command": "translate",
        "program": str(args.file),
        "translation": t.report,
        "derivation_check": verdict,
        "files": sorted(files),
        "wall_s": round(time.perf_counter() - t0, 4),
    }
    (outdir / f"{name}.report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.buffer_only and not args.json:
        print(fmt_program(t.target), end="")
    lines = [f"converted: {', '.join(t.report.get('converted', [])) or '(none)'}"]
    for a, why in t.report.get("given_up", {}).items():
        lines.append(f"kept as array: {a} ({why})")
    if verdict is not None:
        lines.append("derivation: " + ("ok" if verdict["ok"] else f"FAIL at {verdict['path']}: {verdict['message']}"))
    lines.append(f"wrote {len(files) + 1} files to {outdir}")
    _out(args, report, "\n".join(lines))
    if verdict is not None and not verdict["ok"]:
        return EXIT_VERIFY
    return EXIT_OK


# ------------------------------------------------------------------------ run

def cmd_run(args):
    p = load(Path(args.file).read_text())
    doc = json.loads(Path(args.input).read_text()) if args.input else {}
    rep = run_program(p, doc, args.fuel, args.trace)
    d = rep.to_json()
    d["version"] = REPORT_VERSION
    d["interpreter"] = "target" if has_stream_ops(p.main) else "source"
    print(json.dumps(d, indent=2, sort_keys=True))
    if not rep.ok:
        print(f"{rep.status}: {rep.reason} at {rep.location}", file=sys.stderr)
        return EXIT_STUCK
    return EXIT_OK


# ----------------------------------------------------------------------- diff

def _access_totals(src, tgt, case):
    from .semantics import run_source, run_target
    rs = run_source(src, dict(case.heap), case.params)
    kept = {a for a in src.arrays()} - {s.a for s in walk(tgt.main) if isinstance(s, (ReadStream, WriteStream))}
    rt = run_target(tgt, {}, case.params, DEFAULT_FUEL, {k: v for k, v in case.heap.items() if k[0] in kept})
    return {"source": rs.counters, "target": rt.counters}


def cmd_diff(args):
    t0 = time.perf_counter()
    p = _load(args.file, args.annotate)
    kw = {"n_cases": args.n_cases, "seed": args.seed, "n_range": (args.n_min, args.n_max)}
    if args.target:
        tgt = load(Path(args.target).read_text())
        conv = tuple(sorted({s.a for s in walk(tgt.main) if isinstance(s, (ReadStream, WriteStream))}))
        res = diff(p, tgt, conv, None, **kw)
    else:
        t = translate(p, _config(args))
        tgt = t.target
        res = diff_translation(t, **kw)
    report = {
        "version": REPORT_VERSION,
        "command": "diff",
        "program": str(args.file),
        "cases": res.cases,
        "statuses": res.statuses,
        "verdict": "PASS" if res.ok else "FAIL",
        "wall_s": round(time.perf_counter() - t0, 4),
    }
    if res.ok and p.params:
        from .translate.difftest import sample_cases
        cases = sample_cases(p, 1, args.seed, (args.n_max, args.n_max))
        if cases:
            report["access_counts"] = {"params": cases[0].params, **_access_totals(p, tgt, cases[0])}
    if not res.ok:
        report["mismatch"] = {"reason": res.mismatch.reason, "case": res.mismatch.case.to_json()}
        text = f"FAIL after {res.cases} cases: {res.mismatch.reason}\nwitness params: {res.mismatch.case.params}"
    else:
        text = f"PASS: {res.cases} cases agree"
    _out(args, report, text)
    return EXIT_OK if res.ok else EXIT_DIFF


# --------------------------------------------------------------------- verify

def cmd_verify(args):
    try:
        doc = json.loads(Path(args.file).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read derivation: {e}") from None
    if not isinstance(doc, dict) or "version" not in doc or "root" not in doc:
        raise InputError("not a derivation document (needs 'version' and 'root')")
    res = check_derivation(doc, _backend(args))
    report = {"version": REPORT_VERSION, "command": "verify", "file": str(args.file), "ok": res.ok,
              "path": res.path, "message": res.message, "nodes": res.nodes, "entailments": res.entailments,
              "failures": [list(f) for f in res.failures]}
    if res.ok:
        text = f"PASS: {res.nodes} nodes, {res.entailments} entailments"
    else:
        text = f"FAIL at {res.path or '(document)'}: {res.message}"
        for path, _ in res.failures[1:]:
            text += f"\nalso fails at {path}"
    _out(args, report, text)
    return EXIT_OK if res.ok else EXIT_VERIFY


def build_parser():
    ap = argparse.ArgumentParser(prog="streamline", description="Array-to-stream translation for HLS kernels.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("translate", help="translate a program and check its derivation")
    sp.add_argument("file")
    sp.add_argument("-o", "--output", default=".", help="output directory")
    sp.add_argument("--name", help="kernel and file name stem (default: input stem)")
    sp.add_argument("--width", type=int, default=32, choices=(8, 16, 32, 64))
    sp.add_argument("--depth", type=int, help="stream depth pragma")
    sp.add_argument("--stub-header", action="store_true",
                    help="also write a minimal hls_stream.h for compiling without the vendor headers")
    sp.add_argument("--json", action="store_true")
    _add_translate_flags(sp)
    sp.set_defaults(func=cmd_translate)

    sp = sub.add_parser("run", help="run a source or target program")
    sp.add_argument("file")
    sp.add_argument("input", nargs="?", help='JSON: {"params": {...}, "heap": {...}, "streams": {...}}')
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("diff", help="differential test of a program against its translation")
    sp.add_argument("file")
    sp.add_argument("--target", help="compare against this target program instead of translating")
    sp.add_argument("--n-cases", type=int, default=200)
    sp.add_argument("--n-min", type=int, default=1)
    sp.add_argument("--n-max", type=int, default=32)
    sp.add_argument("--json", action="store_true")
    _add_translate_flags(sp)
    sp.set_defaults(func=cmd_diff)

    sp = sub.add_parser("verify", help="check a derivation file")
    sp.add_argument("file")
    sp.add_argument("--backend", choices=("internal", "smt"))
    sp.add_argument("--solver-path")
    sp.add_argument("--solver-timeout-ms", type=int, default=10000)
    sp.add_argument("--dump-smt", metavar="DIR")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, *INPUT_ERRORS) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
