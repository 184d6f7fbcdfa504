"""Type checking with per-region array orientation.

Declared orientations describe the kernel side; host code sees them
flipped, so an array the host fills is declared ``rarr``.
"""

from __future__ import annotations

from .ast import (
    Assign, Call, For, If, Kernel, ReadArr, ReadStream, Seq, Ty, TypeEnv,
    WriteArr, WriteStream, expr_vars,
)


class TypeCheckError(Exception):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


def declared_env(p):
    b = {n: Ty.INT for n in p.params}
    b.update(p.decls)
    return TypeEnv(b, tuple(p.params), tuple(p.requires))


def typecheck(p, target=False, kept=None):
    """Return the declared TypeEnv or raise TypeCheckError.

    In target mode stream operations are allowed and BUF registers may
    appear in expressions.  ``kept`` restricts array-style accesses to
    the named arrays (all arrays when None).
    """
    env = declared_env(p)
    errors = []

    def err(msg):
        if msg not in errors:
            errors.append(msg)

    def bound(name):
        if name not in env:
            err(f"unbound variable {name!r}")
            return None
        return env[name]

    def scalar(name, ctx):
        ty = bound(name)
        if ty is None:
            return
        if ty.is_array:
            err(f"array {name!r} used as a scalar in {ctx}")
        elif ty is Ty.BUF and not target:
            err(f"buffer {name!r} used in expression of the source program")

    def expr(e, ctx):
        for v in sorted(expr_vars(e)):
            scalar(v, ctx)

    def array(name, want, in_kernel, how):
        ty = bound(name)
        if ty is None:
            return
        if not ty.is_array:
            err(f"{name!r} is not an array")
            return
        eff = ty if in_kernel else ty.flipped()
        region = "kernel" if in_kernel else "host"
        if eff is not want:
            verb = "written" if want is Ty.WARR else "read"
            err(f"array {name!r} is {eff.value} in {region} code but is {verb} ({how})")

    def dest(name):
        ty = bound(name)
        if ty is None:
            return
        if ty.is_array:
            err(f"cannot assign to array {name!r}")
        elif ty is Ty.BUF and not target:
            err(f"buffer {name!r} assigned in the source program")

    def go(s, k):
        if isinstance(s, Seq):
            for t in s.items:
                go(t, k)
        elif isinstance(s, ReadArr):
            dest(s.x)
            expr(s.idx, "array index")
            array(s.a, Ty.RARR, k, "array read")
            if kept is not None and s.a not in kept:
                err(f"array access to stream {s.a!r}")
        elif isinstance(s, WriteArr):
            scalar(s.x, "array write")
            expr(s.idx, "array index")
            array(s.a, Ty.WARR, k, "array write")
            if kept is not None and s.a not in kept:
                err(f"array access to stream {s.a!r}")
        elif isinstance(s, (ReadStream, WriteStream)):
            if not target:
                err(f"stream operation on {s.a!r} in source program")
            if isinstance(s, ReadStream):
                dest(s.x)
                array(s.a, Ty.RARR, k, "stream read")
            else:
                scalar(s.x, "stream write")
                array(s.a, Ty.WARR, k, "stream write")
        elif isinstance(s, Assign):
            dest(s.x)
            expr(s.e, f"assignment to {s.x}")
        elif isinstance(s, If):
            scalar(s.x, "if condition")
            go(s.then, k)
            go(s.orelse, k)
        elif isinstance(s, For):
            ty = bound(s.x)
            if ty is not None and ty is not Ty.INT:
                err(f"loop variable {s.x!r} must be int")
            if s.step == 0:
                err("loop step must be nonzero")
            expr(s.init, "loop init")
            expr(s.bound, "loop bound")
            go(s.body, k)
        elif isinstance(s, Kernel):
            if k:
                err("kernel blocks cannot be nested")
            go(s.body, True)
        elif isinstance(s, Call):
            err(f"call to {s.name!r} survived inlining")
        else:
            err(f"unknown statement {s!r}")

    go(p.main, False)
    if errors:
        raise TypeCheckError(errors)
    return env
