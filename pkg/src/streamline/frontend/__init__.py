from .ast import *  # noqa: F401,F403
from .ast import ReadStream, Ty, WriteStream, flip, has_stream_ops, walk
from .inline import InlineError, inline, rename_expr, rename_stmt
from .parser import ParseError, parse, parse_stmt
from .printer import fmt_decls, fmt_expr, fmt_program, fmt_stmt
from .typecheck import TypeCheckError, declared_env, typecheck


def load(text):
    """Parse, inline and type-check program text.

    Programs with stream operations or buffer registers are checked as
    targets, with the arrays they never stream kept as arrays.
    """
    p = inline(parse(text))
    if has_stream_ops(p.main) or Ty.BUF in p.decls.values():
        streamed = {s.a for s in walk(p.main) if isinstance(s, (ReadStream, WriteStream))}
        typecheck(p, target=True, kept=set(p.arrays()) - streamed)
    else:
        typecheck(p)
    return p


__all__ = [
    "flip", "InlineError", "inline", "rename_expr", "rename_stmt", "ParseError",
    "parse", "parse_stmt", "fmt_decls", "fmt_expr", "fmt_program", "fmt_stmt",
    "TypeCheckError", "declared_env", "typecheck", "load",
]
