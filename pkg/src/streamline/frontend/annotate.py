"""Loop invariant annotations supplied from a side file.

Each non-blank line reads `<loop-index>: <assertion>`, loops numbered in
pre-order from 0.  Lines starting with `#` are comments.
"""

from __future__ import annotations

from dataclasses import replace

from .ast import For, If, Kernel, Seq


class AnnotationError(ValueError):
    pass


def parse_annotations(text):
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, sep, body = line.partition(":")
        if not sep or not head.strip().isdigit() or not body.strip():
            raise AnnotationError(f"line {n}: expected '<loop-index>: <assertion>'")
        k = int(head)
        out[k] = f"{out[k]} && {body.strip()}" if k in out else body.strip()
    return out


def annotate(p, notes):
    """Program with notes (loop index -> assertion text) attached to its loops."""
    count = 0

    def go(s):
        nonlocal count
        if isinstance(s, Seq):
            return Seq(tuple(go(t) for t in s.items))
        if isinstance(s, If):
            return replace(s, then=go(s.then), orelse=go(s.orelse))
        if isinstance(s, Kernel):
            return Kernel(go(s.body))
        if isinstance(s, For):
            k = count
            count += 1
            annot = s.annot
            if k in notes:
                annot = f"{annot} && {notes[k]}" if annot else notes[k]
            return replace(s, body=go(s.body), annot=annot)
        return s

    main = go(p.main)
    extra = sorted(k for k in notes if k >= count)
    if extra:
        raise AnnotationError(f"no loop with index {extra[0]} (program has {count})")
    return p.with_main(main)
