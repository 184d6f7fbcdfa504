"""Seeded single-node mutations of derivation documents, for exercising
the checker."""

from __future__ import annotations

import copy
import random
import re

from ..assertions.text import parse_assertion, same
from .derivation import RULES

KINDS = ("coefficient", "rule", "midpoint")

_RANGE = re.compile(r"\[[^\[\]]*;[^\[\]]*\]")
_NUM = re.compile(r"(?<!\w)\d+")


def nodes(doc):
    """(path, node) pairs in pre-order."""
    out = []

    def go(n, path):
        out.append((path, n))
        for i, m in enumerate(n.get("premises", [])):
            go(m, f"{path}[{i}]")

    if doc.get("root") is not None:
        go(doc["root"], "root")
    return out


def _perturb_range(text, rng):
    """Shift one integer literal inside a [low, high; step] range by +-1."""
    spots = []
    for m in _RANGE.finditer(text):
        for k in _NUM.finditer(m.group(0)):
            spots.append((m.start() + k.start(), m.start() + k.end(), k.group(0)))
    if not spots:
        return None
    a, b, lit = rng.choice(spots)
    v = int(lit)
    v = v + 1 if v == 0 else v + rng.choice((-1, 1))
    return text[:a] + str(v) + text[b:]


def coefficient(doc, rng):
    cands = []
    for path, n in nodes(doc):
        for key in ("pre", "post"):
            if _RANGE.search(n[key]):
                cands.append((path, n, key))
        if "invariant" in n.get("side", {}):
            cands.append((path, n, "invariant"))
    if not cands:
        return None
    path, n, key = rng.choice(cands)
    if key == "invariant":
        new = _perturb_range(n["side"]["invariant"], rng)
        if new is None:
            return None
        n["side"]["invariant"] = new
    else:
        new = _perturb_range(n[key], rng)
        if new is None:
            return None
        n[key] = new
    return path


def rule(doc, rng):
    path, n = rng.choice(nodes(doc))
    n["rule"] = rng.choice([r for r in RULES if r != n["rule"]])
    return path


def midpoint(doc, rng):
    seqs = [(p, n) for p, n in nodes(doc) if n["rule"] in ("Tr-Seq", "Tr-InsertL", "Tr-InsertR")]
    if not seqs:
        return None
    path, n = rng.choice(seqs)
    first = n["premises"][0]
    old = first["post"]
    conj = old.split(" && ")
    if len(conj) > 1 and rng.random() < 0.5:
        conj.pop(rng.randrange(len(conj)))
        first["post"] = " && ".join(conj)
    else:
        first["post"] = old + " && 0 = 1"
    if same(parse_assertion(first["post"]), parse_assertion(old)):
        return None                     # dropped a duplicate conjunct
    return path + "[0]"


def mutants(doc, n=100, seed=0):
    """n single-node mutants as (kind, path, document), cycling the kinds."""
    rng = random.Random(seed)
    out = []
    tries = 0
    while len(out) < n and tries < 20 * n:
        tries += 1
        kind = KINDS[len(out) % len(KINDS)]
        d = copy.deepcopy(doc)
        path = {"coefficient": coefficient, "rule": rule, "midpoint": midpoint}[kind](d, rng)
        if path is not None and d != doc:
            out.append((kind, path, d))
    return out
