"""Tiny s-expression grammar for generator configs.

Forms::

    (integers) (powersplusindex) (reciprocals)
    (list 0 1 3)            (list (0 0) (1 2))
    (ap START STEP)         (cantor RATIO DEPTH)
    (union G ...)           (product G ...)        (power G K)
    (scale G C ...)         (translate G O ...)
    (linear G C ... [:expansion E] [:slack S])
    (diff GA GB [:expansion E] [:slack S])

Numbers are float literals or ``(sqrt X)``.  ``gen.to_sexpr()`` writes
floats with ``repr`` so parse(to_sexpr(g)) == g.
"""
from __future__ import annotations

import math
import re

from . import setgen as sg
from .errors import ConfigError

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokenize(text: str) -> list[str]:
    tokens, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ConfigError(f"cannot tokenize {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _read(tokens: list[str], i: int):
    if i >= len(tokens):
        raise ConfigError("unexpected end of expression")
    tok = tokens[i]
    if tok == "(":
        out, i = [], i + 1
        while i < len(tokens) and tokens[i] != ")":
            item, i = _read(tokens, i)
            out.append(item)
        if i >= len(tokens):
            raise ConfigError("missing ')'")
        return out, i + 1
    if tok == ")":
        raise ConfigError("unexpected ')'")
    return tok, i + 1


def read(text: str):
    tokens = _tokenize(text)
    tree, i = _read(tokens, 0)
    if i != len(tokens):
        raise ConfigError(f"trailing tokens after expression: {tokens[i:]}")
    return tree


def _number(node) -> float:
    if isinstance(node, list):
        if len(node) == 2 and node[0] == "sqrt":
            return math.sqrt(_number(node[1]))
        raise ConfigError(f"expected a number, got {node}")
    try:
        return float(node)
    except ValueError:
        raise ConfigError(f"expected a number, got {node!r}") from None


def _split_kwargs(args):
    pos, kw = [], {}
    it = iter(args)
    for a in it:
        if isinstance(a, str) and a.startswith(":"):
            try:
                kw[a[1:]] = _number(next(it))
            except StopIteration:
                raise ConfigError(f"keyword {a} needs a value") from None
        else:
            pos.append(a)
    return pos, kw


def _build(node) -> sg.SetGenerator:
    if not isinstance(node, list) or not node:
        raise ConfigError(f"expected a generator form, got {node!r}")
    head, args = node[0], node[1:]
    if not isinstance(head, str):
        raise ConfigError(f"bad form head {head!r}")
    head = head.lower()
    args, kw = _split_kwargs(args)
    extra = set(kw) - {"expansion", "slack"}
    if extra or (kw and head not in ("linear", "diff")):
        raise ConfigError(f"unexpected keywords {sorted(kw)} for {head}")
    if head == "integers" and not args:
        return sg.Integers()
    if head == "powersplusindex" and not args:
        return sg.PowersPlusIndex()
    if head == "reciprocals" and not args:
        return sg.Reciprocals()
    if head == "list":
        if args and isinstance(args[0], list) and args[0] and args[0][0] != "sqrt":
            return sg.ExplicitList(tuple(tuple(_number(c) for c in p) for p in args))
        return sg.ExplicitList(tuple(_number(a) for a in args))
    if head == "ap" and len(args) == 2:
        return sg.ArithmeticProgression(_number(args[0]), _number(args[1]))
    if head == "cantor" and len(args) == 2:
        return sg.CantorLike(_number(args[0]), int(_number(args[1])))
    if head == "union" and args:
        return sg.Union(tuple(_build(a) for a in args))
    if head == "product" and args:
        return sg.Product(tuple(_build(a) for a in args))
    if head == "power" and len(args) == 2:
        return sg.Power(_build(args[0]), int(_number(args[1])))
    if head == "scale" and len(args) >= 2:
        return sg.Scale(_build(args[0]), tuple(_number(a) for a in args[1:]))
    if head == "translate" and len(args) >= 2:
        return sg.Translate(_build(args[0]), tuple(_number(a) for a in args[1:]))
    if head == "linear" and len(args) >= 2:
        return sg.LinearImage(_build(args[0]), tuple(_number(a) for a in args[1:]),
                              kw.get("expansion", 1.0), kw.get("slack", 0.0))
    if head == "diff" and len(args) == 2:
        return sg.Difference(_build(args[0]), _build(args[1]),
                             kw.get("expansion", 1.0), kw.get("slack", 0.0))
    raise ConfigError(f"unknown or malformed form ({head} ...) with {len(args)} args")


def parse_generator(text: str) -> sg.SetGenerator:
    return _build(read(text))
