"""Monotone AND/OR access policies and their LSSS matrices.

Grammar (keywords case-insensitive, AND binds tighter than OR, both
left-associative)::

    expr := term ("OR" term)*
    term := atom ("AND" atom)*
    atom := NAME | "(" expr ")"
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from . import _kernels as kernels
from .errors import ParseError, Unsatisfiable
from .group import M61

NAME_RE = re.compile(r"[A-Za-z0-9_]+\Z")
_TOKEN_RE = re.compile(r"\s*(?:(\()|(\))|([A-Za-z0-9_]+))")
_KEYWORDS = {"and", "or"}


@dataclass(frozen=True)
class Attr:
    name: str


@dataclass(frozen=True)
class And:
    left: "PolicyAst"
    right: "PolicyAst"


@dataclass(frozen=True)
class Or:
    left: "PolicyAst"
    right: "PolicyAst"


PolicyAst = Union[Attr, And, Or]


def _tokenize(text):
    pos = 0
    out = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("(", None, start))
        elif m.group(2):
            out.append((")", None, start))
        else:
            word = m.group(3)
            kind = word.upper() if word.lower() in _KEYWORDS else "NAME"
            out.append((kind, word, start))
        pos = m.end()
    out.append(("EOF", None, len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind):
        tok = self.toks[self.i]
        if tok[0] != kind:
            what = "end of input" if tok[0] == "EOF" else repr(tok[1] or tok[0])
            raise ParseError(f"expected {kind}, found {what}", tok[2])
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[0] == "OR":
            self.i += 1
            node = Or(node, self.term())
        return node

    def term(self):
        node = self.atom()
        while self.peek()[0] == "AND":
            self.i += 1
            node = And(node, self.atom())
        return node

    def atom(self):
        kind, word, off = self.peek()
        if kind == "NAME":
            self.i += 1
            return Attr(word)
        if kind == "(":
            self.i += 1
            node = self.expr()
            self.take(")")
            return node
        what = "end of input" if kind == "EOF" else repr(word or kind)
        raise ParseError(f"expected attribute or '(', found {what}", off)


def parse_policy(text: str) -> PolicyAst:
    if not text or not text.strip():
        raise ParseError("empty policy", 0)
    parser = _Parser(text)
    ast = parser.expr()
    parser.take("EOF")
    return ast


def to_text(ast: PolicyAst) -> str:
    """Fully parenthesised rendering; ``parse_policy(to_text(a)) == a``."""
    if isinstance(ast, Attr):
        return ast.name
    op = "AND" if isinstance(ast, And) else "OR"
    return f"({to_text(ast.left)} {op} {to_text(ast.right)})"


def evaluate(ast: PolicyAst, attrs) -> bool:
    if isinstance(ast, Attr):
        return ast.name in attrs
    if isinstance(ast, And):
        return evaluate(ast.left, attrs) and evaluate(ast.right, attrs)
    return evaluate(ast.left, attrs) or evaluate(ast.right, attrs)


def leaves(ast: PolicyAst) -> list[str]:
    if isinstance(ast, Attr):
        return [ast.name]
    return leaves(ast.left) + leaves(ast.right)


@dataclass(frozen=True)
class LsssMatrix:
    """Share-generating matrix; ``rows[i]`` belongs to attribute ``rho[i]``.

    Entries are residues mod ``p`` (so -1 is stored as p - 1).
    """

    rows: tuple[tuple[int, ...], ...]
    rho: tuple[str, ...]
    n: int
    p: int = M61

    def __post_init__(self):
        if len(self.rows) != len(self.rho):
            raise ValueError("rho must label every row")
        for row in self.rows:
            if len(row) != self.n:
                raise ValueError("ragged LSSS matrix")

    def __len__(self):
        return len(self.rows)


def to_lsss(ast: PolicyAst, p: int = M61) -> LsssMatrix:
    labelled = []
    counter = 1

    def walk(node, vec):
        nonlocal counter
        if isinstance(node, Attr):
            labelled.append((node.name, vec))
        elif isinstance(node, Or):
            walk(node.left, vec)
            walk(node.right, vec)
        else:
            padded = vec + [0] * (counter - len(vec))
            left = padded + [1]
            right = [0] * counter + [p - 1]
            counter += 1
            walk(node.left, left)
            walk(node.right, right)

    walk(ast, [1])
    n = counter
    rows = tuple(tuple(v + [0] * (n - len(v))) for _, v in labelled)
    return LsssMatrix(rows=rows, rho=tuple(name for name, _ in labelled), n=n, p=p)


@lru_cache(maxsize=1024)
def _compile_cached(text: str, p: int):
    ast = parse_policy(text)
    return ast, to_lsss(ast, p)


def compile_policy(text: str, p: int = M61) -> LsssMatrix:
    return _compile_cached(text, p)[1]


def parse_and_compile(text: str, p: int = M61):
    """(ast, matrix) for a policy string; memoised since both are immutable."""
    return _compile_cached(text, p)


def _usable(m: LsssMatrix, attrs):
    return [i for i, name in enumerate(m.rho) if name in attrs]


def satisfies(m: LsssMatrix, attrs) -> bool:
    idx = _usable(m, attrs)
    if not idx:
        return False
    return kernels.solve_span([m.rows[i] for i in idx], m.p) is not None


def reconstruct_coeffs(m: LsssMatrix, attrs) -> dict[int, int]:
    """Row index -> coefficient w_i with sum(w_i * row_i) == (1, 0, ..., 0).

    Only rows that take part in the combination (non-zero coefficient) are
    returned.
    """
    idx = _usable(m, attrs)
    sol = kernels.solve_span([m.rows[i] for i in idx], m.p) if idx else None
    if sol is None:
        raise Unsatisfiable("attribute set does not satisfy the access structure")
    return {i: w for i, w in zip(idx, sol) if w}


def shares(m: LsssMatrix, vec) -> list[int]:
    """lambda_i = row_i . vec mod p for every row."""
    return kernels.matvec(m.rows, vec, m.p)
