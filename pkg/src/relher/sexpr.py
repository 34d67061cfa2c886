"""Small S-expression reader used by the planning file format.

Produces nested lists of :class:`Symbol` tokens. Symbols keep their source
position so the parser can report errors with line and column numbers.
Comments run from ``;`` to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

_DELIMS = frozenset("();")


@dataclass(frozen=True)
class Symbol:
    text: str
    line: int
    col: int

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]


def tokenize(text):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield Symbol(ch, line, col)
            col += 1
            i += 1
        else:
            start, start_col = i, col
            while i < n and not text[i].isspace() and text[i] not in _DELIMS:
                i += 1
                col += 1
            yield Symbol(text[start:i], line, start_col)


def read(text):
    """Read all top-level S-expressions in ``text``."""
    stack = []
    top = []
    for tok in tokenize(text):
        if tok.text == "(":
            stack.append((tok, []))
        elif tok.text == ")":
            if not stack:
                raise ParseError("unbalanced ')'", tok.line, tok.col)
            opener, items = stack.pop()
            node = SList(tuple(items), opener.line, opener.col)
            if stack:
                stack[-1][1].append(node)
            else:
                top.append(node)
        else:
            if not stack:
                raise ParseError(f"unexpected atom {tok.text!r} at top level",
                                 tok.line, tok.col)
            stack[-1][1].append(tok)
    if stack:
        opener, _ = stack[-1]
        raise ParseError("unclosed '('", opener.line, opener.col)
    return top


def read_one(text):
    nodes = read(text)
    if len(nodes) != 1:
        raise ParseError(f"expected exactly one expression, found {len(nodes)}")
    return nodes[0]
