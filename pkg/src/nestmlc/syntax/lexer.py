"""Tokenizer for ``.nestml`` sources.

Physical newlines separate statements, except inside brackets or after a
token that cannot end a statement (a binary operator, ``,``, ``<-``, ...),
which lets long equations wrap the way the model figures write them.
``#`` comments are attached to the next real token as its ``doc``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..diagnostics import NestmlSyntaxError, SourceSpan

KEYWORDS = frozenset("""
neuron component import use as state parameter internal input output dynamics
function alias end if elif else and or not return ODE spike current inhibitory
excitatory timestep minDelay true false
""".split())

IDENT = "IDENT"
KEYWORD = "KEYWORD"
NUMBER = "NUMBER"
STRING = "STRING"
OP = "OP"
NEWLINE = "NEWLINE"
EOF = "EOF"

# longest first
OPERATORS = ("<-", "**", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
             "<", ">", "=", "+", "-", "*", "/", "(", ")", "[", "]", ",", ":", ".", ";")

_CONTINUES = frozenset({
    "+", "-", "*", "/", "**", "==", "!=", "<", "<=", ">", ">=", "=", "+=", "-=",
    "*=", "/=", ",", "<-", "and", "or", "not", "inhibitory", "excitatory",
})

_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


_LEADING_WS = re.compile(r"[ \t\r]*")


def _continued_below(source, i):
    """A line that opens with a binary operator continues the previous one."""
    j = _LEADING_WS.match(source, i).end()
    return j < len(source) and source[j] in "+-*/=<>!"


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    span: SourceSpan
    doc: Optional[str] = None

    def is_op(self, *ops) -> bool:
        return self.kind == OP and self.value in ops

    def is_kw(self, *words) -> bool:
        return self.kind == KEYWORD and self.value in words

    def __repr__(self):
        return f"{self.kind}({self.value!r})"


def tokenize(source: str, path: str = "<string>", allow_generated: bool = False) -> list:
    """Split ``source`` into tokens.

    Identifiers containing ``__`` are reserved for names generated by the
    model transformation and rejected unless ``allow_generated`` is set.
    """
    tokens = []
    pending_doc = []
    depth = 0
    line, col = 1, 1
    i, n = 0, len(source)

    def span():
        return SourceSpan(path, line, col)

    def emit(kind, value, sp):
        doc = "\n".join(pending_doc) if pending_doc else None
        pending_doc.clear()
        tokens.append(Token(kind, value, sp, doc))

    while i < n:
        ch = source[i]
        if ch == "\n":
            prev = tokens[-1] if tokens else None
            if (depth == 0 and prev is not None and prev.kind != NEWLINE
                    and not (prev.kind in (OP, KEYWORD) and prev.value in _CONTINUES)
                    and not _continued_below(source, i + 1)):
                tokens.append(Token(NEWLINE, "\n", span()))
            i += 1
            line, col = line + 1, 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            end = source.find("\n", i)
            end = n if end < 0 else end
            pending_doc.append(source[i + 1:end].strip())
            col += end - i
            i = end
            continue
        if ch == '"':
            sp = span()
            j = i + 1
            while j < n and source[j] not in '"\n':
                j += 2 if source[j] == "\\" else 1
            if j >= n or source[j] != '"':
                raise NestmlSyntaxError("unterminated string literal", sp, "E0103")
            emit(STRING, source[i + 1:j], sp)
            col += j + 1 - i
            i = j + 1
            continue
        m = _NUMBER.match(source, i)
        if m:
            emit(NUMBER, m.group(0), span())
            col += m.end() - i
            i = m.end()
            continue
        m = _IDENT.match(source, i)
        if m:
            word = m.group(0)
            sp = span()
            if "__" in word and not allow_generated:
                raise NestmlSyntaxError(
                    f"identifier '{word}' uses the reserved '__' namespace", sp, "E0104")
            emit(KEYWORD if word in KEYWORDS else IDENT, word, sp)
            col += m.end() - i
            i = m.end()
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                if op in "([":
                    depth += 1
                elif op in ")]":
                    depth = max(0, depth - 1)
                if op == ";":
                    if tokens and tokens[-1].kind != NEWLINE:
                        tokens.append(Token(NEWLINE, ";", span()))
                else:
                    emit(OP, op, span())
                i += len(op)
                col += len(op)
                break
        else:
            raise NestmlSyntaxError(f"illegal character {ch!r}", span(), "E0102")
    return tokens
