"""Tokenizer shared by SCL and the embedded LTL syntax."""

import re
from dataclasses import dataclass

from .errors import LexError

KEYWORDS = frozenset("""
module in out signal var event process instance bind ltl invariant
bool int enum if else while wait time change notify delta assert skip
true false
""".split())

SYMBOLS = ("..", "->", "<=", ">=", "==", "!=", "&&", "||",
           "{", "}", "(", ")", "[", "]", ";", ":", ",", ".", "=",
           "<", ">", "!", "+", "-", "*")

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<id>[A-Za-z][A-Za-z0-9_]*)
  | (?P<sym>""" + "|".join(re.escape(s) for s in SYMBOLS) + r""")
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "id" | "int" | "kw" | "sym" | "eof"
    text: str
    line: int
    col: int

    @property
    def pos(self):
        return (self.line, self.col)

    def describe(self):
        if self.kind == "eof":
            return "end of input"
        return repr(self.text)


def tokenize(source):
    tokens = []
    line, line_start, i = 1, 0, 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        col = i - line_start + 1
        if m is None:
            raise LexError(f"illegal character {source[i]!r}", (line, col))
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "int":
            tokens.append(Token("int", text, line, col))
        elif kind == "id":
            tokens.append(Token("kw" if text in KEYWORDS else "id", text, line, col))
        elif kind == "sym":
            tokens.append(Token("sym", text, line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


class Cursor:
    """Token stream with one-token lookahead and expected-set diagnostics."""

    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self, k=0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text, k=0):
        tok = self.peek(k)
        return tok.kind in ("sym", "kw") and tok.text == text

    def accept(self, text):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text):
        if self.at(text):
            return self.next()
        self.fail({repr(text)})

    def expect_id(self):
        tok = self.peek()
        if tok.kind == "id":
            return self.next()
        self.fail({"identifier"})

    def expect_int(self):
        neg = self.accept("-")
        tok = self.peek()
        if tok.kind != "int":
            self.fail({"integer"})
        self.next()
        value = int(tok.text)
        return -value if neg else value

    def fail(self, expected):
        from .errors import ParseError
        tok = self.peek()
        raise ParseError(f"unexpected {tok.describe()}", tok.pos, expected)
