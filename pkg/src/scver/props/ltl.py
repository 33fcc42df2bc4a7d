"""LTL formulas: syntax tree, parser, negation normal form."""

from dataclasses import dataclass, field
from typing import Optional

from ..errors import ParseError, ElaborationError
from ..lexer import Cursor, tokenize


def _pos():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Const:
    value: bool
    pos: object = _pos()


@dataclass(frozen=True)
class Atom:
    """``name`` alone (a boolean) or ``name op value``.

    Before resolution ``value`` is the source literal (bool, int or an enum
    label); after resolution against a design it is the integer code.
    """
    name: str
    op: Optional[str] = None
    value: object = None
    pos: object = _pos()

    def holds(self, obs):
        v = obs[self.name]
        if self.op is None:
            return bool(v)
        return _CMP[self.op](v, self.value)


@dataclass(frozen=True)
class Not:
    arg: object
    pos: object = _pos()


@dataclass(frozen=True)
class And:
    left: object
    right: object
    pos: object = _pos()


@dataclass(frozen=True)
class Or:
    left: object
    right: object
    pos: object = _pos()


@dataclass(frozen=True)
class Next:
    arg: object
    pos: object = _pos()


@dataclass(frozen=True)
class Finally:
    arg: object
    pos: object = _pos()


@dataclass(frozen=True)
class Globally:
    arg: object
    pos: object = _pos()


@dataclass(frozen=True)
class Until:
    left: object
    right: object
    pos: object = _pos()


@dataclass(frozen=True)
class Release:
    left: object
    right: object
    pos: object = _pos()


_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}
CMP_OPS = tuple(_CMP)

UNARY = (Not, Next, Finally, Globally)
BINARY = (And, Or, Until, Release)
TEMPORAL = (Next, Finally, Globally, Until, Release)


def children(f):
    if isinstance(f, UNARY):
        return (f.arg,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    return ()


def atoms(f):
    """Atoms of ``f`` in first-occurrence order."""
    seen = {}
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            seen.setdefault(g, None)
        stack.extend(reversed(children(g)))
    return list(seen)


def temporal_count(f):
    own = 1 if isinstance(f, TEMPORAL) else 0
    return own + sum(temporal_count(c) for c in children(f))


def implies(a, b):
    return Or(Not(a), b)


# parsing

def parse_ltl(text, resolver=None):
    """Parse an LTL formula.  ``resolver`` (optional) type-checks atoms."""
    cur = Cursor(tokenize(text))
    f = parse_ltl_tokens(cur)
    if cur.peek().kind != "eof":
        cur.fail({"end of formula"})
    if resolver is not None:
        f = resolve(f, resolver)
    return f


def parse_ltl_tokens(cur):
    return _implication(cur)


def _implication(cur):
    left = _disjunction(cur)
    if cur.at("->"):
        tok = cur.next()
        right = _implication(cur)
        return Or(Not(left, pos=tok.pos), right, pos=tok.pos)
    return left


def _disjunction(cur):
    left = _conjunction(cur)
    while cur.at("||"):
        tok = cur.next()
        left = Or(left, _conjunction(cur), pos=tok.pos)
    return left


def _conjunction(cur):
    left = _until(cur)
    while cur.at("&&"):
        tok = cur.next()
        left = And(left, _until(cur), pos=tok.pos)
    return left


def _is_op(cur, letter):
    tok = cur.peek()
    return tok.kind == "id" and tok.text == letter and not cur.at(".", 1)


def _until(cur):
    left = _unary(cur)
    for letter, node in (("U", Until), ("R", Release)):
        if _is_op(cur, letter):
            tok = cur.next()
            return node(left, _until(cur), pos=tok.pos)
    return left


def _unary(cur):
    tok = cur.peek()
    if cur.at("!"):
        cur.next()
        return Not(_unary(cur), pos=tok.pos)
    for letter, node in (("X", Next), ("F", Finally), ("G", Globally)):
        if _is_op(cur, letter):
            cur.next()
            return node(_unary(cur), pos=tok.pos)
    return _primary(cur)


def _primary(cur):
    tok = cur.peek()
    if cur.accept("("):
        f = _implication(cur)
        cur.expect(")")
        return f
    if cur.accept("true"):
        return Const(True, pos=tok.pos)
    if cur.accept("false"):
        return Const(False, pos=tok.pos)
    if tok.kind != "id":
        cur.fail({"'('", "'true'", "'false'", "atom", "'!'", "'X'", "'F'", "'G'"})
    name = cur.next().text
    if cur.accept("."):
        name += "." + cur.expect_id().text
    for op in CMP_OPS:
        if cur.at(op):
            cur.next()
            return Atom(name, op, _literal(cur), pos=tok.pos)
    return Atom(name, pos=tok.pos)


def _literal(cur):
    if cur.accept("true"):
        return True
    if cur.accept("false"):
        return False
    tok = cur.peek()
    if tok.kind == "id":
        return cur.next().text
    if tok.kind == "int" or cur.at("-"):
        return cur.expect_int()
    cur.fail({"literal"})


def resolve(f, resolver):
    """Rebuild ``f`` with atoms passed through ``resolver(atom) -> atom``."""
    if isinstance(f, Atom):
        return resolver(f)
    if isinstance(f, UNARY):
        return type(f)(resolve(f.arg, resolver), pos=f.pos)
    if isinstance(f, BINARY):
        return type(f)(resolve(f.left, resolver), resolve(f.right, resolver), pos=f.pos)
    return f


def typed_atom_resolver(lookup):
    """Resolver that checks atoms against ``lookup(name) -> type or None``."""
    def resolver(atom):
        typ = lookup(atom.name)
        if typ is None:
            raise ElaborationError(f"unknown name {atom.name!r} in formula", atom.pos)
        if atom.op is None:
            if typ.kind != "bool":
                raise ElaborationError(f"{atom.name!r} is not boolean", atom.pos)
            return atom
        if atom.op not in ("==", "!=") and typ.kind == "bool":
            raise ElaborationError(f"ordering comparison on boolean {atom.name!r}", atom.pos)
        try:
            code = typ.encode(atom.value)
        except ValueError as exc:
            raise ElaborationError(str(exc), atom.pos) from None
        if not typ.contains(code):
            raise ElaborationError(
                f"literal {atom.value!r} outside type range {typ} of {atom.name!r}", atom.pos)
        return Atom(atom.name, atom.op, code, pos=atom.pos)
    return resolver


# normal form

_NEG_CMP = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


def nnf(f, negate=False):
    """Negation normal form over ! && || X U R (F and G expanded)."""
    if isinstance(f, Const):
        return Const(f.value != negate)
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, And):
        node = Or if negate else And
        return node(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Or):
        node = And if negate else Or
        return node(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Next):
        return Next(nnf(f.arg, negate))
    if isinstance(f, Finally):
        return nnf(Until(Const(True), f.arg), negate)
    if isinstance(f, Globally):
        return nnf(Release(Const(False), f.arg), negate)
    if isinstance(f, Until):
        node = Release if negate else Until
        return node(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Release):
        node = Until if negate else Release
        return node(nnf(f.left, negate), nnf(f.right, negate))
    raise TypeError(f"not a formula: {f!r}")


# printing

def _literal_text(value):
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def to_text(f, render_value=None):
    """Fully parenthesised text that parses back to ``f``."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        if f.op is None:
            return f.name
        value = render_value(f) if render_value else f.value
        return f"{f.name} {f.op} {_literal_text(value)}"
    if isinstance(f, Not):
        return f"!{_wrap(f.arg, render_value)}"
    if isinstance(f, Next):
        return f"X {_wrap(f.arg, render_value)}"
    if isinstance(f, Finally):
        return f"F {_wrap(f.arg, render_value)}"
    if isinstance(f, Globally):
        return f"G {_wrap(f.arg, render_value)}"
    sym = {And: "&&", Or: "||", Until: "U", Release: "R"}[type(f)]
    return f"{_wrap(f.left, render_value)} {sym} {_wrap(f.right, render_value)}"


def _wrap(f, render_value):
    text = to_text(f, render_value)
    if isinstance(f, Const) or (isinstance(f, Atom) and f.op is None):
        return text
    return f"({text})"
