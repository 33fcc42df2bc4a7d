"""Resolved, typed expressions and their compilation to closures.

A compiled expression is a function ``f(vars, cur, inputs) -> int`` over the
three value vectors of a kernel state.
"""

from dataclasses import dataclass

from .types import BOOL, IntType

ANY_INT = IntType(-(1 << 31), (1 << 31) - 1)


@dataclass(frozen=True)
class RConst:
    code: int
    type: object


@dataclass(frozen=True)
class RRef:
    space: str  # "sig" | "var" | "in"
    index: int
    name: str
    type: object


@dataclass(frozen=True)
class ROp:
    op: str
    args: tuple
    type: object


def refs(e):
    if isinstance(e, RRef):
        yield e
    elif isinstance(e, ROp):
        for a in e.args:
            yield from refs(a)


def is_constant(e):
    return next(refs(e), None) is None


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
}
_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def compile_expr(e):
    if isinstance(e, RConst):
        code = e.code
        return lambda v, c, i: code
    if isinstance(e, RRef):
        idx = e.index
        if e.space == "sig":
            return lambda v, c, i: c[idx]
        if e.space == "var":
            return lambda v, c, i: v[idx]
        return lambda v, c, i: i[idx]
    op = e.op
    if len(e.args) == 1:
        f = compile_expr(e.args[0])
        if op == "!":
            return lambda v, c, i: 0 if f(v, c, i) else 1
        return lambda v, c, i: -f(v, c, i)
    fa, fb = (compile_expr(a) for a in e.args)
    if op == "&&":
        return lambda v, c, i: 1 if fa(v, c, i) and fb(v, c, i) else 0
    if op == "||":
        return lambda v, c, i: 1 if fa(v, c, i) or fb(v, c, i) else 0
    if op in _ARITH:
        g = _ARITH[op]
        return lambda v, c, i: g(fa(v, c, i), fb(v, c, i))
    g = _CMP[op]
    return lambda v, c, i: 1 if g(fa(v, c, i), fb(v, c, i)) else 0


def evaluate_constant(e):
    return compile_expr(e)((), (), ())


def render(e, name=None, const=None):
    """Fully parenthesised text.  ``name``/``const`` customise leaves."""
    if isinstance(e, RConst):
        if const is not None:
            return const(e)
        return str(e.type.render(e.code)).lower() if e.type is BOOL else str(e.type.render(e.code))
    if isinstance(e, RRef):
        return name(e) if name is not None else e.name
    if len(e.args) == 1:
        return f"{e.op}{render(e.args[0], name, const)}"
    left, right = (render(a, name, const) for a in e.args)
    return f"({left} {e.op} {right})"


def result_type(op):
    if op in _ARITH or op == "neg":
        return ANY_INT
    return BOOL
