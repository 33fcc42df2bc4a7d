"""SCL front end: lexing, parsing, pretty-printing and elaboration."""

from .parser import parse, parse_expr
from .printer import print_design
from .elaborate import elaborate, ElaboratedDesign


def load(source, **caps):
    """Parse and elaborate SCL source text in one step."""
    return elaborate(parse(source), **caps)
