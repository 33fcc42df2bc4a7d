"""Pretty-printer for SCL syntax trees (inverse of the parser up to layout)."""

from . import ast
from ..props.ltl import to_text as ltl_text

INDENT = "  "


def print_design(design):
    out = []
    for mod in design.modules:
        out.extend(_module(mod))
        out.append("")
    for inst in design.instances:
        out.append(f"instance {inst.name}: {inst.module};")
    for b in design.binds:
        out.append(f"bind {b.src_inst}.{b.src_port} -> {b.dst_inst}.{b.dst_port};")
    for prop in design.properties:
        if prop.kind == "ltl":
            out.append(f"ltl {prop.name} {{ {ltl_text(prop.body)} }}")
        else:
            out.append(f"invariant {prop.name} {{ {expr_text(prop.body)} }}")
    return "\n".join(out).rstrip("\n") + "\n"


def _module(mod):
    lines = [f"module {mod.name} {{"]
    for p in mod.ports:
        lines.append(f"{INDENT}{p.direction} {p.name}: {p.type};")
    for s in mod.signals:
        lines.append(f"{INDENT}signal {s.name}: {s.type} = {_literal(s.init)};")
    for v in mod.vars:
        lines.append(f"{INDENT}var {v.name}: {v.type} = {_literal(v.init)};")
    for e in mod.events:
        lines.append(f"{INDENT}event {e.name};")
    for proc in mod.processes:
        lines.append(f"{INDENT}process {proc.name} {{")
        lines.extend(_stmts(proc.body, 2))
        lines.append(f"{INDENT}}}")
    lines.append("}")
    return lines


def _literal(node):
    if isinstance(node, ast.Name):
        return node.ident
    if node.value is True:
        return "true"
    if node.value is False:
        return "false"
    return str(node.value)


def _stmts(body, depth):
    pad = INDENT * depth
    lines = []
    for s in body:
        if isinstance(s, ast.Assign):
            lines.append(f"{pad}{s.target} = {expr_text(s.expr)};")
        elif isinstance(s, ast.NbAssign):
            lines.append(f"{pad}{s.target} <= {expr_text(s.expr)};")
        elif isinstance(s, ast.If):
            lines.append(f"{pad}if {expr_text(s.cond)} {{")
            lines.extend(_stmts(s.then, depth + 1))
            if s.orelse is not None:
                lines.append(f"{pad}}} else {{")
                lines.extend(_stmts(s.orelse, depth + 1))
            lines.append(f"{pad}}}")
        elif isinstance(s, ast.While):
            lines.append(f"{pad}while {expr_text(s.cond)} {{")
            lines.extend(_stmts(s.body, depth + 1))
            lines.append(f"{pad}}}")
        elif isinstance(s, ast.Wait):
            lines.append(f"{pad}wait({s.kind} {s.arg});")
        elif isinstance(s, ast.Notify):
            if s.mode is None:
                lines.append(f"{pad}notify({s.event});")
            elif s.mode == "delta":
                lines.append(f"{pad}notify({s.event}, delta);")
            else:
                lines.append(f"{pad}notify({s.event}, time {s.amount});")
        elif isinstance(s, ast.Assert):
            lines.append(f"{pad}assert({expr_text(s.expr)});")
        elif isinstance(s, ast.Skip):
            lines.append(f"{pad}skip;")
        else:
            raise TypeError(f"unknown statement {s!r}")
    return lines


def expr_text(e):
    if isinstance(e, ast.Lit):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value) if e.value >= 0 else f"({e.value})"
    if isinstance(e, ast.Name):
        return e.dotted
    if isinstance(e, ast.Unary):
        return f"{e.op}{expr_text(e.operand)}"
    if isinstance(e, ast.Binary):
        return f"({expr_text(e.left)} {e.op} {expr_text(e.right)})"
    raise TypeError(f"unknown expression {e!r}")
