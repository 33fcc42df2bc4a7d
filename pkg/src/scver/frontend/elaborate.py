"""Elaboration: instance expansion, bind resolution, type checking and
lowering of process bodies to numbered control-flow graphs."""

import json
from dataclasses import dataclass, field
from typing import Optional

from . import ast
from .exprs import ANY_INT, RConst, ROp, RRef, compile_expr, evaluate_constant, is_constant, render
from .types import BOOL, DEFAULT_WIDTH_CAP, EnumType, IntType
from ..errors import ElaborationError
from ..props import ltl

DEFAULT_VALUE_CAP = 1 << 48
END = -1  # successor of the last statement: the process terminates


@dataclass
class Signal:
    name: str
    type: object
    init: int
    instance: str
    member: str
    kind: str  # "signal" | "port"
    writers: list = field(default_factory=list)


@dataclass
class Var:
    name: str
    type: object
    init: int
    instance: str
    member: str


@dataclass
class Input:
    name: str
    type: object
    instance: str
    member: str


@dataclass
class Event:
    name: str
    instance: str
    member: str


@dataclass
class Node:
    """One control location.

    kind: entry | assign | nb | cond | wait_time | wait_change | wait_event |
    notify | assert | skip.  ``next`` is the fall-through successor, ``alt``
    the false branch of a condition.
    """
    loc: int
    kind: str
    next: int = END
    alt: int = END
    target: Optional[int] = None
    expr: object = None
    fn: object = None
    amount: Optional[int] = None
    space: Optional[str] = None
    mode: Optional[str] = None
    pos: object = None

    def live_successors(self):
        if self.kind != "cond":
            return [self.next]
        if is_constant(self.expr):
            return [self.next if evaluate_constant(self.expr) else self.alt]
        return [self.next, self.alt]


@dataclass
class Process:
    name: str
    instance: str
    member: str
    nodes: list
    reachable: frozenset


@dataclass
class Net:
    signal: int
    writer: str
    readers: list


@dataclass
class Property:
    name: str
    kind: str  # "ltl" | "invariant"
    body: object  # resolved LTL formula or RExpr
    fn: object = None
    source: object = None


@dataclass
class Port:
    name: str
    direction: str
    type: object
    space: str  # "sig" | "in"
    index: int


@dataclass
class ElaboratedDesign:
    ast: object
    instances: list
    modules: dict
    signals: list
    vars: list
    inputs: list
    events: list
    processes: list
    nets: list
    ports: dict  # instance -> list of Port
    properties: dict
    warnings: list
    value_space: int
    stubs: tuple = ()

    @property
    def open_inputs(self):
        return [i.name for i in self.inputs]

    def observables(self):
        """(name, type) pairs of the observation vector: signals, then inputs."""
        return [(s.name, s.type) for s in self.signals] + [(i.name, i.type) for i in self.inputs]

    def process_index(self, name):
        for k, p in enumerate(self.processes):
            if p.name == name:
                return k
        raise KeyError(name)

    def signal_index(self, name):
        for k, s in enumerate(self.signals):
            if s.name == name:
                return k
        raise KeyError(name)

    def canonical(self):
        """Deterministic JSON serialisation of the elaborated design."""
        def node_json(n):
            d = {"loc": n.loc, "kind": n.kind, "next": n.next}
            if n.kind == "cond":
                d["alt"] = n.alt
            for key in ("target", "amount", "space", "mode"):
                val = getattr(n, key)
                if val is not None:
                    d[key] = val
            if n.expr is not None:
                d["expr"] = render(n.expr)
            return d

        data = {
            "instances": [[i, m] for i, m in self.instances],
            "signals": [[s.name, str(s.type), s.init, s.kind, s.writers] for s in self.signals],
            "vars": [[v.name, str(v.type), v.init] for v in self.vars],
            "inputs": [[i.name, str(i.type)] for i in self.inputs],
            "events": [e.name for e in self.events],
            "nets": [[self.signals[n.signal].name, n.writer, n.readers] for n in self.nets],
            "processes": [
                {"name": p.name, "nodes": [node_json(n) for n in p.nodes],
                 "reachable": sorted(p.reachable)}
                for p in self.processes
            ],
            "properties": [
                [name, prop.kind,
                 ltl.to_text(prop.body) if prop.kind == "ltl" else render(prop.body)]
                for name, prop in self.properties.items()
            ],
            "value_space": self.value_space,
            "stubs": [s.instance for s in self.stubs],
        }
        return json.dumps(data, sort_keys=True, separators=(",", ":"))


class _Scope:
    """Name lookup for expressions; returns RRef leaves."""

    def __init__(self, table, qualified):
        self.table = table  # name -> RRef
        self.qualified = qualified


def _check_type(typ, pos, width_cap):
    if isinstance(typ, IntType):
        if typ.lo > typ.hi:
            raise ElaborationError(f"empty range {typ}", pos)
        if typ.hi - typ.lo + 1 > width_cap:
            raise ElaborationError(f"range {typ} wider than cap {width_cap}", pos)
    if isinstance(typ, EnumType) and len(set(typ.labels)) != len(typ.labels):
        raise ElaborationError(f"duplicate label in {typ}", pos)


def _literal_code(typ, node):
    if isinstance(node, ast.Name):
        value = node.ident
    else:
        value = node.value
    try:
        code = typ.encode(value)
    except ValueError as exc:
        raise ElaborationError(str(exc), node.pos) from None
    if not typ.contains(code):
        raise ElaborationError(f"initial value {value!r} outside {typ}", node.pos)
    return code


def _same_type(a, b):
    if a.kind != b.kind:
        return False
    if a.kind == "enum":
        return a == b
    return True


class _Typer:
    def __init__(self, scope):
        self.scope = scope

    def lookup(self, name):
        key = name.dotted
        if name.qual is not None and not self.scope.qualified:
            raise ElaborationError(f"qualified name {key!r} not allowed inside a module", name.pos)
        return self.scope.table.get(key)

    def expr(self, e, expect=None):
        """Type-check ``e``; ``expect`` resolves bare enum labels."""
        if isinstance(e, ast.Lit):
            if isinstance(e.value, bool):
                return RConst(int(e.value), BOOL)
            return RConst(e.value, ANY_INT)
        if isinstance(e, ast.Name):
            ref = self.lookup(e)
            if ref is not None:
                return ref
            if e.qual is None and isinstance(expect, EnumType) and e.ident in expect.labels:
                return RConst(expect.labels.index(e.ident), expect)
            raise ElaborationError(f"unknown name {e.dotted!r}", e.pos)
        if isinstance(e, ast.Unary):
            arg = self.expr(e.operand)
            if e.op == "!":
                self._want(arg, "bool", e)
                return ROp("!", (arg,), BOOL)
            self._want(arg, "int", e)
            return ROp("-", (arg,), ANY_INT)
        op = e.op
        if op in ("&&", "||"):
            left, right = self.expr(e.left), self.expr(e.right)
            self._want(left, "bool", e)
            self._want(right, "bool", e)
            return ROp(op, (left, right), BOOL)
        if op in ("+", "-", "*"):
            left, right = self.expr(e.left), self.expr(e.right)
            self._want(left, "int", e)
            self._want(right, "int", e)
            return ROp(op, (left, right), ANY_INT)
        left, right = self._pair(e.left, e.right)
        if not _same_type(left.type, right.type):
            raise ElaborationError(
                f"cannot compare {left.type} with {right.type}", e.pos)
        if op not in ("==", "!=") and left.type.kind == "bool":
            raise ElaborationError(f"ordering comparison on booleans", e.pos)
        return ROp(op, (left, right), BOOL)

    def _pair(self, a, b):
        # resolve one side first so that a bare enum label on the other can be typed
        if self._is_label(a) and not self._is_label(b):
            right = self.expr(b)
            return self.expr(a, right.type), right
        left = self.expr(a)
        return left, self.expr(b, left.type)

    def _is_label(self, e):
        return isinstance(e, ast.Name) and e.qual is None and e.ident not in self.scope.table

    def _want(self, r, kind, e):
        if r.type.kind != kind:
            raise ElaborationError(f"operator {e.op!r} needs {kind} operands, got {r.type}", e.pos)


def _assignable(target_type, value, pos):
    if target_type.kind == "int" and value.type.kind == "int":
        if isinstance(value, RConst) and not target_type.contains(value.code):
            raise ElaborationError(f"constant {value.code} outside {target_type}", pos)
        return
    if not _same_type(target_type, value.type):
        raise ElaborationError(f"cannot assign {value.type} to {target_type}", pos)


def _number(stmts, locs):
    for s in stmts:
        locs[id(s)] = len(locs) + 1
        if isinstance(s, ast.If):
            _number(s.then, locs)
            if s.orelse:
                _number(s.orelse, locs)
        elif isinstance(s, ast.While):
            _number(s.body, locs)


def elaborate(design_ast, width_cap=DEFAULT_WIDTH_CAP, value_cap=DEFAULT_VALUE_CAP):
    """Expand ``design_ast`` into an :class:`ElaboratedDesign`."""
    modules = {}
    for mod in design_ast.modules:
        if mod.name in modules:
            raise ElaborationError(f"duplicate module {mod.name!r}", mod.pos)
        seen = set()
        for m in mod.members():
            if m.name in seen:
                raise ElaborationError(f"duplicate member {m.name!r} in module {mod.name!r}", m.pos)
            seen.add(m.name)
            if hasattr(m, "type"):
                _check_type(m.type, m.pos, width_cap)
        modules[mod.name] = mod

    if not design_ast.instances:
        raise ElaborationError("design has no instances", (1, 1))
    instances = []
    for inst in design_ast.instances:
        if inst.module not in modules:
            raise ElaborationError(f"unknown module {inst.module!r}", inst.pos)
        if any(inst.name == i for i, _ in instances):
            raise ElaborationError(f"duplicate instance {inst.name!r}", inst.pos)
        instances.append((inst.name, inst.module))
    inst_mod = dict(instances)

    def port_decl(inst, port, pos):
        if inst not in inst_mod:
            raise ElaborationError(f"unknown instance {inst!r}", pos)
        for p in modules[inst_mod[inst]].ports:
            if p.name == port:
                return p
        raise ElaborationError(f"instance {inst!r} has no port {port!r}", pos)

    bound = {}  # (dst inst, dst port) -> (src inst, src port)
    for b in design_ast.binds:
        src = port_decl(b.src_inst, b.src_port, b.pos)
        dst = port_decl(b.dst_inst, b.dst_port, b.pos)
        if src.direction != "out":
            raise ElaborationError(f"bind source {b.src_inst}.{b.src_port} is not an out-port", b.pos)
        if dst.direction != "in":
            raise ElaborationError(f"bind target {b.dst_inst}.{b.dst_port} is not an in-port", b.pos)
        if not (src.type == dst.type):
            raise ElaborationError(
                f"type mismatch on bind: {src.type} -> {dst.type}", b.pos)
        key = (b.dst_inst, b.dst_port)
        if key in bound:
            raise ElaborationError(f"in-port {b.dst_inst}.{b.dst_port} bound twice", b.pos)
        bound[key] = (b.src_inst, b.src_port)

    signals, vars_, inputs, events = [], [], [], []
    sig_index, var_index, in_index, ev_index = {}, {}, {}, {}
    ports = {}
    for inst, mname in instances:
        mod = modules[mname]
        for p in mod.ports:
            if p.direction == "out":
                sig_index[f"{inst}.{p.name}"] = len(signals)
                signals.append(Signal(f"{inst}.{p.name}", p.type, p.type.default(), inst, p.name, "port"))
        for s in mod.signals:
            sig_index[f"{inst}.{s.name}"] = len(signals)
            signals.append(Signal(f"{inst}.{s.name}", s.type, _literal_code(s.type, s.init), inst, s.name, "signal"))
        for v in mod.vars:
            var_index[f"{inst}.{v.name}"] = len(vars_)
            vars_.append(Var(f"{inst}.{v.name}", v.type, _literal_code(v.type, v.init), inst, v.name))
        for e in mod.events:
            ev_index[f"{inst}.{e.name}"] = len(events)
            events.append(Event(f"{inst}.{e.name}", inst, e.name))
    for inst, mname in instances:
        for p in modules[mname].ports:
            if p.direction == "in" and (inst, p.name) not in bound:
                in_index[f"{inst}.{p.name}"] = len(inputs)
                inputs.append(Input(f"{inst}.{p.name}", p.type, inst, p.name))

    nets = {}
    for (di, dp), (si, sp) in bound.items():
        idx = sig_index[f"{si}.{sp}"]
        nets.setdefault(idx, Net(idx, f"{si}.{sp}", [])).readers.append(f"{di}.{dp}")
    net_list = [nets[k] for k in sorted(nets)]
    for n in net_list:
        n.readers.sort()

    def ref_for(inst, member_decl):
        key = f"{inst}.{member_decl.name}"
        if isinstance(member_decl, ast.PortDecl) and member_decl.direction == "in":
            if (inst, member_decl.name) in bound:
                si, sp = bound[(inst, member_decl.name)]
                s = sig_index[f"{si}.{sp}"]
                return RRef("sig", s, signals[s].name, member_decl.type)
            return RRef("in", in_index[key], key, member_decl.type)
        if isinstance(member_decl, (ast.PortDecl, ast.SignalDecl)):
            return RRef("sig", sig_index[key], key, member_decl.type)
        if isinstance(member_decl, ast.VarDecl):
            return RRef("var", var_index[key], key, member_decl.type)
        return None

    for inst, mname in instances:
        mod = modules[mname]
        plist = []
        for p in mod.ports:
            r = ref_for(inst, p)
            plist.append(Port(p.name, p.direction, p.type, r.space, r.index))
        ports[inst] = plist

    processes = []
    warnings = []
    for inst, mname in instances:
        mod = modules[mname]
        table = {}
        for m in mod.members():
            r = ref_for(inst, m)
            if r is not None:
                table[m.name] = r
        typer = _Typer(_Scope(table, qualified=False))
        member_kind = {m.name: m for m in mod.members()}
        for proc in mod.processes:
            pname = f"{inst}.{proc.name}"
            nodes = _lower(proc, inst, typer, member_kind, sig_index, ev_index, var_index)
            for n in nodes:
                if n.kind == "nb":
                    sig = signals[n.target]
                    if pname not in sig.writers:
                        sig.writers.append(pname)
            reach = _reachable(nodes)
            for n in nodes:
                if n.loc not in reach:
                    warnings.append(f"{n.pos[0] if n.pos else 0}:{n.pos[1] if n.pos else 0}: "
                                    f"dead code in process {pname} at location {n.loc}")
            processes.append(Process(pname, inst, proc.name, nodes, frozenset(reach)))

    for s in signals:
        if len(s.writers) > 1:
            raise ElaborationError(
                f"signal {s.name!r} written by several processes: {', '.join(s.writers)}")

    space = 1
    for t in [s.type for s in signals] + [v.type for v in vars_] + [i.type for i in inputs]:
        space *= t.cardinality()
    if space > value_cap:
        raise ElaborationError(f"value space {space} exceeds cap {value_cap}")

    design = ElaboratedDesign(design_ast, instances, modules, signals, vars_, inputs, events,
                              processes, net_list, ports, {}, warnings, space)
    for prop in design_ast.properties:
        if prop.name in design.properties:
            raise ElaborationError(f"duplicate property {prop.name!r}", prop.pos)
        design.properties[prop.name] = resolve_property(design, prop)
    return design


def global_scope(design):
    """Qualified-name table over all instances (vars included)."""
    table = {}
    for s in design.signals:
        table[s.name] = RRef("sig", design.signal_index(s.name), s.name, s.type)
    for k, v in enumerate(design.vars):
        table[v.name] = RRef("var", k, v.name, v.type)
    for k, i in enumerate(design.inputs):
        table[i.name] = RRef("in", k, i.name, i.type)
    for inst, plist in design.ports.items():
        for p in plist:
            if p.direction == "in" and p.space == "sig":
                s = design.signals[p.index]
                table[f"{inst}.{p.name}"] = RRef("sig", p.index, s.name, s.type)
    return table


def resolve_property(design, prop, hidden=None):
    """Type-check a property declaration against ``design``.

    ``hidden`` maps names that exist in the source design but are not
    visible (e.g. internals of a stubbed instance) to an error message.
    """
    table = global_scope(design)

    def check_hidden(name, pos):
        if hidden and name in hidden:
            from ..errors import HiddenSymbolError
            raise HiddenSymbolError(hidden[name])

    if prop.kind == "invariant":
        for n in _names(prop.body):
            check_hidden(n.dotted, n.pos)
        body = _Typer(_Scope(table, qualified=True)).expr(prop.body)
        if body.type.kind != "bool":
            raise ElaborationError(f"invariant {prop.name!r} is not boolean", prop.pos)
        return Property(prop.name, "invariant", body, compile_expr(body), prop)

    def lookup(name):
        ref = table.get(name)
        if ref is None or ref.space == "var":
            return None
        return ref

    def resolver(atom):
        check_hidden(atom.name, atom.pos)
        ref = lookup(atom.name)
        if ref is None and atom.name in table:
            raise ElaborationError(
                f"{atom.name!r} is a variable; LTL atoms must name signals or inputs", atom.pos)
        typed = ltl.typed_atom_resolver(lambda n: ref.type if ref else None)(atom)
        return ltl.Atom(ref.name, typed.op, typed.value, pos=atom.pos)

    return Property(prop.name, "ltl", ltl.resolve(prop.body, resolver), None, prop)


def _names(e):
    if isinstance(e, ast.Name):
        yield e
    elif isinstance(e, ast.Unary):
        yield from _names(e.operand)
    elif isinstance(e, ast.Binary):
        yield from _names(e.left)
        yield from _names(e.right)


def _lower(proc, inst, typer, members, sig_index, ev_index, var_index):
    locs = {}
    _number(proc.body, locs)
    nodes = [None] * (len(locs) + 1)
    nodes[0] = Node(0, "entry", pos=proc.pos)

    def first(stmts, follow):
        return locs[id(stmts[0])] if stmts else follow

    def member(name, pos):
        m = members.get(name)
        if m is None:
            raise ElaborationError(f"unknown name {name!r}", pos)
        return m

    def block(stmts, follow):
        for k, s in enumerate(stmts):
            nxt = locs[id(stmts[k + 1])] if k + 1 < len(stmts) else follow
            loc = locs[id(s)]
            nodes[loc] = stmt(s, loc, nxt)

    def stmt(s, loc, nxt):
        if isinstance(s, ast.Assign):
            m = member(s.target, s.pos)
            if not isinstance(m, ast.VarDecl):
                raise ElaborationError(f"'=' must target a var, {s.target!r} is not one", s.pos)
            value = typer.expr(s.expr, m.type)
            _assignable(m.type, value, s.pos)
            return Node(loc, "assign", nxt, target=var_index[f"{inst}.{s.target}"],
                        expr=value, fn=compile_expr(value), pos=s.pos)
        if isinstance(s, ast.NbAssign):
            m = member(s.target, s.pos)
            ok = isinstance(m, ast.SignalDecl) or (isinstance(m, ast.PortDecl) and m.direction == "out")
            if not ok:
                raise ElaborationError(
                    f"'<=' must target a signal or out-port, {s.target!r} is not one", s.pos)
            value = typer.expr(s.expr, m.type)
            _assignable(m.type, value, s.pos)
            return Node(loc, "nb", nxt, target=sig_index[f"{inst}.{s.target}"],
                        expr=value, fn=compile_expr(value), pos=s.pos)
        if isinstance(s, (ast.If, ast.While)):
            cond = typer.expr(s.cond)
            if cond.type.kind != "bool":
                raise ElaborationError("condition must be boolean", s.pos)
            if isinstance(s, ast.If):
                block(s.then, nxt)
                true_next = first(s.then, nxt)
                if s.orelse is not None:
                    block(s.orelse, nxt)
                    false_next = first(s.orelse, nxt)
                else:
                    false_next = nxt
            else:
                block(s.body, loc)
                true_next = first(s.body, loc)
                false_next = nxt
            return Node(loc, "cond", true_next, false_next, expr=cond,
                        fn=compile_expr(cond), pos=s.pos)
        if isinstance(s, ast.Wait):
            if s.kind == "time":
                if s.arg < 1:
                    raise ElaborationError("wait time must be at least 1", s.pos)
                return Node(loc, "wait_time", nxt, amount=s.arg, pos=s.pos)
            if s.kind == "change":
                m = member(s.arg, s.pos)
                ref = typer.scope.table.get(s.arg)
                if not isinstance(m, (ast.SignalDecl, ast.PortDecl)):
                    raise ElaborationError(f"wait(change {s.arg}) needs a signal or port", s.pos)
                return Node(loc, "wait_change", nxt, target=ref.index, space=ref.space, pos=s.pos)
            m = member(s.arg, s.pos)
            if not isinstance(m, ast.EventDecl):
                raise ElaborationError(f"{s.arg!r} is not an event", s.pos)
            return Node(loc, "wait_event", nxt, target=ev_index[f"{inst}.{s.arg}"], pos=s.pos)
        if isinstance(s, ast.Notify):
            m = member(s.event, s.pos)
            if not isinstance(m, ast.EventDecl):
                raise ElaborationError(f"{s.event!r} is not an event", s.pos)
            if s.mode == "time" and s.amount < 1:
                raise ElaborationError("notify time must be at least 1", s.pos)
            return Node(loc, "notify", nxt, target=ev_index[f"{inst}.{s.event}"],
                        mode=s.mode, amount=s.amount, pos=s.pos)
        if isinstance(s, ast.Assert):
            cond = typer.expr(s.expr)
            if cond.type.kind != "bool":
                raise ElaborationError("assert needs a boolean expression", s.pos)
            return Node(loc, "assert", nxt, expr=cond, fn=compile_expr(cond), pos=s.pos)
        if isinstance(s, ast.Skip):
            return Node(loc, "skip", nxt, pos=s.pos)
        raise TypeError(f"unknown statement {s!r}")

    block(proc.body, END)
    nodes[0].next = first(proc.body, END)
    return nodes


def _reachable(nodes):
    seen = {0}
    stack = [0]
    while stack:
        n = nodes[stack.pop()]
        for succ in n.live_successors():
            if succ != END and succ not in seen:
                seen.add(succ)
                stack.append(succ)
    return seen

