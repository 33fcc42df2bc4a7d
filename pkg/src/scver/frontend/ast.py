"""Syntax tree for SCL designs.

Every node carries a ``pos`` (line, column) that is excluded from equality,
so two trees compare equal when they are structurally identical.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

Pos = Tuple[int, int]


def _pos():
    return field(default=None, compare=False, repr=False)


# expressions

@dataclass(frozen=True)
class Name:
    ident: str
    qual: Optional[str] = None
    pos: Pos = _pos()

    @property
    def dotted(self):
        return f"{self.qual}.{self.ident}" if self.qual else self.ident


@dataclass(frozen=True)
class Lit:
    value: Union[bool, int]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    pos: Pos = _pos()


# statements

@dataclass(frozen=True)
class Assign:
    target: str
    expr: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class NbAssign:
    target: str
    expr: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: Optional[tuple] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class While:
    cond: object
    body: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class Wait:
    kind: str  # "time" | "change" | "event"
    arg: Union[int, str]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Notify:
    event: str
    mode: Optional[str] = None  # None (immediate) | "delta" | "time"
    amount: Optional[int] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assert:
    expr: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class Skip:
    pos: Pos = _pos()


# declarations

@dataclass(frozen=True)
class PortDecl:
    direction: str
    name: str
    type: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class SignalDecl:
    name: str
    type: object
    init: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: object
    init: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class EventDecl:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class ProcessDecl:
    name: str
    body: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    ports: tuple = ()
    signals: tuple = ()
    vars: tuple = ()
    events: tuple = ()
    processes: tuple = ()
    pos: Pos = _pos()

    def members(self):
        return self.ports + self.signals + self.vars + self.events + self.processes


@dataclass(frozen=True)
class InstanceDecl:
    name: str
    module: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class BindDecl:
    src_inst: str
    src_port: str
    dst_inst: str
    dst_port: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class PropertyDecl:
    kind: str  # "ltl" | "invariant"
    name: str
    body: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class DesignAst:
    modules: tuple = ()
    instances: tuple = ()
    binds: tuple = ()
    properties: tuple = ()
