"""Module-based verification: interface stubs learned from components,
stub/component consistency, stubbed composition and concrete replay.

An interface letter is the tuple of a component's port values (in-ports
then out-ports, each in declaration order) sampled at a phase boundary:
the initial state and every state entered by a delta or time step.  A
terminal state repeats its letter forever; a horizon overrun or an
assertion failure ends the letter sequence.

A stub is an h-history automaton.  Its states are the h-grams (windows of
h consecutive letters) seen in the component's letter sequences of length
at most k, and ``g -> g'`` is a transition whenever ``g`` and ``g'`` are
consecutive windows of one sequence.
"""

import dataclasses
import hashlib
import json
from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import TOOLCHAIN
from .errors import HiddenSymbolError, HorizonError, ResourceLimit, StaleStubError
from .explorer import (LTL, PASS, Trace, Verdict, check_ltl, check_safety)
from .frontend import ast
from .frontend.elaborate import elaborate, resolve_property
from .frontend.types import decode_json_value, type_from_json
from .kernel import MOST_GENERAL, Kernel, KernelConfig
from .props.lasso import eval_ltl_on_lasso

FORMAT_VERSION = 1
DEFAULT_K = 8
DEFAULT_H = 2


# alphabet

@dataclass(frozen=True)
class PortSpec:
    name: str
    direction: str
    type: object

    def to_json(self):
        return {"name": self.name, "direction": self.direction, "type": self.type.to_json()}


@dataclass(frozen=True)
class Alphabet:
    ports: tuple

    @property
    def fingerprint(self):
        text = json.dumps([p.to_json() for p in self.ports], sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def in_idx(self):
        return tuple(k for k, p in enumerate(self.ports) if p.direction == "in")

    @property
    def out_idx(self):
        return tuple(k for k, p in enumerate(self.ports) if p.direction == "out")

    def render(self, letter):
        return [p.type.render(v) for p, v in zip(self.ports, letter)]

    def decode(self, values):
        if len(values) != len(self.ports):
            raise ValueError(f"letter {values!r} has the wrong width")
        return tuple(decode_json_value(p.type, v) for p, v in zip(self.ports, values))

    def text(self, letter):
        return "(" + ", ".join(f"{p.name}={p.type.render(v)}".replace("True", "true")
                               .replace("False", "false")
                               for p, v in zip(self.ports, letter)) + ")"


def _ordered_ports(design, inst):
    plist = design.ports[inst]
    return [p for p in plist if p.direction == "in"] + [p for p in plist if p.direction == "out"]


def interface_alphabet(design, inst):
    if inst not in design.ports:
        raise KeyError(f"unknown instance {inst!r}")
    return Alphabet(tuple(PortSpec(p.name, p.direction, p.type) for p in _ordered_ports(design, inst)))


def _letter_fn(design, inst):
    refs = [(p.space, p.index) for p in _ordered_ports(design, inst)]

    def letter(state):
        return tuple(state.cur[i] if space == "sig" else state.inputs[i] for space, i in refs)
    return letter


def isolate(design, inst):
    """Re-elaborate the single instance ``inst`` with every in-port open."""
    module = dict(design.instances)[inst]
    tree = design.ast
    keep = [m for m in tree.modules if m.name == module]
    isolated = ast.DesignAst(tuple(keep), (ast.InstanceDecl(inst, module),), (), ())
    return elaborate(isolated)


# boundary-level exploration of a closed component

class _Boundaries:
    """Successor relation between boundary states of a component running
    inside an unknown system.

    Inside a system the in-ports of a component may change at any delta
    boundary, and boundaries caused by other components show the
    component's letter unchanged.  So, from a boundary state:

    - with pending activity, the component runs to its next update phase
      and the in-ports then take any value;
    - when quiescent, either a foreign boundary passes (in-ports take any
      value, possibly the same) or time advances as in the kernel.
    """

    def __init__(self, kernel, cancel=None):
        self.kernel = kernel
        self.cache = {}
        self.bound = None
        self.cancel = cancel

    def _open(self, s):
        return [self.kernel.with_inputs(s, vals) for vals in self.kernel.input_vals]

    def next(self, s):
        out = self.cache.get(s)
        if out is not None:
            return out
        if self.cancel is not None and self.cancel():
            raise InterruptedError("cancelled")
        k = self.kernel
        found = []
        if s.error is not None:
            pass
        elif k.is_quiescent(s):
            found.extend(self._open(s))
            try:
                found.extend(t for _, t in k.successors(s))
            except HorizonError as exc:
                self.bound = self.bound or exc.status
        else:
            seen = set()
            todo = [s]
            while todo:
                t = todo.pop()
                try:
                    succ = k.successors(t)
                except HorizonError as exc:
                    self.bound = self.bound or exc.status
                    continue
                for choice, u in succ:
                    if choice[0] == "run":
                        if u not in seen:
                            seen.add(u)
                            todo.append(u)
                    elif choice[0] == "delta":
                        found.extend(self._open(u))
                    else:
                        found.append(u)
        out = list(dict.fromkeys(found))
        self.cache[s] = out
        return out


@dataclass
class ComponentTraces:
    """Windows observed in the letter sequences of one component."""
    alphabet: Alphabet
    initial: set
    transitions: set
    bound: Optional[str]


def _observe_windows(design, inst, k, h, config, cancel=None):
    iso = isolate(design, inst)
    kernel = Kernel(iso, MOST_GENERAL, config)
    letter = _letter_fn(iso, inst)
    walker = _Boundaries(kernel, cancel)
    initial, transitions = set(), set()
    frontier = deque()
    seen = set()
    for s0 in kernel.initial_states():
        node = (s0, (letter(s0),))
        if node not in seen:
            seen.add(node)
            frontier.append((node, 1))
    while frontier:
        (s, window), depth = frontier.popleft()
        nxt = walker.next(s) if depth < k else None
        if len(window) == h and depth == h or len(window) < h and not nxt:
            initial.add(window)  # first h letters, or the whole short sequence
        if not nxt:
            continue
        for t in nxt:
            b = letter(t)
            if len(window) < h:
                new = window + (b,)
            else:
                new = window[1:] + (b,)
                transitions.add((window, b, new))
            node = (t, new)
            if node not in seen:
                seen.add(node)
                frontier.append((node, depth + 1))
    return ComponentTraces(interface_alphabet(iso, inst), initial, transitions, walker.bound)


# stubs

@dataclass
class InterfaceStub:
    component: str
    module: str
    k: int
    h: int
    alphabet: Alphabet
    states: list  # h-grams (tuples of letters), sorted
    initial: list  # indices into states
    transitions: list  # (src index, letter, dst index), sorted
    toolchain: str = TOOLCHAIN

    def to_json(self):
        a = self.alphabet
        return {
            "format_version": FORMAT_VERSION,
            "component": self.component,
            "module": self.module,
            "k": self.k,
            "h": self.h,
            "toolchain": self.toolchain,
            "alphabet": {"ports": [p.to_json() for p in a.ports], "fingerprint": a.fingerprint},
            "states": [[a.render(l) for l in g] for g in self.states],
            "initial": list(self.initial),
            "transitions": [[s, a.render(l), d] for s, l, d in self.transitions],
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def from_json(cls, data):
        if data.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported stub format_version {data.get('format_version')!r}")
        ports = tuple(PortSpec(p["name"], p["direction"], type_from_json(p["type"]))
                      for p in data["alphabet"]["ports"])
        a = Alphabet(ports)
        if data["alphabet"].get("fingerprint") != a.fingerprint:
            raise StaleStubError("stub alphabet fingerprint does not match its port list")
        states = [tuple(a.decode(l) for l in g) for g in data["states"]]
        trans = [(s, a.decode(l), d) for s, l, d in data["transitions"]]
        return cls(data["component"], data["module"], data["k"], data["h"], a, states,
                   list(data["initial"]), trans, data.get("toolchain", ""))

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))

    def runtime(self):
        return StubRuntime(self)


def _build_stub(inst, module, k, h, traces):
    grams = sorted(traces.initial | {w for w, _, _ in traces.transitions}
                   | {d for _, _, d in traces.transitions})
    index = {g: n for n, g in enumerate(grams)}
    trans = sorted((index[w], b, index[d]) for w, b, d in traces.transitions)
    initial = sorted(index[g] for g in traces.initial)
    return InterfaceStub(inst, module, k, h, traces.alphabet, grams, initial, trans)


def learn_stub(design, inst, k=DEFAULT_K, h=DEFAULT_H, config=None, cancel=None):
    """Learn the h-history stub of instance ``inst`` from its letter
    sequences of length at most ``k`` under the most general environment."""
    if k < 1 or h < 1:
        raise ValueError("k and h must be at least 1")
    traces = _observe_windows(design, inst, k, h, config or KernelConfig(), cancel)
    return _build_stub(inst, dict(design.instances)[inst], k, h, traces)


class StubRuntime:
    """Deterministic automaton over letters used by the kernel.

    State 0 is the empty history; the prefixes of initial h-grams lead to
    the h-gram states, which then follow the learned transitions.
    """

    def __init__(self, stub, design=None):
        self.stub = stub
        self.instance = stub.component
        a = stub.alphabet
        self._in_idx = a.in_idx
        self._out_idx = a.out_idx
        grams = [tuple(g) for g in stub.states]
        prefixes = set()
        for n in stub.initial:
            g = grams[n]
            for j in range(1, len(g) + 1):
                prefixes.add(g[:j])
        nodes = [()] + sorted(prefixes | set(grams))
        self.nodes = nodes
        self.index = {g: n for n, g in enumerate(nodes)}
        moves = {n: {} for n in range(len(nodes))}
        for p in prefixes:
            moves[self.index[p[:-1]]][p[-1]] = self.index[p]
        for s, letter, d in stub.transitions:
            src = self.index[grams[s]]
            moves[src].setdefault(letter, self.index[grams[d]])
        self._moves = {n: sorted(m.items()) for n, m in moves.items()}
        self._ticks = {}
        self.in_refs = []
        self.out_sigs = []
        if design is not None:
            self.bind(design)

    def bind(self, design):
        ports = {p.name: p for p in design.ports[self.instance]}
        specs = self.stub.alphabet.ports
        self.in_refs = [(ports[specs[i].name].space, ports[specs[i].name].index) for i in self._in_idx]
        self.out_sigs = [ports[specs[i].name].index for i in self._out_idx]
        return self

    def moves(self, state):
        return self._moves[state]

    def ticks(self, state, ins, out):
        """Moves reachable through output-preserving moves that then change
        the outputs, with the in-ports held at ``ins``."""
        key = (state, ins, out)
        hit = self._ticks.get(key)
        if hit is not None:
            return hit
        found = set()
        seen = {state}
        todo = [state]
        while todo:
            q = todo.pop()
            for letter, d in self._moves[q]:
                if self.in_part(letter) != ins:
                    continue
                if self.out_part(letter) == out:
                    if d not in seen:
                        seen.add(d)
                        todo.append(d)
                else:
                    found.add((letter, d))
        hit = sorted(found)
        self._ticks[key] = hit
        return hit

    def step(self, state, letter):
        for l, d in self._moves[state]:
            if l == letter:
                return d
        return None

    def in_part(self, letter):
        return tuple(letter[i] for i in self._in_idx)

    def out_part(self, letter):
        return tuple(letter[i] for i in self._out_idx)

    def accepts(self, word):
        s = 0
        for letter in word:
            s = self.step(s, letter)
            if s is None:
                return False
        return True


# consistency

@dataclass
class ConsistencyReport:
    ok: bool
    witness: Optional[list] = None  # letters of the shortest rejected sequence
    checked: int = 0
    bound: Optional[str] = None

    def to_json(self, alphabet):
        data = {"status": "pass" if self.ok else "fail", "checked_nodes": self.checked}
        if self.witness is not None:
            data["witness"] = [alphabet.render(l) for l in self.witness]
            data["witness_length"] = len(self.witness)
        if self.bound:
            data["horizon"] = self.bound
        return data


def check_consistency(design, inst, stub, k=DEFAULT_K, config=None, cancel=None):
    """Check that every letter sequence of ``inst`` of length at most ``k``
    is accepted by ``stub``; the witness of a failure is a shortest
    rejected sequence."""
    current = interface_alphabet(design, inst)
    if current.fingerprint != stub.alphabet.fingerprint:
        raise StaleStubError(
            f"stub for {stub.component!r} was learned for a different interface "
            f"({stub.alphabet.fingerprint[:12]} != {current.fingerprint[:12]})")
    iso = isolate(design, inst)
    kernel = Kernel(iso, MOST_GENERAL, config or KernelConfig())
    letter = _letter_fn(iso, inst)
    rt = StubRuntime(stub)
    walker = _Boundaries(kernel, cancel)
    parent = {}
    frontier = deque()
    for s0 in kernel.initial_states():
        b = letter(s0)
        q = rt.step(0, b)
        if q is None:
            return ConsistencyReport(False, [b], len(parent), walker.bound)
        node = (s0, q)
        if node not in parent:
            parent[node] = (None, b)
            frontier.append((node, 1))
    while frontier:
        node, depth = frontier.popleft()
        if depth >= k:
            continue
        s, q = node
        for t in walker.next(s):
            b = letter(t)
            d = rt.step(q, b)
            if d is None:
                return ConsistencyReport(False, _word(parent, node) + [b], len(parent), walker.bound)
            nxt = (t, d)
            if nxt not in parent:
                parent[nxt] = (node, b)
                frontier.append((nxt, depth + 1))
    return ConsistencyReport(True, None, len(parent), walker.bound)


def _word(parent, node):
    out = []
    while node is not None:
        node, b = parent[node]
        out.append(b)
    return out[::-1]


def language_included(small, big, k):
    """Shortest word of length at most ``k`` accepted by stub ``small`` and
    rejected by ``big`` (None if there is none)."""
    a, b = StubRuntime(small), StubRuntime(big)
    parent = {(0, 0): (None, None)}
    frontier = deque([((0, 0), 0)])
    while frontier:
        node, depth = frontier.popleft()
        if depth >= k:
            continue
        p, q = node
        for letter, p2 in a.moves(p):
            q2 = b.step(q, letter)
            if q2 is None:
                return _word(parent, node)[1:] + [letter]
            nxt = (p2, q2)
            if nxt not in parent:
                parent[nxt] = (node, letter)
                frontier.append((nxt, depth + 1))
    return None


# composition

def compose(design, stubs):
    """Replace the instances named by ``stubs`` (instance -> InterfaceStub)
    with their stubs.  The returned design keeps every signal, so bindings
    are preserved; the processes of stubbed instances are dropped."""
    runtimes = []
    for inst in sorted(stubs):
        stub = stubs[inst]
        expected = interface_alphabet(design, inst)
        if expected.fingerprint != stub.alphabet.fingerprint:
            raise StaleStubError(f"stub for {inst!r} does not match the interface of {inst!r}")
        runtimes.append(StubRuntime(stub, design))
    stubbed = set(stubs)
    composed = dataclasses.replace(
        design,
        processes=[p for p in design.processes if p.instance not in stubbed],
        properties={},
        stubs=tuple(design.stubs) + tuple(runtimes),
        warnings=list(design.warnings),
    )
    hidden = hidden_names(design, stubbed)
    for prop in design.ast.properties:
        try:
            composed.properties[prop.name] = resolve_property(composed, prop, hidden)
        except HiddenSymbolError:
            pass
    composed.hidden = hidden
    return composed


def hidden_names(design, instances):
    hidden = {}
    for s in design.signals:
        if s.instance in instances and s.kind != "port":
            hidden[s.name] = f"{s.name} is internal to stubbed instance {s.instance}"
    for v in design.vars:
        if v.instance in instances:
            hidden[v.name] = f"{v.name} is internal to stubbed instance {v.instance}"
    return hidden


def property_for(composed, source_design, name):
    """Resolve property ``name`` of the source design inside ``composed``."""
    decl = next((p for p in source_design.ast.properties if p.name == name), None)
    if decl is None:
        raise KeyError(f"unknown property {name!r}")
    return resolve_property(composed, decl, getattr(composed, "hidden", None))


def compose_and_verify(design, stubs, prop, env=MOST_GENERAL, config=None, **kw):
    """Verify property ``prop`` of ``design`` with ``stubs`` substituted.

    Liveness verdicts on a composition with stubs are advisory: the stubs
    over-approximate finite behaviour only.
    """
    composed = compose(design, stubs)
    resolved = property_for(composed, design, prop)
    if resolved.kind == "invariant":
        v = check_safety(composed, env, [resolved], config, **kw)
    else:
        v = check_ltl(composed, env, resolved.body, config, name=prop, **kw)
        v.advisory = bool(stubs)
    return composed, v


# replay of composition counterexamples

@dataclass
class ReplayResult:
    status: str  # "Confirmed" | "Spurious"
    trace: Optional[Trace] = None
    divergence: Optional[int] = None
    expected: Optional[dict] = None
    letter: Optional[str] = None

    def to_json(self, kernel=None):
        data = {"status": self.status}
        if self.trace is not None and kernel is not None:
            data["trace"] = self.trace.to_json(kernel)
        if self.status == "Spurious":
            data["divergence"] = self.divergence
            data["expected_observation"] = self.expected
            data["stub_letter"] = self.letter
        return data


def _collapse(values):
    out = []
    for v in values:
        if not out or out[-1] != v:
            out.append(v)
    return out


def _between(o, a, b):
    """``o`` mixes the values of consecutive observations ``a`` and ``b``: a
    stub step that changes several names at once may take the concrete
    system several steps."""
    return all(x == y or x == z for x, y, z in zip(o, a, b))


def replay_on_concrete(design, composed, verdict, config=None, node_cap=2_000_000):
    """Search the unstubbed ``design`` for a run whose visible observations
    (stutter-collapsed) match the composition counterexample and that
    exhibits the same violation.

    Visible observations are all signals and inputs except the internals
    of stubbed instances.  Between two consecutive target observations the
    concrete run may pass through observations mixing the two.
    """
    if not composed.stubs:
        return ReplayResult("Confirmed", verdict.trace)
    config = config or verdict.config
    ckernel = Kernel(composed, verdict.env, config)
    kernel = Kernel(design, verdict.env, config)
    hidden = getattr(composed, "hidden", {})
    names = [n for n, _ in design.observables()]
    visible = [k for k, n in enumerate(names) if n not in hidden]

    def project(s):
        vals = s.cur + s.inputs
        return tuple(vals[k] for k in visible)

    target = _collapse([project(s) for s in verdict.trace.states])
    last = len(target) - 1
    status = verdict.status
    prop = design.properties.get(verdict.prop) if verdict.prop else None

    def violates(path):
        s = path[-1]
        if status == "AssertionViolation":
            return s.error is not None
        if status == "Deadlock":
            return kernel.is_deadlock(s)
        if status == "InvariantViolation":
            return not prop.fn(s.vars, s.cur, s.inputs)
        if status == LTL:
            if not kernel.is_terminal(s):
                return False
            obs = [kernel.obs_codes(t) for t in path]
            return not eval_ltl_on_lasso(prop.body, obs[:-1], obs[-1:])
        return False

    best = [0]
    budget = [node_cap]

    def search(path, choices, idx):
        budget[0] -= 1
        if budget[0] < 0:
            raise ResourceLimit("replay search budget exhausted")
        best[0] = max(best[0], idx)
        s = path[-1]
        if idx == last and violates(path):
            return True
        try:
            succ = kernel.successors(s)
        except HorizonError:
            return False
        for choice, t in succ:
            o = project(t)
            if o == target[idx]:
                j = idx
            elif idx < last and o == target[idx + 1]:
                j = idx + 1
            elif idx < last and _between(o, target[idx], target[idx + 1]):
                j = idx
            else:
                continue
            path.append(t)
            choices.append(choice)
            if search(path, choices, j):
                return True
            path.pop()
            choices.pop()
        return False

    for s0 in kernel.initial_states():
        if project(s0) != target[0]:
            continue
        path, choices = [s0], []
        if search(path, choices, 0):
            loop_start = None
            if status == LTL:
                path.append(path[-1])
                choices.append(("stutter",))
                loop_start = len(path) - 2
            return ReplayResult("Confirmed", Trace(path, choices, loop_start))
    k = min(best[0] + 1, last)
    expected = dict(zip([names[i] for i in visible],
                        [t.render(v) for t, v in zip([design.observables()[i][1] for i in visible],
                                                     target[k])]))
    return ReplayResult("Spurious", None, k, expected, _stub_letter_at(ckernel, verdict.trace,
                                                                       target, k, project))


def _stub_letter_at(ckernel, trace, target, k, project):
    """Text of the stub letters in force where the composition first shows
    the collapsed observation ``target[k]``."""
    design = ckernel.design
    for s in trace.states:
        if project(s) == target[k]:
            parts = []
            for stub, q in zip(design.stubs, s.stubs):
                node = stub.nodes[q]
                if node:
                    parts.append(f"{stub.instance}{stub.stub.alphabet.text(node[-1])}")
            return " ".join(parts)
    return ""
