"""Model-based test generation.

Coverage goals are statement locations and signal toggles.  A shortest
witness for every goal is found by one breadth-first sweep of the state
graph; each witness is then extended to the next time boundary so that
its effect can be observed, and turned into an abstract test case:
input stimulus per time boundary, expected signal values per time
boundary and the scheduler choices that were assumed.

Abstract tests are concretized against a map from abstract names to rig
channels; tests are laid out back to back on one time axis.
"""

import csv
import hashlib
import io
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConcretizationError, HorizonError
from .frontend.types import type_from_json
from .kernel import (MOST_GENERAL, Kernel, KernelConfig, choice_from_json,
                     choice_to_json)

STATEMENTS = "statements"
TOGGLES = "toggles"
CRITERIA = (STATEMENTS, TOGGLES)
FORMAT_VERSION = 1
DEFAULT_NODE_CAP = 2_000_000

UNREACHABLE = "Unreachable"


def _text(value):
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


@dataclass(frozen=True)
class Goal:
    kind: str  # "statement" | "toggle"
    id: str
    process: Optional[int] = None
    location: Optional[int] = None
    signal: Optional[int] = None
    src: Optional[int] = None
    dst: Optional[int] = None


def enumerate_goals(design, criteria=CRITERIA):
    unknown = set(criteria) - set(CRITERIA)
    if unknown:
        raise ValueError(f"unknown coverage criteria: {sorted(unknown)}")
    goals = []
    if STATEMENTS in criteria:
        for k, p in enumerate(design.processes):
            for n in p.nodes:
                goals.append(Goal("statement", f"stmt:{p.name}:{n.loc}", process=k, location=n.loc))
    if TOGGLES in criteria:
        order = sorted(range(len(design.signals)), key=lambda i: design.signals[i].name)
        for i in order:
            s = design.signals[i]
            for a in s.type.codes():
                for b in s.type.codes():
                    if a != b:
                        gid = f"toggle:{s.name}:{_text(s.type.render(a))}->{_text(s.type.render(b))}"
                        goals.append(Goal("toggle", gid, signal=i, src=a, dst=b))
    return goals


def covers(goal, state, choice, target, visited):
    if goal.kind == "statement":
        return choice[0] == "run" and choice[1] == goal.process and goal.location in visited
    return state.cur[goal.signal] == goal.src and target.cur[goal.signal] == goal.dst


@dataclass
class AbstractTest:
    goal: str
    length: int  # steps of the shortest witness
    schedule: list  # kernel choices: witness then settling steps
    stimulus: list  # (time, {input: code})
    expectations: list  # (time, signal name, code)

    def to_json(self, design):
        inputs = {i.name: i.type for i in design.inputs}
        sigs = {s.name: s.type for s in design.signals}
        return {
            "goal": self.goal,
            "length": self.length,
            "stimulus": [{"time": t, "inputs": {n: inputs[n].render(v) for n, v in vals.items()}}
                         for t, vals in self.stimulus],
            "expectations": [{"time": t, "signal": n, "value": sigs[n].render(v)}
                             for t, n, v in self.expectations],
            "schedule": [choice_to_json(design, c) for c in self.schedule],
        }


@dataclass
class TestSuite:
    design: object
    env: str
    config: KernelConfig
    tests: list
    uncovered: list  # (goal id, reason)
    goals: list = field(default_factory=list)

    def to_json(self):
        d = self.design
        types = {s.name: s.type.to_json() for s in d.signals}
        types.update({i.name: i.type.to_json() for i in d.inputs})
        return {
            "format_version": FORMAT_VERSION,
            "design_sha256": hashlib.sha256(d.canonical().encode()).hexdigest(),
            "env": self.env,
            "config": {"max_time": self.config.max_time, "max_delta": self.config.max_delta},
            "types": dict(sorted(types.items())),
            "goals": len(self.goals),
            "tests": [t.to_json(d) for t in self.tests],
            "uncovered": [{"goal": g, "reason": r} for g, r in self.uncovered],
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2) + "\n"

    @property
    def coverage(self):
        return len(self.tests) / len(self.goals) if self.goals else 1.0


def _boundary_samples(kernel, states, choices):
    """(time, signal, code) at the initial state, at every state entered by
    a time step and at a final terminal state."""
    names = [s.name for s in kernel.design.signals]
    picks = [0] + [k + 1 for k, c in enumerate(choices) if c[0] in ("time", "tick")]
    last = len(states) - 1
    if last not in picks and kernel.is_terminal(states[last]):
        picks.append(last)
    out = []
    for k in picks:
        s = states[k]
        out.extend((s.time, n, v) for n, v in zip(names, s.cur))
    return out


def _stimulus(kernel, states, choices):
    names = [i.name for i in kernel.design.inputs]
    if not names:
        return []
    out = [(0, dict(zip(names, states[0].inputs)))]
    for k, c in enumerate(choices):
        if c[0] in ("time", "tick"):
            out.append((states[k + 1].time, dict(zip(names, c[1]))))
    return out


def _settle(kernel, state):
    """Canonical continuation up to the next time boundary, holding the
    inputs where possible."""
    steps = []
    s = state
    while not kernel.is_terminal(s):
        try:
            succ = kernel.successors(s)
        except HorizonError:
            break
        if not succ:
            break
        pick = succ[0]
        for c, t in succ:
            if c[0] == "time" and tuple(c[1]) == s.inputs:
                pick = (c, t)
                break
        steps.append(pick)
        s = pick[1]
        if pick[0][0] in ("time", "tick"):
            break
    return steps


def generate_tests(design, env=MOST_GENERAL, goals=None, config=None, node_cap=DEFAULT_NODE_CAP):
    """Shortest witness per goal; returns a :class:`TestSuite`."""
    config = config or KernelConfig()
    goals = enumerate_goals(design) if goals is None else list(goals)
    kernel = Kernel(design, env, config)
    dead = {g.id for g in goals if g.kind == "statement"
            and g.location not in design.processes[g.process].reachable}
    open_goals = [g for g in goals if g.id not in dead]
    found = {}
    parent = {}
    frontier = deque()
    for s in kernel.initial_states():
        if s not in parent:
            parent[s] = None
            frontier.append(s)
    bound = None
    while frontier and len(found) < len(open_goals):
        s = frontier.popleft()
        try:
            succ = kernel.expand(s)
        except HorizonError as exc:
            bound = bound or exc.status
            continue
        for choice, t, visited in succ:
            for g in open_goals:
                if g.id not in found and covers(g, s, choice, t, visited):
                    found[g.id] = (s, choice, t)
            if t not in parent:
                if len(parent) >= node_cap:
                    bound = bound or "ResourceLimit"
                    continue
                parent[t] = (s, choice)
                frontier.append(t)
    tests, uncovered = [], []
    for g in goals:
        if g.id in dead:
            uncovered.append((g.id, UNREACHABLE))
        elif g.id not in found:
            uncovered.append((g.id, bound or UNREACHABLE))
        else:
            tests.append(_make_test(kernel, g, parent, *found[g.id]))
    return TestSuite(design, env, config, tests, uncovered, goals)


def _make_test(kernel, goal, parent, s, choice, t):
    path = [(choice, t)]
    while parent[s] is not None:
        prev, c = parent[s]
        path.append((c, s))
        s = prev
    path.reverse()
    states = [s] + [x for _, x in path]
    choices = [c for c, _ in path]
    length = len(choices)
    if choices[-1][0] not in ("time", "tick"):
        for c, x in _settle(kernel, states[-1]):
            choices.append(c)
            states.append(x)
    return AbstractTest(goal.id, length, choices, _stimulus(kernel, states, choices),
                        _boundary_samples(kernel, states, choices))


# replay

class TestReplayError(Exception):
    pass


def replay_test(design, test, env=MOST_GENERAL, config=None):
    """Re-run ``test`` (an AbstractTest or its JSON) and check that it covers
    its goal and meets every expectation; returns the visited states."""
    if isinstance(test, dict):
        test = _test_from_json(design, test)
    kernel = Kernel(design, env, config or KernelConfig())
    goals = {g.id: g for g in enumerate_goals(design)}
    goal = goals.get(test.goal)
    if goal is None:
        raise TestReplayError(f"unknown goal {test.goal!r}")
    init = dict(test.stimulus[0][1]) if test.stimulus else {}
    want = tuple(init.get(i.name, i.type.default()) for i in design.inputs)
    starts = [s for s in kernel.initial_states() if s.inputs == want]
    if not starts:
        raise TestReplayError("initial stimulus is not an initial input valuation")
    states = [starts[0]]
    s = starts[0]
    covered = False
    for k, c in enumerate(test.schedule):
        for choice, t, visited in kernel.expand(s):
            if choice == c:
                if k < test.length and covers(goal, s, choice, t, visited):
                    covered = True
                s = t
                break
        else:
            raise TestReplayError(f"step {k}: choice {c!r} not enabled")
        states.append(s)
    if not covered:
        raise TestReplayError(f"goal {goal.id} not covered within {test.length} steps")
    if _stimulus(kernel, states, test.schedule) != [(t, dict(v)) for t, v in test.stimulus]:
        raise TestReplayError("stimulus does not match the schedule")
    got = _boundary_samples(kernel, states, test.schedule)
    if got != [tuple(e) for e in test.expectations]:
        raise TestReplayError("expectations not met")
    return states


def _test_from_json(design, data):
    inputs = {i.name: i.type for i in design.inputs}
    sigs = {s.name: s.type for s in design.signals}
    stimulus = [(e["time"], {n: inputs[n].encode(v) for n, v in e["inputs"].items()})
                for e in data["stimulus"]]
    expectations = [(e["time"], e["signal"], sigs[e["signal"]].encode(e["value"]))
                    for e in data["expectations"]]
    schedule = [choice_from_json(design, c) for c in data["schedule"]]
    return AbstractTest(data["goal"], data["length"], schedule, stimulus, expectations)


# concretization

def _table_key(value):
    return _text(value)


def concretize(suite, mapping):
    """(stimulus CSV, expectations CSV) for the JSON test suite ``suite``.

    ``mapping`` is a concretization map: ``time_scale`` (ns per abstract
    time unit), optional ``header`` and ``names``: abstract name ->
    {"channel", "values" (table over every abstract value), optional
    "time_scale"}.  Every unmapped name or value is reported at once.
    """
    types = {n: type_from_json(t) for n, t in suite["types"].items()}
    names_map = mapping.get("names", {})
    used = set()
    for test in suite["tests"]:
        for entry in test["stimulus"]:
            used.update(entry["inputs"])
        used.update(e["signal"] for e in test["expectations"])
    missing = set()
    for n in sorted(used):
        m = names_map.get(n)
        if m is None or "channel" not in m:
            missing.add(n)
            continue
        table = m.get("values", {})
        for code in types[n].codes():
            if _table_key(types[n].render(code)) not in table:
                missing.add(f"{n}={_table_key(types[n].render(code))}")
    if missing:
        raise ConcretizationError(missing)
    default_scale = int(mapping.get("time_scale", 1))

    def row(writer, offset, t, name, value):
        m = names_map[name]
        scale = int(m.get("time_scale", default_scale))
        writer.writerow([(offset + t) * scale, m["channel"], m["values"][_table_key(value)]])

    stim, expect = io.StringIO(), io.StringIO()
    sw = csv.writer(stim, lineterminator="\n")
    ew = csv.writer(expect, lineterminator="\n")
    offset = 0
    for test in suite["tests"]:
        last = 0
        for entry in test["stimulus"]:
            for n in sorted(entry["inputs"]):
                row(sw, offset, entry["time"], n, entry["inputs"][n])
            last = max(last, entry["time"])
        for e in test["expectations"]:
            row(ew, offset, e["time"], e["signal"], e["value"])
            last = max(last, e["time"])
        offset += last + 1
    return stim.getvalue(), expect.getvalue()


def default_map(suite, time_scale=1000):
    """A total map naming each channel after its abstract name."""
    names = {}
    for n, t in sorted(suite["types"].items()):
        typ = type_from_json(t)
        values = {}
        for code in typ.codes():
            v = typ.render(code)
            values[_table_key(v)] = str(int(v)) if isinstance(v, bool) else str(v)
        names[n] = {"channel": n.replace(".", "_").upper(), "values": values}
    return {"header": {"rig": "generic"}, "time_scale": time_scale, "names": names}


# reuse of system tests on isolated components

def reuse_gap(design, suite):
    """Statement goals of ``suite`` whose stimulus does not reach the goal
    on the owning component in isolation (in-ports not driven by the
    stimulus held at their defaults)."""
    from .integration import isolate

    out = []
    isolated = {}
    for test in suite.tests:
        if not test.goal.startswith("stmt:"):
            continue
        _, pname, loc = test.goal.split(":")
        inst = pname.split(".")[0]
        if inst not in isolated:
            isolated[inst] = isolate(design, inst)
        if not _reaches(isolated[inst], pname, int(loc), test.stimulus, suite.config):
            out.append(test.goal)
    return out


def _reaches(iso, pname, loc, stimulus, config):
    kernel = Kernel(iso, MOST_GENERAL, config)
    k = iso.process_index(pname)
    names = [i.name for i in iso.inputs]
    defaults = {i.name: i.type.default() for i in iso.inputs}

    def valuation(time):
        vals = dict(defaults)
        for t, entry in stimulus:
            if t <= time:
                vals.update({n: v for n, v in entry.items() if n in vals})
        return tuple(vals[n] for n in names)

    seen = set()
    todo = [s for s in kernel.initial_states() if s.inputs == valuation(0)]
    seen.update(todo)
    while todo:
        s = todo.pop()
        try:
            succ = kernel.expand(s)
        except HorizonError:
            continue
        for c, t, visited in succ:
            if c[0] == "run" and c[1] == k and loc in visited:
                return True
            if c[0] == "time" and tuple(c[1]) != valuation(t.time):
                continue
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return False
