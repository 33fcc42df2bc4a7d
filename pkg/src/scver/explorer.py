"""Explicit-state verification engine.

States are stored in a hash set keyed by their canonical tuple form.
Horizon overruns (TimeBound, DeltaOverflow) cut the affected branch and
are remembered: a violation found anywhere wins, otherwise the first
bound hit becomes the verdict; Pass is returned only when the whole
reachable space was explored inside the horizon.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import HorizonError, ResourceLimit
from .kernel import (Kernel, KernelConfig, MOST_GENERAL, TERMINATED, choice_to_json,
                     choice_from_json, deserialize, serialize, replay)
from .props.buchi import to_buchi
from .props.lasso import eval_ltl_on_lasso
from .props.ltl import Not

PASS = "Pass"
INVARIANT = "InvariantViolation"
ASSERTION = "AssertionViolation"
DEADLOCK = "Deadlock"
LTL = "LtlViolation"
DELTA_OVERFLOW = "DeltaOverflow"
TIME_BOUND = "TimeBound"
VIOLATIONS = (INVARIANT, ASSERTION, DEADLOCK, LTL)
STATUSES = (PASS,) + VIOLATIONS + (DELTA_OVERFLOW, TIME_BOUND)

DEFAULT_STATE_CAP = 5_000_000


@dataclass
class Trace:
    """Counterexample: kernel states ``states[0..n]`` linked by ``choices[0..n-1]``.

    For lassos ``states[n] == states[loop_start]``: the loop runs from
    ``loop_start`` to ``n - 1`` and the last choice closes it.
    """
    states: list
    choices: list
    loop_start: Optional[int] = None

    def __len__(self):
        return len(self.choices)

    def to_json(self, kernel):
        design = kernel.design
        steps = []
        for k, s in enumerate(self.states):
            obs = kernel.observe(s)
            steps.append({
                "choice": {"init": True} if k == 0 else choice_to_json(design, self.choices[k - 1]),
                "time": s.time,
                "delta": s.delta,
                "phase": obs.phase,
                "observations": kernel.render_observation(obs),
            })
        data = {"initial_state": serialize(self.states[0]).decode(), "steps": steps}
        if self.loop_start is not None:
            data["loop_start"] = self.loop_start
        return data

    @classmethod
    def from_json(cls, kernel, data):
        initial = deserialize(data["initial_state"])
        choices = [choice_from_json(kernel.design, st["choice"]) for st in data["steps"][1:]]
        states = replay(kernel, initial, choices)
        return cls(states, choices, data.get("loop_start"))


@dataclass
class Verdict:
    status: str
    prop: Optional[str] = None
    message: str = ""
    stats: dict = field(default_factory=dict)
    trace: Optional[Trace] = None
    env: str = MOST_GENERAL
    config: KernelConfig = field(default_factory=KernelConfig)
    advisory: bool = False

    @property
    def violated(self):
        return self.status in VIOLATIONS

    def to_json(self, kernel):
        data = {
            "status": self.status,
            "property": self.prop,
            "message": self.message,
            "advisory": self.advisory,
            "env": self.env,
            "config": {"max_time": self.config.max_time, "max_delta": self.config.max_delta},
            "stats": dict(self.stats),
        }
        if self.trace is not None:
            data["trace"] = self.trace.to_json(kernel)
        return data

    def dumps(self, kernel):
        return json.dumps(self.to_json(kernel), sort_keys=True, indent=2) + "\n"


class _Stats:
    def __init__(self):
        self.stored = 0
        self.transitions = 0
        self.max_depth = 0
        self.expansions = 0

    def as_dict(self):
        return {"states_stored": self.stored, "transitions": self.transitions,
                "max_depth": self.max_depth, "expansions": self.expansions}


def _expand(kernel, state, bound):
    try:
        return kernel.successors(state)
    except HorizonError as exc:
        if bound[0] is None:
            bound[0] = exc
        return []


def _bound_verdict(bound, stats, prop, env, config):
    if bound[0] is None:
        return Verdict(PASS, prop, "", stats.as_dict(), None, env, config)
    return Verdict(bound[0].status, prop, str(bound[0]), stats.as_dict(), None, env, config)


def check_safety(design, env=MOST_GENERAL, invariants=(), config=None, deadlock=True,
                 state_cap=DEFAULT_STATE_CAP, kernel=None):
    """Depth-first search for invariant, assertion and deadlock violations.

    ``invariants`` are property names or elaborated ``Property`` objects.
    """
    config = config or KernelConfig()
    kernel = kernel or Kernel(design, env, config)
    props = [design.properties[p] if isinstance(p, str) else p for p in invariants]
    prop_name = ",".join(p.name for p in props) or None
    stats = _Stats()
    bound = [None]
    visited = set()

    def violation(s):
        if s.error is not None:
            return ASSERTION, s.error
        for p in props:
            if not p.fn(s.vars, s.cur, s.inputs):
                return INVARIANT, f"invariant {p.name} violated"
        if deadlock and kernel.is_deadlock(s):
            waiting = [design.processes[k].name for k, (st, _, _) in enumerate(s.procs) if st != TERMINATED]
            return DEADLOCK, "terminal state with waiting processes: " + ", ".join(waiting)
        return None

    def found(kind, msg, path_states, path_choices):
        name = None
        if kind == INVARIANT:
            last = path_states[-1]
            name = next(p.name for p in props if not p.fn(last.vars, last.cur, last.inputs))
        return Verdict(kind, name, msg, stats.as_dict(),
                       Trace(list(path_states), list(path_choices)), env, config)

    for init in kernel.initial_states():
        if init in visited:
            continue
        visited.add(init)
        stats.stored += 1
        v = violation(init)
        if v:
            return found(v[0], v[1], [init], [])
        path_states = [init]
        path_choices = []
        stack = [iter(_expand(kernel, init, bound))]
        stats.expansions += 1
        while stack:
            try:
                choice, t = next(stack[-1])
            except StopIteration:
                stack.pop()
                path_states.pop()
                if path_choices:
                    path_choices.pop()
                continue
            stats.transitions += 1
            if t in visited:
                continue
            visited.add(t)
            stats.stored += 1
            if stats.stored > state_cap:
                raise ResourceLimit(f"state cap {state_cap} exceeded")
            path_states.append(t)
            path_choices.append(choice)
            stats.max_depth = max(stats.max_depth, len(path_choices))
            v = violation(t)
            if v:
                return found(v[0], v[1], path_states, path_choices)
            stack.append(iter(_expand(kernel, t, bound)))
            stats.expansions += 1
    return _bound_verdict(bound, stats, prop_name, env, config)


def check_ltl(design, env=MOST_GENERAL, formula=None, config=None, state_cap=DEFAULT_STATE_CAP,
              name=None, kernel=None):
    """Nested depth-first search for an accepting cycle of the product of
    the kernel transition system with the automaton of the negated formula.

    ``formula`` is a property name or a resolved LTL formula.
    """
    config = config or KernelConfig()
    kernel = kernel or Kernel(design, env, config)
    if isinstance(formula, str):
        name = formula
        formula = design.properties[formula].body
    aut = to_buchi(Not(formula))
    stats = _Stats()
    bound = [None]
    if not aut.initial:
        return Verdict(PASS, name, "negated formula is unsatisfiable", stats.as_dict(),
                       None, env, config)

    truth_cache = {}

    def truth(s):
        tv = truth_cache.get(s)
        if tv is None:
            tv = aut.truth_vector(kernel.obs_codes(s))
            truth_cache[s] = tv
        return tv

    ksucc_cache = {}

    def ksucc(s):
        out = ksucc_cache.get(s)
        if out is None:
            if kernel.is_terminal(s):
                out = [(("stutter",), s)]
            else:
                out = _expand(kernel, s, bound)
            ksucc_cache[s] = out
        return out

    def psucc(node):
        s, q = node
        tv = truth(s)
        moves = [d for lab, d in aut.transitions.get(q, ()) if aut.label_holds(lab, tv)]
        if not moves:
            return []
        return [(c, (t, d)) for c, t in ksucc(s) for d in moves]

    visited1 = set()
    visited2 = set()

    for s0 in kernel.initial_states():
        for q0 in sorted(aut.initial):
            root = (s0, q0)
            if root in visited1:
                continue
            visited1.add(root)
            stats.stored += 1
            outer = [root]
            outer_choices = []
            on_stack = {root}
            iters = [iter(psucc(root))]
            stats.expansions += 1
            while iters:
                try:
                    choice, nxt = next(iters[-1])
                except StopIteration:
                    iters.pop()
                    node = outer.pop()
                    if node[1] in aut.accepting:
                        loop = _inner(node, on_stack, visited2, psucc, stats)
                        if loop is not None:
                            outer.append(node)
                            return _lasso_verdict(outer, outer_choices, loop, stats, name,
                                                  env, config)
                    on_stack.discard(node)
                    if outer_choices:
                        outer_choices.pop()
                    continue
                stats.transitions += 1
                if nxt in visited1:
                    continue
                visited1.add(nxt)
                stats.stored += 1
                if stats.stored > state_cap:
                    raise ResourceLimit(f"state cap {state_cap} exceeded")
                outer.append(nxt)
                outer_choices.append(choice)
                on_stack.add(nxt)
                stats.max_depth = max(stats.max_depth, len(outer_choices))
                iters.append(iter(psucc(nxt)))
                stats.expansions += 1
    return _bound_verdict(bound, stats, name, env, config)


def _inner(seed, on_stack, visited2, psucc, stats):
    """Second search: a path from ``seed`` back to a node on the outer stack."""
    path = [seed]
    choices = []
    iters = [iter(psucc(seed))]
    while iters:
        try:
            choice, nxt = next(iters[-1])
        except StopIteration:
            iters.pop()
            path.pop()
            if choices:
                choices.pop()
            continue
        stats.transitions += 1
        if nxt in on_stack:
            return path[1:] + [nxt], choices + [choice]
        if nxt in visited2:
            continue
        visited2.add(nxt)
        path.append(nxt)
        choices.append(choice)
        iters.append(iter(psucc(nxt)))
    return None


def _lasso_verdict(outer, outer_choices, loop, stats, name, env, config):
    inner_nodes, inner_choices = loop
    target = inner_nodes[-1]
    loop_start = outer.index(target)
    nodes = outer + inner_nodes
    choices = outer_choices + inner_choices
    trace = Trace([s for s, _ in nodes], choices, loop_start)
    return Verdict(LTL, name, "accepting cycle found", stats.as_dict(), trace, env, config)


@dataclass
class SpaceStats:
    states: int
    transitions: int
    terminals: list
    bound: Optional[str] = None


def enumerate_state_space(design, env=MOST_GENERAL, config=None, state_cap=DEFAULT_STATE_CAP):
    """Breadth-first enumeration without any property logic."""
    kernel = Kernel(design, env, config or KernelConfig())
    bound = [None]
    frontier = list(dict.fromkeys(kernel.initial_states()))
    seen = set(frontier)
    transitions = 0
    terminals = []
    while frontier:
        nxt = []
        for s in frontier:
            if kernel.is_terminal(s):
                terminals.append(s)
                continue
            for _, t in _expand(kernel, s, bound):
                transitions += 1
                if t not in seen:
                    seen.add(t)
                    if len(seen) > state_cap:
                        raise ResourceLimit(f"state cap {state_cap} exceeded")
                    nxt.append(t)
        frontier = nxt
    return SpaceStats(len(seen), transitions, terminals,
                      bound[0].status if bound[0] is not None else None)


class TraceMismatch(Exception):
    pass


def replay_verdict(design, verdict, recorded=None):
    """Replay ``verdict.trace`` through the kernel and confirm the claimed
    violation.  ``recorded`` (optional) is the trace JSON whose observations
    must be reproduced exactly."""
    kernel = Kernel(design, verdict.env, verdict.config)
    trace = verdict.trace
    if trace is None:
        raise TraceMismatch("verdict has no trace")
    if trace.states[0] not in kernel.initial_states():
        raise TraceMismatch("trace does not start in an initial state")
    try:
        states = replay(kernel, trace.states[0], trace.choices)
    except ValueError as exc:
        raise TraceMismatch(str(exc)) from None
    if states != trace.states:
        raise TraceMismatch("replayed states differ from the recorded trace")
    if recorded is not None:
        for s, step in zip(states, recorded["steps"]):
            obs = kernel.render_observation(kernel.observe(s))
            if obs != step["observations"] or s.time != step["time"] or s.delta != step["delta"]:
                raise TraceMismatch("replayed observation differs from the recorded step")
    last = states[-1]
    status = verdict.status
    if status == ASSERTION:
        ok = last.error is not None
    elif status == DEADLOCK:
        ok = kernel.is_deadlock(last)
    elif status == INVARIANT:
        prop = design.properties[verdict.prop]
        ok = not prop.fn(last.vars, last.cur, last.inputs)
    elif status == LTL:
        j = trace.loop_start
        if j is None or not 0 <= j < len(states) - 1 or states[-1] != states[j]:
            raise TraceMismatch("trace is not a lasso")
        formula = design.properties[verdict.prop].body
        obs = [kernel.obs_codes(s) for s in states[:-1]]
        ok = not eval_ltl_on_lasso(formula, obs[:j], obs[j:])
    else:
        raise TraceMismatch(f"status {status} carries no trace")
    if not ok:
        raise TraceMismatch(f"final state does not exhibit {status}")
    return True
