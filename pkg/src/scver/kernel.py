"""Explicit discrete-event scheduler semantics.

The scheduler state is a :class:`KernelState` value and :meth:`Kernel.successors`
is the transition function of the phase machine:

(a) some process runnable -> one successor per runnable process; the chosen
    process runs to completion (until it waits or terminates);
(b) no process runnable but an evaluation happened, a next-value is pending
    or a delta notification is pending -> one ``delta`` step (update phase,
    value-change wake-ups, delta notifications);
(c) otherwise a timer or timed notification is pending -> ``time`` step to
    the earliest wake time, branching over environment input valuations;
(d) otherwise the state is terminal.

Canonical serialisation: ``serialize`` writes the state fields as a compact
JSON array in field order (time, delta, evaluated, procs, cur, nxt, vars,
pend, inputs, stubs, error).  ``procs`` holds one ``[status, arg, loc]``
triple per process, ``pend`` one entry per event (0 none, -1 delta, t > 0
timed for time t).
"""

import itertools
import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import DeltaOverflow, TimeBound
from .frontend.elaborate import END

RUNNABLE, W_TIME, W_CHANGE, W_EVENT, TERMINATED = range(5)
STATUS_NAMES = ("Runnable", "WaitingTime", "WaitingChange", "WaitingEvent", "Terminated")

CLOSED_DEFAULT = "ClosedDefault"
MOST_GENERAL = "MostGeneral"
ENV_POLICIES = (CLOSED_DEFAULT, MOST_GENERAL)

PHASE_TIME = "time-boundary"
PHASE_DELTA = "delta-boundary"
PHASE_TERMINAL = "terminal"


@dataclass(frozen=True)
class KernelConfig:
    max_time: int = 100
    max_delta: int = 64
    max_run_steps: int = 10_000

    def __post_init__(self):
        if self.max_time < 1 or self.max_delta < 1 or self.max_run_steps < 1:
            raise ValueError("kernel bounds must be positive")


class KernelState(NamedTuple):
    time: int
    delta: int
    evaluated: bool
    procs: tuple
    cur: tuple
    nxt: tuple
    vars: tuple
    pend: tuple
    inputs: tuple
    stubs: tuple = ()
    error: Optional[str] = None

    @property
    def pending_delta(self):
        return tuple(e for e, p in enumerate(self.pend) if p == -1)

    @property
    def pending_timed(self):
        return tuple((e, p) for e, p in enumerate(self.pend) if p > 0)


class Observation(NamedTuple):
    values: tuple
    time: int
    phase: str


def serialize(state):
    return json.dumps(list(state), separators=(",", ":")).encode()


def deserialize(data):
    raw = json.loads(data)
    (time, delta, evaluated, procs, cur, nxt, vars_, pend, inputs, stubs, error) = raw
    return KernelState(time, delta, evaluated, tuple(tuple(p) for p in procs), tuple(cur),
                       tuple(nxt), tuple(vars_), tuple(pend), tuple(inputs), tuple(stubs), error)


def choice_to_json(design, choice):
    kind = choice[0]
    if kind == "run":
        return {"run": design.processes[choice[1]].name}
    if kind == "delta":
        return {"delta": list(choice[1])}
    if kind in ("time", "tick"):
        vals = {i.name: i.type.render(v) for i, v in zip(design.inputs, choice[1])}
        return {kind: vals, "stubs": list(choice[2])}
    return {"stutter": True}


def choice_from_json(design, data):
    if "run" in data:
        return ("run", design.process_index(data["run"]))
    if "delta" in data:
        return ("delta", tuple(data["delta"]))
    for kind in ("time", "tick"):
        if kind in data:
            vals = tuple(i.type.encode(data[kind][i.name]) for i in design.inputs)
            return (kind, vals, tuple(data["stubs"]))
    return ("stutter",)


class Kernel:
    def __init__(self, design, env=MOST_GENERAL, config=None):
        if env not in ENV_POLICIES:
            raise ValueError(f"unknown environment policy {env!r}")
        self.design = design
        self.env = env
        self.config = config or KernelConfig()
        self.nodes = [p.nodes for p in design.processes]
        self.sig_types = [s.type for s in design.signals]
        self.var_types = [v.type for v in design.vars]
        if env == MOST_GENERAL:
            self.input_vals = list(itertools.product(*(i.type.codes() for i in design.inputs)))
        else:
            self.input_vals = [tuple(i.type.default() for i in design.inputs)]
        self.stubs = design.stubs

    # initial states

    def initial_states(self):
        d = self.design
        base = KernelState(
            time=0, delta=0, evaluated=False,
            procs=tuple((RUNNABLE, 0, 0) for _ in d.processes),
            cur=tuple(s.init for s in d.signals),
            nxt=tuple(None for _ in d.signals),
            vars=tuple(v.init for v in d.vars),
            pend=tuple(0 for _ in d.events),
            inputs=(),
            stubs=tuple(0 for _ in self.stubs),
        )
        out = []
        for vals in self.input_vals:
            s = base._replace(inputs=vals)
            for _, t in self._stub_moves(s, wake=False):
                out.append(t)
        return out

    # transition function

    def successors(self, state):
        return [(c, s) for c, s, _ in self.expand(state)]

    def expand(self, state):
        """Successors as (choice, state, visited) triples.

        ``visited`` lists the control locations executed by a run step
        (empty for delta/time steps).
        """
        if state.error is not None:
            return []
        runnable = [p for p, (st, _, _) in enumerate(state.procs) if st == RUNNABLE]
        if runnable:
            return [(("run", p),) + self._run(state, p) for p in runnable]
        if state.evaluated or any(v is not None for v in state.nxt) or -1 in state.pend:
            return self._delta_step(state)
        wake = [a for st, a, _ in state.procs if st == W_TIME] + [p for p in state.pend if p > 0]
        out = self._time_step(state, min(wake)) if wake else []
        if self.stubs and (not wake or min(wake) > state.time + 1):
            out += self._stub_tick(state)
        return out

    def is_terminal(self, state):
        if state.error is not None:
            return True
        if state.evaluated or any(v is not None for v in state.nxt):
            return False
        if any(p != 0 for p in state.pend):
            return False
        if not all(st in (W_CHANGE, W_EVENT, TERMINATED) for st, _, _ in state.procs):
            return False
        return not (self.stubs and self._tick_options(state, state.inputs))

    def is_deadlock(self, state):
        return (state.error is None and self.is_terminal(state)
                and any(st != TERMINATED for st, _, _ in state.procs))

    def observe(self, state):
        if self.is_terminal(state):
            phase = PHASE_TERMINAL
        else:
            phase = PHASE_TIME if state.delta == 0 else PHASE_DELTA
        return Observation(state.cur + state.inputs, state.time, phase)

    def obs_codes(self, state):
        names = self.obs_names
        return dict(zip(names, state.cur + state.inputs))

    @property
    def obs_names(self):
        names = getattr(self, "_obs_names", None)
        if names is None:
            names = [n for n, _ in self.design.observables()]
            self._obs_names = names
        return names

    def render_observation(self, obs):
        types = [t for _, t in self.design.observables()]
        return {n: t.render(v) for n, t, v in zip(self.obs_names, types, obs.values)}

    # phases

    def _run(self, state, p):
        procs = list(state.procs)
        vars_ = list(state.vars)
        nxt = list(state.nxt)
        pend = list(state.pend)
        cur = state.cur
        inputs = state.inputs
        nodes = self.nodes[p]
        loc = procs[p][2]
        visited = []
        error = None
        limit = self.config.max_run_steps
        while True:
            if loc == END:
                procs[p] = (TERMINATED, 0, END)
                break
            if len(visited) >= limit:
                raise DeltaOverflow(
                    f"process {self.design.processes[p].name} ran {limit} steps without waiting")
            node = nodes[loc]
            visited.append(loc)
            kind = node.kind
            if kind == "assign":
                v = node.fn(vars_, cur, inputs)
                if not self.var_types[node.target].contains(v):
                    error = f"range:{self.design.vars[node.target].name}={v}"
                    procs[p] = (RUNNABLE, 0, loc)
                    break
                vars_[node.target] = v
                loc = node.next
            elif kind == "nb":
                v = node.fn(vars_, cur, inputs)
                if not self.sig_types[node.target].contains(v):
                    error = f"range:{self.design.signals[node.target].name}={v}"
                    procs[p] = (RUNNABLE, 0, loc)
                    break
                nxt[node.target] = v
                loc = node.next
            elif kind == "cond":
                loc = node.next if node.fn(vars_, cur, inputs) else node.alt
            elif kind == "wait_time":
                procs[p] = (W_TIME, state.time + node.amount, node.next)
                break
            elif kind == "wait_change":
                arg = node.target if node.space == "sig" else -node.target - 1
                procs[p] = (W_CHANGE, arg, node.next)
                break
            elif kind == "wait_event":
                procs[p] = (W_EVENT, node.target, node.next)
                break
            elif kind == "notify":
                ev = node.target
                if node.mode is None:
                    for q, (st, arg, qloc) in enumerate(procs):
                        if q != p and st == W_EVENT and arg == ev:
                            procs[q] = (RUNNABLE, 0, qloc)
                elif node.mode == "delta":
                    pend[ev] = -1
                else:
                    when = state.time + node.amount
                    if pend[ev] == 0 or (pend[ev] > 0 and when < pend[ev]):
                        pend[ev] = when
                loc = node.next
            elif kind == "assert":
                if not node.fn(vars_, cur, inputs):
                    error = f"assert:{self.design.processes[p].name}:{loc}"
                    procs[p] = (RUNNABLE, 0, loc)
                    break
                loc = node.next
            else:  # entry, skip
                loc = node.next
        new = state._replace(evaluated=True, procs=tuple(procs), vars=tuple(vars_),
                             nxt=tuple(nxt), pend=tuple(pend), error=error)
        return new, tuple(visited)

    def _delta_step(self, state):
        delta = state.delta + 1
        if delta > self.config.max_delta:
            raise DeltaOverflow(f"delta count exceeded {self.config.max_delta} at time {state.time}")
        cur = list(state.cur)
        changed = set()
        for i, v in enumerate(state.nxt):
            if v is not None and cur[i] != v:
                cur[i] = v
                changed.add(i)
        delivered = {e for e, p in enumerate(state.pend) if p == -1}
        procs = []
        for st, arg, loc in state.procs:
            if (st == W_CHANGE and arg in changed) or (st == W_EVENT and arg in delivered):
                procs.append((RUNNABLE, 0, loc))
            else:
                procs.append((st, arg, loc))
        pend = tuple(0 if p == -1 else p for p in state.pend)
        new = state._replace(delta=delta, evaluated=False, procs=tuple(procs), cur=tuple(cur),
                             nxt=tuple(None for _ in state.nxt), pend=pend)
        return [(("delta", stubs), s, ()) for stubs, s in self._stub_moves(new)]

    def _time_step(self, state, when):
        if when > self.config.max_time:
            raise TimeBound(f"next wake-up at time {when} exceeds max_time {self.config.max_time}")
        delivered = {e for e, p in enumerate(state.pend) if p == when}
        procs = []
        for st, arg, loc in state.procs:
            if (st == W_TIME and arg == when) or (st == W_EVENT and arg in delivered):
                procs.append((RUNNABLE, 0, loc))
            else:
                procs.append((st, arg, loc))
        pend = tuple(0 if p == when else p for p in state.pend)
        base = state._replace(time=when, delta=0, evaluated=False, procs=tuple(procs), pend=pend)
        out = []
        for vals in self.input_vals:
            s = self.with_inputs(base, vals)
            for stubs, t in self._stub_moves(s):
                out.append((("time", vals, stubs), t, ()))
        return out

    def with_inputs(self, state, vals):
        """``state`` with open inputs ``vals``; waiters on changed inputs wake."""
        changed = {-j - 1 for j, (a, b) in enumerate(zip(state.inputs, vals)) if a != b}
        s = state._replace(inputs=tuple(vals))
        if changed:
            s = s._replace(procs=tuple(
                (RUNNABLE, 0, loc) if st == W_CHANGE and arg in changed else (st, arg, loc)
                for st, arg, loc in s.procs))
        return s

    def is_quiescent(self, state):
        """No activity left at the current time: the next step is a time
        step or nothing."""
        return (state.error is None and not state.evaluated
                and all(v is None for v in state.nxt) and -1 not in state.pend
                and all(st != RUNNABLE for st, _, _ in state.procs))

    # stubs

    def _tick_options(self, state, inputs):
        """Per stub: the moves it may make at a tick, or None if a stub has
        none.  Empty when no stub can change its outputs."""
        options = []
        productive = False
        for k, stub in enumerate(self.stubs):
            ins = tuple(state.cur[i] if space == "sig" else inputs[i] for space, i in stub.in_refs)
            out = tuple(state.cur[i] for i in stub.out_sigs)
            ticks = stub.ticks(state.stubs[k], ins, out)
            productive = productive or bool(ticks)
            opts = [(letter, dst) for letter, dst in stub.moves(state.stubs[k])
                    if stub.in_part(letter) == ins and stub.out_part(letter) == out]
            opts = sorted(set(opts) | set(ticks))
            if not opts:
                return []
            options.append(opts)
        return options if productive else []

    def _stub_tick(self, state):
        """Time advances by one unit because a stub changes its outputs
        while the rest of the system is quiescent."""
        when = state.time + 1
        base = state._replace(time=when, delta=0, evaluated=False)
        out = []
        for vals in self.input_vals:
            options = self._tick_options(state, vals)
            if not options:
                continue
            if when > self.config.max_time:
                raise TimeBound(f"stub tick at time {when} exceeds max_time {self.config.max_time}")
            s = self.with_inputs(base, vals)
            for combo in itertools.product(*[range(len(o)) for o in options]):
                moves = [options[k][j] for k, j in enumerate(combo)]
                cur = list(s.cur)
                changed = set()
                for stub, (letter, _) in zip(self.stubs, moves):
                    for sig, val in zip(stub.out_sigs, stub.out_part(letter)):
                        if cur[sig] != val:
                            cur[sig] = val
                            changed.add(sig)
                if not changed:
                    continue
                procs = tuple((RUNNABLE, 0, loc) if st == W_CHANGE and arg in changed
                              else (st, arg, loc) for st, arg, loc in s.procs)
                t = s._replace(cur=tuple(cur), procs=procs, stubs=tuple(d for _, d in moves))
                out.append((("tick", vals, combo), t, ()))
        return out

    def _stub_moves(self, state, wake=True):
        """Branch over the letters every stub may emit at a phase boundary."""
        if not self.stubs:
            return [((), state)]
        options = []
        for k, stub in enumerate(self.stubs):
            ins = tuple(state.cur[i] if space == "sig" else state.inputs[i]
                        for space, i in stub.in_refs)
            opts = [(j, letter, dst) for j, (letter, dst) in enumerate(stub.moves(state.stubs[k]))
                    if stub.in_part(letter) == ins]
            if not opts:
                return []
            options.append(opts)
        out = []
        for combo in itertools.product(*options):
            cur = list(state.cur)
            changed = set()
            for stub, (_, letter, _) in zip(self.stubs, combo):
                for sig, val in zip(stub.out_sigs, stub.out_part(letter)):
                    if cur[sig] != val:
                        cur[sig] = val
                        changed.add(sig)
            procs = state.procs
            if wake and changed:
                procs = tuple((RUNNABLE, 0, loc) if st == W_CHANGE and arg in changed
                              else (st, arg, loc) for st, arg, loc in procs)
            s = state._replace(cur=tuple(cur), procs=procs,
                               stubs=tuple(dst for _, _, dst in combo))
            out.append((tuple(j for j, _, _ in combo), s))
        return out


def replay(kernel, initial, choices):
    """Follow ``choices`` from ``initial``; returns the visited states.

    Raises ``ValueError`` when a choice is not enabled.
    """
    states = [initial]
    s = initial
    for c in choices:
        if c[0] == "stutter":
            if not kernel.is_terminal(s):
                raise ValueError("stutter step from a non-terminal state")
            states.append(s)
            continue
        for choice, t in kernel.successors(s):
            if choice == c:
                s = t
                break
        else:
            raise ValueError(f"choice {c!r} not enabled")
        states.append(s)
    return states
