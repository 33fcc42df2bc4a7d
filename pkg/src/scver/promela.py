"""Promela emission and an optional SPIN cross-check.

The emitted model mirrors the kernel's phase machine with an explicit
scheduler process.  Each SCL process becomes a proctype holding a
location-dispatch loop; it only moves while the global ``baton`` carries
its number, and a whole run segment (up to the next wait) is one
``d_step``, so properties see the same states the kernel produces.

Names: ``inst.member`` becomes ``inst__member``.  A member (or instance)
name is used verbatim when it is *plain*: no leading, trailing or doubled
underscore and no reserved suffix (``_cur``, ``_next`` ...).  Any other
name is escaped as ``_`` followed by the name with every ``_`` written as
``_0``.  Plain parts never contain ``__`` nor start with ``_``, escaped
parts always start with ``_`` and never contain ``__``, so the mapping is
injective; scheduler globals contain no ``__`` and cannot collide either.
"""

import hashlib
import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field

from . import TOOLCHAIN
from .errors import InfrastructureError, PromelaError
from .frontend.exprs import render
from .frontend.types import BOOL
from .kernel import CLOSED_DEFAULT, MOST_GENERAL, KernelConfig
from .props import ltl

RESERVED_SUFFIXES = ("_cur", "_next", "_wr", "_pend", "_st", "_arg", "_loc", "_nx")
_PLAIN = re.compile(r"[A-Za-z0-9]+(_[A-Za-z0-9]+)*\Z")

RUNNABLE, W_TIME, W_CHANGE, W_EVENT, TERMINATED = range(5)
_STATUS_DEFINES = ("RUNNABLE", "W_TIME", "W_CHANGE", "W_EVENT", "TERMINATED")


def mangle_part(name):
    if _PLAIN.match(name) and not name.endswith(RESERVED_SUFFIXES):
        return name
    return "_" + name.replace("_", "_0")


def mangle(name):
    """Promela identifier for a dotted source name."""
    return "__".join(mangle_part(p) for p in name.split("."))


def promela_type(typ):
    if typ is BOOL:
        return "bool"
    lo, hi = typ.lo, typ.hi
    if 0 <= lo and hi <= 255:
        return "byte"
    if -32768 <= lo and hi <= 32767:
        return "short"
    if -(1 << 31) <= lo and hi < (1 << 31):
        return "int"
    raise PromelaError(f"type {typ} exceeds the widest Promela integer")


def _literal(typ, code):
    if typ is BOOL:
        return "true" if code else "false"
    return str(code)


class _Emitter:
    def __init__(self, design, env, config):
        if design.stubs:
            raise PromelaError("designs with interface stubs cannot be emitted")
        self.d = design
        self.env = env
        self.config = config
        self.lines = []
        self.sig = [mangle(s.name) for s in design.signals]
        self.var = [mangle(v.name) for v in design.vars]
        self.inp = [mangle(i.name) for i in design.inputs]
        self.ev = [mangle(e.name) for e in design.events]
        self.proc = [mangle(p.name) for p in design.processes]
        # static waiters, for wake-up code
        self.change_waiters = {}
        self.event_waiters = {}
        for k, p in enumerate(design.processes):
            for n in p.nodes:
                if n.kind == "wait_change":
                    arg = n.target if n.space == "sig" else -n.target - 1
                    self.change_waiters.setdefault(arg, set()).add(k)
                elif n.kind == "wait_event":
                    self.event_waiters.setdefault(n.target, set()).add(k)

    def out(self, text="", indent=0):
        self.lines.append("    " * indent + text if text else "")

    # expressions

    def expr(self, e):
        def name(ref):
            if ref.space == "sig":
                return self.sig[ref.index] + "_cur"
            if ref.space == "var":
                return self.var[ref.index]
            return self.inp[ref.index]

        def const(c):
            return _literal(c.type, c.code)

        return render(e, name, const)

    # sections

    def header(self):
        digest = hashlib.sha256(self.d.canonical().encode()).hexdigest()
        self.out(f"/* generated by {TOOLCHAIN} */")
        self.out(f"/* source sha256 {digest} */")
        self.out(f"/* environment {self.env}, max_time {self.config.max_time}, "
                 f"max_delta {self.config.max_delta} */")
        self.out()
        self.out(f"#define MAX_TIME {self.config.max_time}")
        self.out(f"#define MAX_DELTA {self.config.max_delta}")
        self.out(f"#define MAX_RUN {self.config.max_run_steps}")
        for code, name in enumerate(_STATUS_DEFINES):
            self.out(f"#define {name} {code}")
        self.out()

    def globals(self):
        self.out("/* scheduler */")
        self.out("int now = 0;")
        self.out("int dcount = 0;")
        self.out("int nextt = -1;")
        self.out("bool evaluated = false;")
        self.out("bool bound_hit = false;")
        self.out("byte baton = 0;")
        if self.d.signals:
            self.out()
            self.out("/* signals */")
        for s, m in zip(self.d.signals, self.sig):
            t, init = promela_type(s.type), _literal(s.type, s.init)
            self.out(f"{t} {m}_cur = {init}; {t} {m}_next = {init}; bool {m}_wr = false;")
        if self.d.vars:
            self.out()
            self.out("/* variables */")
        for v, m in zip(self.d.vars, self.var):
            self.out(f"{promela_type(v.type)} {m} = {_literal(v.type, v.init)};")
        if self.d.inputs:
            self.out()
            self.out("/* open inputs and their next valuation */")
        for i, m in zip(self.d.inputs, self.inp):
            t, init = promela_type(i.type), _literal(i.type, i.type.default())
            self.out(f"{t} {m} = {init}; {t} {m}_nx = {init};")
        if self.d.events:
            self.out()
            self.out("/* events: 0 none, -1 delta, t > 0 timed */")
        for m in self.ev:
            self.out(f"int {m}_pend = 0;")
        self.out()
        self.out("/* processes */")
        for m in self.proc:
            self.out(f"byte {m}_st = RUNNABLE; int {m}_arg = 0; short {m}_loc = 0;")
        self.out()

    def wake(self, procs, status, arg, indent, exclude=None):
        for k in sorted(procs):
            if k == exclude:
                continue
            m = self.proc[k]
            self.out(f"if :: {m}_st == {status} && {m}_arg == {arg} -> {m}_st = RUNNABLE "
                     f":: else -> skip fi;", indent)

    def process(self, k):
        p = self.d.processes[k]
        m = self.proc[k]
        self.out(f"active proctype {m}() {{")
        self.out("int steps;", 1)
        self.out("end_wait:", 0)
        self.out("do", 1)
        self.out(f":: d_step {{ baton == {k + 1};", 1)
        self.out("steps = 0;", 2)
        self.out("do", 2)
        self.out(f":: {m}_loc == -1 -> {m}_st = TERMINATED; baton = 0; break", 2)
        self.out(f":: {m}_loc != -1 && steps >= MAX_RUN -> bound_hit = true; baton = 0; break", 2)
        for n in p.nodes:
            self.node(k, n)
        self.out("od;", 2)
        self.out("steps = 0", 2)
        self.out("}", 1)
        self.out("od", 1)
        self.out("}")
        self.out()

    def node(self, k, n):
        m = self.proc[k]
        guard = f":: steps < MAX_RUN && {m}_loc == {n.loc} -> steps++;"
        goto = f"{m}_loc = {n.next}"
        kind = n.kind
        if kind == "assign":
            typ = self.d.vars[n.target].type
            e = self.expr(n.expr)
            self.out(guard, 2)
            if typ is not BOOL:
                self.out(f"assert({typ.lo} <= {e} && {e} <= {typ.hi});", 3)
            self.out(f"{self.var[n.target]} = {e}; {goto}", 3)
        elif kind == "nb":
            typ = self.d.signals[n.target].type
            e = self.expr(n.expr)
            s = self.sig[n.target]
            self.out(guard, 2)
            if typ is not BOOL:
                self.out(f"assert({typ.lo} <= {e} && {e} <= {typ.hi});", 3)
            self.out(f"{s}_next = {e}; {s}_wr = true; {goto}", 3)
        elif kind == "cond":
            self.out(guard, 2)
            self.out(f"if :: {self.expr(n.expr)} -> {goto} :: else -> {m}_loc = {n.alt} fi", 3)
        elif kind == "wait_time":
            self.out(guard, 2)
            self.out(f"{m}_st = W_TIME; {m}_arg = now + {n.amount}; {goto}; baton = 0; break", 3)
        elif kind == "wait_change":
            arg = n.target if n.space == "sig" else -n.target - 1
            self.out(guard, 2)
            self.out(f"{m}_st = W_CHANGE; {m}_arg = {arg}; {goto}; baton = 0; break", 3)
        elif kind == "wait_event":
            self.out(guard, 2)
            self.out(f"{m}_st = W_EVENT; {m}_arg = {n.target}; {goto}; baton = 0; break", 3)
        elif kind == "notify":
            ev = self.ev[n.target]
            self.out(guard, 2)
            if n.mode is None:
                self.wake(self.event_waiters.get(n.target, ()), "W_EVENT", n.target, 3, exclude=k)
            elif n.mode == "delta":
                self.out(f"{ev}_pend = -1;", 3)
            else:
                self.out(f"if :: {ev}_pend == 0 || ({ev}_pend > 0 && now + {n.amount} < {ev}_pend) "
                         f"-> {ev}_pend = now + {n.amount} :: else -> skip fi;", 3)
            self.out(goto, 3)
        elif kind == "assert":
            self.out(guard, 2)
            self.out(f"assert({self.expr(n.expr)}); {goto}", 3)
        else:
            self.out(f"{guard} {goto}", 2)

    def choose_inputs(self, indent):
        """Nondeterministic next valuation of the open inputs."""
        for i, m in zip(self.d.inputs, self.inp):
            if self.env == CLOSED_DEFAULT:
                self.out(f"{m}_nx = {_literal(i.type, i.type.default())};", indent)
            elif i.type is BOOL:
                self.out(f"if :: {m}_nx = false :: {m}_nx = true fi;", indent)
            else:
                self.out(f"select({m}_nx : {i.type.lo} .. {i.type.hi});", indent)

    def scheduler(self):
        d = self.d
        procs = self.proc
        self.out("active proctype scheduler() {")
        if d.inputs:
            self.out("atomic {", 1)
            self.choose_inputs(2)
            self.out("}", 1)
            self.out("d_step {", 1)
            for m in self.inp:
                self.out(f"{m} = {m}_nx;", 2)
            self.out("}", 1)
        self.out("run_phase:")
        self.out("if", 1)
        for k, m in enumerate(procs):
            self.out(f":: {m}_st == RUNNABLE -> baton = {k + 1}", 1)
        self.out(":: else -> goto update_phase", 1)
        self.out("fi;", 1)
        self.out("baton == 0;", 1)
        self.out("evaluated = true;", 1)
        self.out("if :: bound_hit -> goto end_bound :: else -> goto run_phase fi;", 1)

        activity = ["evaluated"] + [f"{m}_wr" for m in self.sig] + [f"{m}_pend == -1" for m in self.ev]
        self.out("update_phase:")
        self.out("if", 1)
        self.out(f":: !({' || '.join(activity)}) -> goto time_phase", 1)
        self.out(":: dcount >= MAX_DELTA -> goto end_bound", 1)
        self.out(":: else -> skip", 1)
        self.out("fi;", 1)
        self.out("d_step {", 1)
        self.out("dcount++; evaluated = false;", 2)
        for i, m in enumerate(self.sig):
            self.out(f"if :: {m}_wr && {m}_next != {m}_cur -> {m}_cur = {m}_next;", 2)
            self.wake(self.change_waiters.get(i, ()), "W_CHANGE", i, 3)
            self.out(":: else -> skip fi;", 2)
            self.out(f"{m}_wr = false; {m}_next = {m}_cur;", 2)
        for e, m in enumerate(self.ev):
            self.out(f"if :: {m}_pend == -1 -> {m}_pend = 0;", 2)
            self.wake(self.event_waiters.get(e, ()), "W_EVENT", e, 3)
            self.out(":: else -> skip fi;", 2)
        self.out("}", 1)
        self.out("goto run_phase;", 1)

        self.out("time_phase:")
        self.out("d_step {", 1)
        self.out("nextt = -1;", 2)
        for m in procs:
            self.out(f"if :: {m}_st == W_TIME && (nextt < 0 || {m}_arg < nextt) -> nextt = {m}_arg "
                     f":: else -> skip fi;", 2)
        for m in self.ev:
            self.out(f"if :: {m}_pend > 0 && (nextt < 0 || {m}_pend < nextt) -> nextt = {m}_pend "
                     f":: else -> skip fi;", 2)
        self.out("}", 1)
        self.out("if", 1)
        self.out(":: nextt < 0 -> goto terminal", 1)
        self.out(":: nextt > MAX_TIME -> goto end_bound", 1)
        self.out(":: else -> skip", 1)
        self.out("fi;", 1)
        if d.inputs:
            self.out("atomic {", 1)
            self.choose_inputs(2)
            self.out("}", 1)
        self.out("d_step {", 1)
        self.out("now = nextt; nextt = -1; dcount = 0; evaluated = false;", 2)
        for k, m in enumerate(procs):
            self.out(f"if :: {m}_st == W_TIME && {m}_arg == now -> {m}_st = RUNNABLE "
                     f":: else -> skip fi;", 2)
        for e, m in enumerate(self.ev):
            self.out(f"if :: {m}_pend == now -> {m}_pend = 0;", 2)
            self.wake(self.event_waiters.get(e, ()), "W_EVENT", e, 3)
            self.out(":: else -> skip fi;", 2)
        for j, m in enumerate(self.inp):
            self.out(f"if :: {m}_nx != {m} -> {m} = {m}_nx;", 2)
            self.wake(self.change_waiters.get(-j - 1, ()), "W_CHANGE", -j - 1, 3)
            self.out(":: else -> skip fi;", 2)
        self.out("}", 1)
        self.out("goto run_phase;", 1)

        self.out("terminal:")
        done = " && ".join(f"{m}_st == TERMINATED" for m in procs) or "true"
        self.out(f"if :: {done} -> goto end_done :: else -> skip fi;", 1)
        self.out("deadlock:")
        self.out("false;", 1)
        self.out("end_bound:")
        self.out("skip;", 1)
        self.out("end_done:")
        self.out("skip", 1)
        self.out("}")
        self.out()

    def properties(self, names):
        for name in names:
            prop = self.d.properties.get(name)
            if prop is None:
                raise PromelaError(f"unknown property {name!r}")
            if prop.kind == "invariant":
                self.out(f"ltl inv_{name} {{ [] ({self.expr(prop.body)}) }}")
            else:
                self.out(f"ltl ltl_{name} {{ {self.formula(prop.body)} }}")

    def formula(self, f):
        if isinstance(f, ltl.Const):
            return "true" if f.value else "false"
        if isinstance(f, ltl.Atom):
            name = self._observable(f.name)
            if f.op is None:
                return name
            typ = self._type_of(f.name)
            return f"({name} {f.op} {_literal(typ, f.value)})"
        if isinstance(f, ltl.Not):
            return f"!{self.formula(f.arg)}"
        if isinstance(f, ltl.Next):
            return f"X {self.formula(f.arg)}"
        if isinstance(f, ltl.Finally):
            return f"<> {self.formula(f.arg)}"
        if isinstance(f, ltl.Globally):
            return f"[] {self.formula(f.arg)}"
        sym = {ltl.And: "&&", ltl.Or: "||", ltl.Until: "U", ltl.Release: "V"}[type(f)]
        return f"({self.formula(f.left)} {sym} {self.formula(f.right)})"

    def _observable(self, name):
        for k, s in enumerate(self.d.signals):
            if s.name == name:
                return self.sig[k] + "_cur"
        for k, i in enumerate(self.d.inputs):
            if i.name == name:
                return self.inp[k]
        for k, v in enumerate(self.d.vars):
            if v.name == name:
                return self.var[k]
        raise PromelaError(f"unknown name {name!r} in formula")

    def _type_of(self, name):
        for x in list(self.d.signals) + list(self.d.inputs) + list(self.d.vars):
            if x.name == name:
                return x.type
        raise PromelaError(f"unknown name {name!r} in formula")

    def emit(self, names):
        self.header()
        self.globals()
        for k in range(len(self.d.processes)):
            self.process(k)
        self.scheduler()
        self.properties(names)
        return "\n".join(self.lines).rstrip("\n") + "\n"


def emit_promela(design, properties=None, env=MOST_GENERAL, config=None):
    """Promela text for ``design`` with the named properties (all when None)."""
    names = sorted(design.properties) if properties is None else list(properties)
    return _Emitter(design, env, config or KernelConfig()).emit(names)


# SPIN cross-check

@dataclass
class CrosscheckReport:
    prop: str
    internal: str
    spin_violated: bool
    agree: object  # True, False or None when the internal check hit a bound
    spin_output: str = ""
    internal_message: str = ""
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "property": self.prop,
            "internal": self.internal,
            "spin_violated": self.spin_violated,
            "agree": self.agree,
            "internal_message": self.internal_message,
            "spin_output": self.spin_output,
        }


def find_spin(spin_path=None):
    """Path of the SPIN executable (argument, $SCVER_SPIN, then PATH)."""
    candidate = spin_path or os.environ.get("SCVER_SPIN") or shutil.which("spin")
    if not candidate:
        return None
    if os.path.sep in candidate or os.path.isabs(candidate):
        return candidate if os.access(candidate, os.X_OK) else None
    return shutil.which(candidate)


def _run(cmd, cwd, timeout):
    try:
        res = subprocess.run(cmd, cwd=cwd, capture_output=True, text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise InfrastructureError(f"{cmd[0]} failed: {exc}") from None
    if res.returncode != 0 and cmd[0] != "./pan":
        raise InfrastructureError(f"{' '.join(cmd)} exited with {res.returncode}:\n{res.stderr}{res.stdout}")
    return res.stdout + res.stderr


def _pan_errors(text):
    m = re.search(r"errors:\s*(\d+)", text)
    if m is None:
        raise InfrastructureError("could not read a result from the SPIN verifier output")
    return int(m.group(1))


def spin_crosscheck(design, prop, spin_path=None, workdir=None, env=MOST_GENERAL,
                    config=None, timeout=600):
    """Verify ``prop`` with SPIN and compare with the internal verdict."""
    from .explorer import DELTA_OVERFLOW, TIME_BOUND, check_ltl, check_safety

    spin = find_spin(spin_path)
    if spin is None:
        raise InfrastructureError("SPIN executable not found (use --spin or SCVER_SPIN)")
    cc = shutil.which("cc") or shutil.which("gcc")
    if cc is None:
        raise InfrastructureError("no C compiler found for the SPIN verifier")
    config = config or KernelConfig()
    p = design.properties.get(prop)
    if p is None:
        raise PromelaError(f"unknown property {prop!r}")
    text = emit_promela(design, [prop], env, config)
    claim = ("inv_" if p.kind == "invariant" else "ltl_") + prop
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        with open(os.path.join(tmp, "model.pml"), "w", encoding="utf-8") as fh:
            fh.write(text)
        log = _run([spin, "-a", "model.pml"], tmp, timeout)
        log += _run([cc, "-O2", "-DVECTORSZ=4096", "-o", "pan", "pan.c"], tmp, timeout)
        out = _run(["./pan", "-a", "-E", "-m1000000", "-N", claim], tmp, timeout)
    if p.kind == "invariant":
        v = check_safety(design, env, [prop], config, deadlock=False)
    else:
        v = check_ltl(design, env, prop, config)
    spin_bad = _pan_errors(out) > 0
    agree = None if v.status in (TIME_BOUND, DELTA_OVERFLOW) else (v.violated == spin_bad)
    return CrosscheckReport(prop, v.status, spin_bad, agree, log + out, v.message)
