"""``scver`` command line.

Exit codes: 0 pass/success, 1 property violated, 2 bound or resource
limit, 3 usage/parse/type error, 4 infrastructure error.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import corpus, schemas
from .errors import (ConcretizationError, HiddenSymbolError, HorizonError, InfrastructureError,
                     PromelaError, ResourceLimit, SourceError, StaleStubError)
from .explorer import (DEFAULT_STATE_CAP, DELTA_OVERFLOW, TIME_BOUND, VIOLATIONS,
                       check_ltl, check_safety)
from .frontend import load
from .integration import (DEFAULT_H, DEFAULT_K, InterfaceStub, check_consistency,
                          compose_and_verify, interface_alphabet, learn_stub, replay_on_concrete)
from .kernel import CLOSED_DEFAULT, ENV_POLICIES, MOST_GENERAL, Kernel, KernelConfig

EXIT_OK, EXIT_VIOLATION, EXIT_BOUND, EXIT_USAGE, EXIT_INFRA = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# input files

def _resolve(path):
    """``path`` itself, or the packaged corpus file of the same name."""
    p = Path(path)
    if p.exists():
        return p
    packaged = corpus.path(p.name)
    if packaged.is_file():
        return packaged
    raise UsageError(f"no such file: {path}")


def _read(path):
    return _resolve(path).read_text(encoding="utf-8")


def _read_json(path):
    text = _read(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None


def _design(args):
    return load(_read(args.model))


def _config(args):
    try:
        return KernelConfig(max_time=args.max_time, max_delta=args.max_delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _echo_config(args):
    return {"max_time": args.max_time, "max_delta": args.max_delta, "state_cap": args.state_cap}


# output

def _dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _emit(args, doc, schema, plain=None):
    schemas.validate(doc, schema)
    if args.format == "plain":
        sys.stdout.write(plain(doc) if plain else _plain_generic(doc))
    else:
        sys.stdout.write(_dumps(doc))


def _plain_generic(doc, prefix=""):
    lines = []
    for k in sorted(doc):
        v = doc[k]
        if isinstance(v, dict):
            lines.append(_plain_generic(v, f"{prefix}{k}."))
        elif isinstance(v, list):
            lines.append(f"{prefix}{k}\t{len(v)} items\n")
        else:
            lines.append(f"{prefix}{k}\t{_cell(v)}\n")
    return "".join(lines)


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


def _plain_steps(steps, loop_start=None):
    """Tab-separated table of a run, one row per step."""
    if not steps:
        return ""
    names = sorted(steps[0]["observations"])
    out = ["\t".join(["step", "time", "delta", "phase", "choice"] + names) + "\n"]
    for k, s in enumerate(steps):
        choice = ",".join(f"{a}={_cell(b)}" for a, b in sorted(s["choice"].items()))
        row = [str(k), str(s["time"]), str(s["delta"]), s["phase"], choice]
        row += [_cell(s["observations"][n]) for n in names]
        out.append("\t".join(row) + "\n")
    if loop_start is not None:
        out.append(f"loop_start\t{loop_start}\n")
    return "".join(out)


def _plain_verdict(v):
    out = [f"property\t{_cell(v['property'])}\n", f"status\t{v['status']}\n"]
    if v["message"]:
        out.append(f"message\t{v['message']}\n")
    if v["advisory"]:
        out.append("advisory\ttrue\n")
    for k in sorted(v["stats"]):
        out.append(f"stats.{k}\t{v['stats'][k]}\n")
    if "trace" in v:
        out.append(_plain_steps(v["trace"]["steps"], v["trace"].get("loop_start")))
    for f in v.get("figures", []):
        out.append(f"figure\t{f}\n")
    return "".join(out)


def _figure_path(args, stem):
    os.makedirs(args.plot, exist_ok=True)
    return os.path.join(args.plot, stem + ".png")


def _verdict_figure(args, vdoc, stem):
    from . import report

    path = _figure_path(args, stem)
    title = f"{vdoc['property'] or 'safety'}: {vdoc['status']}"
    if "trace" in vdoc:
        report.waveform(vdoc["trace"]["steps"], path, title, vdoc["trace"].get("loop_start"))
    else:
        report.stats_bars(vdoc["stats"], path, title)
    return path


def _verdict_code(statuses):
    if any(s in VIOLATIONS for s in statuses):
        return EXIT_VIOLATION
    if any(s in (TIME_BOUND, DELTA_OVERFLOW) for s in statuses):
        return EXIT_BOUND
    return EXIT_OK


def _stem(args):
    return Path(args.model).stem


# subcommands

def cmd_check(args):
    design = _design(args)
    config = _config(args)
    names = args.prop or sorted(design.properties)
    for n in names:
        if n not in design.properties:
            raise UsageError(f"unknown property {n!r}; known: {', '.join(sorted(design.properties))}")
    invariants = [n for n in names if design.properties[n].kind == "invariant"]
    ltls = [n for n in names if design.properties[n].kind == "ltl"]
    kernel = Kernel(design, args.env, config)
    verdicts = []
    if invariants or not ltls:
        verdicts.append(check_safety(design, args.env, invariants, config,
                                     deadlock=not args.no_deadlock, state_cap=args.state_cap,
                                     kernel=kernel))
    for n in ltls:
        verdicts.append(check_ltl(design, args.env, n, config, state_cap=args.state_cap,
                                  kernel=kernel))
    docs = []
    for v in verdicts:
        d = v.to_json(kernel)
        d["config"] = _echo_config(args)
        docs.append(d)
    if args.plot:
        for d in docs:
            tag = (d["property"] or "safety").replace(",", "+")
            d["figures"] = [_verdict_figure(args, d, f"{_stem(args)}_{tag}")]
    if len(docs) == 1:
        _emit(args, docs[0], "verdict", _plain_verdict)
    else:
        _emit(args, {"verdicts": docs}, "check",
              lambda doc: "\n".join(_plain_verdict(d) for d in doc["verdicts"]))
    return _verdict_code([v.status for v in verdicts])


def cmd_emit_promela(args):
    from .promela import emit_promela

    design = _design(args)
    text = emit_promela(design, args.prop or None, args.env, _config(args))
    if not args.output:
        sys.stdout.write(text)
        return EXIT_OK
    import hashlib

    Path(args.output).write_text(text, encoding="utf-8")
    doc = {
        "output": args.output,
        "sha256": hashlib.sha256(text.encode()).hexdigest(),
        "lines": text.count("\n"),
        "properties": list(args.prop or sorted(design.properties)),
        "env": args.env,
        "config": _echo_config(args),
    }
    _emit(args, doc, "promela")
    return EXIT_OK


def cmd_crosscheck(args):
    from .promela import find_spin, spin_crosscheck

    design = _design(args)
    spin = find_spin(args.spin)
    if spin is None:
        raise InfrastructureError("SPIN executable not found (use --spin or SCVER_SPIN)")
    results = []
    for name in args.prop or sorted(design.properties):
        r = spin_crosscheck(design, name, spin, args.workdir, args.env, _config(args))
        results.append(r.to_json())
    _emit(args, {"spin": spin, "results": results}, "crosscheck")
    if any(r["agree"] is False for r in results):
        return EXIT_VIOLATION
    if any(r["agree"] is None for r in results):
        return EXIT_BOUND
    return EXIT_OK


def _instance(design, name):
    if name not in dict(design.instances):
        known = ", ".join(n for n, _ in design.instances)
        raise UsageError(f"unknown instance {name!r}; known: {known}")
    return name


def cmd_stub(args):
    design = _design(args)
    inst = _instance(design, args.instance)
    stub = learn_stub(design, inst, args.k, args.h, _config(args))
    doc = stub.to_json()
    schemas.validate(doc, "stub")
    if args.output:
        Path(args.output).write_text(stub.dumps(), encoding="utf-8")
        sys.stdout.write(f"{args.output}\t{len(stub.states)} states\t{len(stub.transitions)} transitions\n")
    elif args.format == "plain":
        sys.stdout.write(_plain_generic({k: doc[k] for k in ("component", "module", "k", "h")}))
    else:
        sys.stdout.write(stub.dumps())
    return EXIT_OK


def _load_stub(path):
    try:
        return InterfaceStub.from_json(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, StaleStubError):
            raise
        raise UsageError(f"{path}: not a valid stub: {exc}") from None


def cmd_consistency(args):
    design = _design(args)
    inst = _instance(design, args.instance)
    stub = _load_stub(args.stub)
    rep = check_consistency(design, inst, stub, args.k, _config(args))
    doc = {"component": inst, "k": args.k, "config": _echo_config(args)}
    doc.update(rep.to_json(interface_alphabet(design, inst)))
    _emit(args, doc, "consistency")
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_compose(args):
    design = _design(args)
    config = _config(args)
    stubs, sources = {}, {}
    for item in args.stub:
        if "=" not in item:
            raise UsageError(f"--stub expects INSTANCE=FILE, got {item!r}")
        inst, path = item.split("=", 1)
        stubs[_instance(design, inst)] = _load_stub(path)
        sources[inst] = path
    if args.prop not in {p.name for p in design.ast.properties}:
        raise UsageError(f"unknown property {args.prop!r}")
    kw = {"state_cap": args.state_cap}
    if design.properties[args.prop].kind == "invariant":
        kw["deadlock"] = not args.no_deadlock
    composed, v = compose_and_verify(design, stubs, args.prop, args.env, config, **kw)
    vdoc = v.to_json(Kernel(composed, args.env, config))
    vdoc["config"] = _echo_config(args)
    doc = {"stubs": sources, "verdict": vdoc}
    status = v.status
    if v.violated and v.trace is not None:
        r = replay_on_concrete(design, composed, v, config)
        doc["replay"] = r.to_json(Kernel(design, args.env, config))
        if r.status == "Spurious":
            status = "Spurious"
    if args.plot:
        doc["figures"] = [_verdict_figure(args, vdoc, f"{_stem(args)}_{args.prop}_composed")]
    _emit(args, doc, "compose", lambda d: _plain_verdict(d["verdict"])
          + (f"replay\t{d['replay']['status']}\n" if "replay" in d else ""))
    if status == "Spurious":
        return EXIT_OK
    return _verdict_code([status])


def cmd_testgen(args):
    from .testgen import enumerate_goals, generate_tests

    design = _design(args)
    criteria = tuple(args.criteria.split(","))
    for c in criteria:
        if c not in ("statements", "toggles"):
            raise UsageError(f"unknown coverage criterion {c!r}")
    goals = enumerate_goals(design, criteria)
    suite = generate_tests(design, args.env, goals, _config(args))
    doc = suite.to_json()
    schemas.validate(doc, "tests")
    text = suite.dumps()
    figures = []
    if args.plot:
        from . import report

        figures.append(report.coverage_bars(doc, _figure_path(args, f"{_stem(args)}_coverage"),
                                            f"{_stem(args)}: {len(doc['tests'])}/{doc['goals']} goals"))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        sys.stdout.write(f"{args.output}\t{len(doc['tests'])} tests\t{len(doc['uncovered'])} uncovered\n")
    elif args.format == "plain":
        for t in doc["tests"]:
            sys.stdout.write(f"{t['goal']}\t{t['length']}\n")
        for u in doc["uncovered"]:
            sys.stdout.write(f"{u['goal']}\tuncovered\t{u['reason']}\n")
    else:
        sys.stdout.write(text)
    for f in figures:
        sys.stderr.write(f"figure {f}\n")
    return EXIT_OK


def cmd_concretize(args):
    from .testgen import concretize

    suite = _read_json(args.tests)
    mapping = _read_json(args.map)
    try:
        schemas.validate(suite, "tests")
        schemas.validate(mapping, "map")
    except Exception as exc:  # jsonschema.ValidationError
        raise UsageError(f"invalid input: {getattr(exc, 'message', exc)}") from None
    stim, expect = concretize(suite, mapping)
    Path(args.stimulus).write_text(stim, encoding="utf-8", newline="")
    Path(args.expectations).write_text(expect, encoding="utf-8", newline="")
    doc = {
        "stimulus": args.stimulus,
        "expectations": args.expectations,
        "stimulus_rows": stim.count("\n"),
        "expectation_rows": expect.count("\n"),
        "tests": len(suite["tests"]),
    }
    _emit(args, doc, "concretize")
    return EXIT_OK


def simulate(design, config, env=CLOSED_DEFAULT):
    """One maximal run taking the first enabled choice at every step.

    Returns (status, message, states, choices).
    """
    from .explorer import Trace

    kernel = Kernel(design, env, config)
    state = kernel.initial_states()[0]
    states, choices = [state], []
    status, message = "Terminated", ""
    while True:
        if state.error is not None:
            status, message = "AssertionViolation", state.error
            break
        if kernel.is_terminal(state):
            if kernel.is_deadlock(state):
                status, message = "Deadlock", "terminal state with waiting processes"
            break
        try:
            succ = kernel.successors(state)
        except HorizonError as exc:
            status, message = exc.status, str(exc)
            break
        if not succ:
            break
        choice, state = succ[0]
        choices.append(choice)
        states.append(state)
    return status, message, Trace(states, choices), kernel


def cmd_simulate(args):
    design = _design(args)
    status, message, trace, kernel = simulate(design, _config(args), args.env or CLOSED_DEFAULT)
    doc = {"env": kernel.env, "config": _echo_config(args), "status": status,
           "steps": trace.to_json(kernel)["steps"]}
    if message:
        doc["message"] = message
    if args.plot:
        from . import report

        path = _figure_path(args, f"{_stem(args)}_simulate")
        doc["figures"] = [report.waveform(doc["steps"], path, f"{_stem(args)}: {status}")]
    _emit(args, doc, "simulate", lambda d: f"status\t{d['status']}\n" + _plain_steps(d["steps"]))
    if status in ("Deadlock", "AssertionViolation"):
        return EXIT_VIOLATION
    if status in (TIME_BOUND, DELTA_OVERFLOW):
        return EXIT_BOUND
    return EXIT_OK


# argument parsing

def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "plain"), default="json")
    common.add_argument("--max-time", type=_positive, default=100)
    common.add_argument("--max-delta", type=_positive, default=64)
    common.add_argument("--state-cap", type=_positive, default=DEFAULT_STATE_CAP)
    common.add_argument("--plot", metavar="DIR", help="write figures (PNG) into DIR")

    def env_flag(p, default):
        p.add_argument("--env", choices=ENV_POLICIES, default=default)

    parser = _Parser(prog="scver", description="Verify and test SCL component models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="check invariants and LTL properties")
    p.add_argument("model")
    p.add_argument("--prop", action="append", help="property name (repeatable; default all)")
    p.add_argument("--no-deadlock", action="store_true", help="do not report deadlocks")
    env_flag(p, MOST_GENERAL)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("emit-promela", parents=[common], help="translate a model to Promela")
    p.add_argument("model")
    p.add_argument("--prop", action="append")
    p.add_argument("-o", "--output")
    env_flag(p, MOST_GENERAL)
    p.set_defaults(func=cmd_emit_promela)

    p = sub.add_parser("crosscheck", parents=[common], help="compare verdicts with SPIN")
    p.add_argument("model")
    p.add_argument("--prop", action="append")
    p.add_argument("--spin", help="SPIN executable (default $SCVER_SPIN, then PATH)")
    p.add_argument("--workdir", help="directory for SPIN scratch files")
    env_flag(p, MOST_GENERAL)
    p.set_defaults(func=cmd_crosscheck)

    p = sub.add_parser("stub", parents=[common], help="learn an interface stub of an instance")
    p.add_argument("model")
    p.add_argument("--instance", required=True)
    p.add_argument("-k", type=_positive, default=DEFAULT_K)
    p.add_argument("--h", type=_positive, default=DEFAULT_H)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stub)

    p = sub.add_parser("consistency", parents=[common], help="check a stub against its component")
    p.add_argument("model")
    p.add_argument("--instance", required=True)
    p.add_argument("--stub", required=True)
    p.add_argument("-k", type=_positive, default=DEFAULT_K)
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("compose", parents=[common], help="verify with instances replaced by stubs")
    p.add_argument("model")
    p.add_argument("--stub", action="append", required=True, metavar="INSTANCE=FILE")
    p.add_argument("--prop", required=True)
    p.add_argument("--no-deadlock", action="store_true")
    env_flag(p, MOST_GENERAL)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("testgen", parents=[common], help="generate abstract tests")
    p.add_argument("model")
    p.add_argument("--criteria", default="statements,toggles")
    p.add_argument("-o", "--output")
    env_flag(p, MOST_GENERAL)
    p.set_defaults(func=cmd_testgen)

    p = sub.add_parser("concretize", parents=[common], help="map abstract tests to CSV files")
    p.add_argument("tests")
    p.add_argument("--map", required=True)
    p.add_argument("--stimulus", default="stimulus.csv")
    p.add_argument("--expectations", default="expectations.csv")
    p.set_defaults(func=cmd_concretize)

    p = sub.add_parser("simulate", parents=[common], help="one ClosedDefault run")
    p.add_argument("model")
    env_flag(p, CLOSED_DEFAULT)
    p.set_defaults(func=cmd_simulate)
    return parser


def _error(args, kind, message, code, pos=None):
    sys.stderr.write(f"scver: {kind}: {message}\n")
    doc = {"status": "error", "kind": kind, "message": message, "exit_code": code}
    if pos is not None:
        doc["position"] = list(pos)
    schemas.validate(doc, "error")
    if getattr(args, "format", "json") == "json":
        sys.stdout.write(_dumps(doc))
    return code


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SourceError as exc:
        return _error(args, type(exc).__name__, str(exc), EXIT_USAGE, exc.pos)
    except (UsageError, ConcretizationError, StaleStubError, HiddenSymbolError, PromelaError) as exc:
        return _error(args, type(exc).__name__, str(exc), EXIT_USAGE)
    except (ResourceLimit, HorizonError) as exc:
        return _error(args, type(exc).__name__, str(exc), EXIT_BOUND)
    except InfrastructureError as exc:
        return _error(args, type(exc).__name__, str(exc), EXIT_INFRA)
    except OSError as exc:
        return _error(args, type(exc).__name__, f"{exc.strerror}: {exc.filename}", EXIT_INFRA)


def main():
    sys.exit(run())
