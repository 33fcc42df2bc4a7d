import json

import pytest

from scver import corpus
from scver.errors import ResourceLimit
from scver.explorer import (ASSERTION, DEADLOCK, INVARIANT, LTL, PASS, TIME_BOUND, Trace,
                            check_ltl, check_safety, enumerate_state_space, replay_verdict)
from scver.frontend import load
from scver.kernel import CLOSED_DEFAULT, MOST_GENERAL, Kernel, KernelConfig

from micro import MICRO
from oracles import ltl_status, reachable, safety_status

MICRO_CORPUS = ["writer_reader.scl", "mutex_flawed.scl", "mutex_fixed.scl", "lost_wakeup.scl"]


def _designs():
    for name in MICRO_CORPUS:
        yield name, load(corpus.read(name))
    for name, src in MICRO.items():
        yield name, load(src)


def _cases(kind):
    for name, d in _designs():
        props = [p for p in d.properties.values() if p.kind == kind]
        for env in (CLOSED_DEFAULT, MOST_GENERAL):
            if kind == "invariant":
                yield name, d, env, [p.name for p in props]
                for p in props:
                    yield name, d, env, [p.name]
            else:
                for p in props:
                    yield name, d, env, p.name


SAFETY = list(_cases("invariant"))
LIVENESS = list(_cases("ltl"))


@pytest.mark.parametrize("name, design, env, invs", SAFETY,
                         ids=[f"{c[0]}-{c[2]}-{'+'.join(c[3])}" for c in SAFETY])
def test_safety_agrees_with_oracle(name, design, env, invs):
    v = check_safety(design, env, invs)
    expected = safety_status(design, invs, env)
    assert v.status in expected
    if v.violated:
        assert replay_verdict(design, v)


@pytest.mark.parametrize("name, design, env, prop", LIVENESS,
                         ids=[f"{c[0]}-{c[2]}-{c[3]}" for c in LIVENESS])
def test_ltl_agrees_with_oracle(name, design, env, prop):
    v = check_ltl(design, env, prop)
    assert v.status == ltl_status(design, design.properties[prop].body, env)
    if v.violated:
        assert replay_verdict(design, v)


def test_assert_false_one_step():
    d = load(MICRO["assert_false"])
    v = check_safety(d)
    assert v.status == ASSERTION and len(v.trace) == 1


def test_mutex_pair():
    flawed = load(corpus.read("mutex_flawed.scl"))
    v = check_safety(flawed, invariants=["mutex"])
    assert v.status == INVARIANT and v.prop == "mutex"
    last = v.trace.states[-1]
    assert last.time == 0
    assert len(reachable(flawed)[1]) < 200
    fixed = load(corpus.read("mutex_fixed.scl"))
    v = check_safety(fixed, invariants=["mutex"])
    assert v.status == PASS
    assert v.stats["states_stored"] == len(reachable(fixed)[1])


def test_g_true_passes_without_search():
    d = load(corpus.read("mutex_flawed.scl"))
    from scver.props.ltl import Const, Globally
    v = check_ltl(d, formula=Globally(Const(True)))
    assert v.status == PASS and v.stats["states_stored"] == 0


def test_writer_reader_liveness():
    d = load(corpus.read("writer_reader.scl"))
    assert check_ltl(d, formula="seen_eventually").status == PASS


def test_lost_wakeup():
    d = load(corpus.read("lost_wakeup.scl"))
    v = check_safety(d)
    assert v.status == DEADLOCK and "c.consumer" in v.message
    assert check_safety(d, deadlock=False).status == PASS
    v = check_ltl(d, formula="delivered")
    assert v.status == LTL
    assert v.trace.states[-1] == v.trace.states[v.trace.loop_start]
    assert v.trace.choices[-1] == ("stutter",)


def test_enumerate_examples():
    s = enumerate_state_space(load(MICRO["skip"]))
    assert (s.states, s.transitions) == (3, 2)
    s = enumerate_state_space(load("module M { } instance m: M;"))
    assert (s.states, s.transitions) == (1, 0)


def test_horizon_verdict_and_monotonicity():
    src = """
    module M { signal s: int[0..9] = 0; var k: int[0..9] = 0;
      process p { while k < 9 { k = k + 1; s <= k; wait(time 2); } } }
    instance m: M;
    invariant low { m.s < 5 }
    invariant any { m.s >= 0 }
    """
    d = load(src)
    assert check_safety(d, invariants=["any"], config=KernelConfig(max_time=6)).status == TIME_BOUND
    assert check_safety(d, invariants=["low"], config=KernelConfig(max_time=6)).status == TIME_BOUND
    for t in (9, 10, 20, 40):
        assert check_safety(d, invariants=["low"], config=KernelConfig(max_time=t)).status == INVARIANT
    assert check_safety(d, invariants=["any"], config=KernelConfig(max_time=40)).status == PASS


def test_state_cap_is_explicit():
    d = load(MICRO["counter"])
    with pytest.raises(ResourceLimit):
        check_safety(d, state_cap=3)
    with pytest.raises(ResourceLimit):
        enumerate_state_space(d, state_cap=3)


def test_verdicts_deterministic_and_json_round_trip():
    d = load(corpus.read("mutex_flawed.scl"))
    k = Kernel(d)
    a = check_safety(d, invariants=["mutex"])
    b = check_safety(d, invariants=["mutex"])
    assert a.dumps(k) == b.dumps(k)
    data = json.loads(a.dumps(k))
    assert data["steps"] if "steps" in data else data["trace"]["steps"][0]["choice"] == {"init": True}
    t = Trace.from_json(k, data["trace"])
    assert t.states == a.trace.states and t.choices == a.trace.choices
    a.trace = t
    assert replay_verdict(d, a, data["trace"])
