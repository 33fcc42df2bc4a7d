import json

import pytest

from scver import corpus
from scver.errors import HiddenSymbolError, StaleStubError
from scver.explorer import INVARIANT, LTL, PASS, check_safety, enumerate_state_space
from scver.frontend import load
from scver.integration import (InterfaceStub, StubRuntime, check_consistency, compose,
                               compose_and_verify, interface_alphabet, language_included,
                               learn_stub, property_for, replay_on_concrete)
from scver.kernel import MOST_GENERAL, KernelConfig


def design(name):
    return load(corpus.read(name))


def fixture(name):
    return InterfaceStub.loads(corpus.read(name))


COMPONENTS = [
    ("writer_reader.scl", "w"),
    ("writer_reader.scl", "r"),
    ("mutex_flawed.scl", "a"),
    ("mutex_fixed.scl", "a"),
    ("mutex_fixed.scl", "b"),
    ("lost_wakeup.scl", "c"),
    ("ecu_memory.scl", "hw"),
    ("ecu_software.scl", "sw"),
    ("ecu_software.scl", "mem"),
    ("ecu_firmware.scl", "fw"),
    ("ecu_system.scl", "sw"),
    ("ecu_system.scl", "hw"),
    ("ecu_system.scl", "fw"),
    ("versioned_v1.scl", "seq"),
    ("versioned_v2.scl", "seq"),
]


CONST_FALSE = """
module Quiet { out q: bool; process p { q <= false; } }
instance z: Quiet;
"""

LONER = """
module Writer { out s: bool; process p { s <= true; wait(time 1); } }
module Reader { in s: bool; signal seen: bool = false; process p { wait(change s); seen <= true; } }
module Busy { var n: int[0..2] = 0; process p { while n < 2 { n = n + 1; wait(time 1); } } }
instance w: Writer;
instance r: Reader;
instance b: Busy;
bind w.s -> r.s;
invariant seen_implies_s { !r.seen || w.s }
"""

WITHOUT_LONER = """
module Writer { out s: bool; process p { s <= true; wait(time 1); } }
module Reader { in s: bool; signal seen: bool = false; process p { wait(change s); seen <= true; } }
instance w: Writer;
instance r: Reader;
bind w.s -> r.s;
invariant seen_implies_s { !r.seen || w.s }
"""


def test_component_names_exist():
    for src, inst in COMPONENTS:
        assert inst in dict(design(src).instances), (src, inst)


# learning

def test_writer_stub_by_hand():
    # the writer's output starts false and rises once; with h=1 the windows
    # are the two single letters and the only moves are false->true, true->true
    st = learn_stub(design("writer_reader.scl"), "w", h=1)
    a = st.alphabet
    assert [[a.render(l) for l in g] for g in st.states] == [[[False]], [[True]]]
    assert st.initial == [0]
    assert [(s, a.render(l), d) for s, l, d in st.transitions] == [(0, [True], 1), (1, [True], 1)]


def test_constant_component_single_state():
    st = learn_stub(load(CONST_FALSE), "z", h=1)
    assert len(st.states) == 1
    assert len(st.transitions) == 1
    s, letter, d = st.transitions[0]
    assert s == d == 0 and st.alphabet.render(letter) == [False]


def test_stub_json_roundtrip_and_determinism():
    d = design("ecu_system.scl")
    a = learn_stub(d, "hw")
    b = learn_stub(design("ecu_system.scl"), "hw")
    assert a.dumps() == b.dumps()
    again = InterfaceStub.loads(a.dumps())
    assert again.dumps() == a.dumps()
    data = json.loads(a.dumps())
    assert data["format_version"] == 1 and data["component"] == "hw" and data["k"] == 8


def test_shipped_learned_fixtures_are_current():
    for name, src, inst in [("stub_writer.json", "writer_reader.scl", "w"),
                            ("stub_hw.json", "ecu_system.scl", "hw"),
                            ("stub_versioned_v1.json", "versioned_v1.scl", "seq")]:
        assert learn_stub(design(src), inst).dumps() == corpus.read(name), name


@pytest.mark.parametrize("src,inst", [("writer_reader.scl", "w"), ("ecu_system.scl", "sw"),
                                      ("ecu_system.scl", "hw"), ("versioned_v2.scl", "seq")])
def test_longer_history_is_tighter(src, inst):
    d = design(src)
    h1 = learn_stub(d, inst, h=1)
    h2 = learn_stub(d, inst, h=2)
    h3 = learn_stub(d, inst, h=3)
    assert language_included(h2, h1, 8) is None
    assert language_included(h3, h2, 8) is None


def test_stub_accepts_its_observations():
    st = fixture("stub_versioned_v1.json")
    rt = StubRuntime(st)
    word = [st.alphabet.decode([v]) for v in (0, 1, 1, 2, 2, 2)]
    assert rt.accepts(word)
    assert not rt.accepts(word[:3] + [st.alphabet.decode([3])])


def test_tampered_fingerprint_rejected():
    data = json.loads(corpus.read("stub_writer.json"))
    data["alphabet"]["ports"][0]["name"] = "t"
    with pytest.raises(StaleStubError):
        InterfaceStub.from_json(data)


# consistency

@pytest.mark.parametrize("src,inst", COMPONENTS)
def test_learned_stub_consistent(src, inst):
    d = design(src)
    rep = check_consistency(d, inst, learn_stub(d, inst, k=8), k=8)
    assert rep.ok, rep.witness


@pytest.mark.parametrize("src,inst,name", [
    ("writer_reader.scl", "w", "stub_writer_deleted.json"),
    ("ecu_system.scl", "hw", "stub_hw_deleted.json"),
    ("versioned_v2.scl", "seq", "stub_versioned_v1.json"),
])
def test_corrupted_stub_has_short_witness(src, inst, name):
    st = fixture(name)
    rep = check_consistency(design(src), inst, st, k=8)
    assert not rep.ok
    assert 1 <= len(rep.witness) <= 8
    assert not StubRuntime(st).accepts(rep.witness)
    assert StubRuntime(st).accepts(rep.witness[:-1])


def test_new_version_witness_shows_new_value():
    st = fixture("stub_versioned_v1.json")
    rep = check_consistency(design("versioned_v2.scl"), "seq", st, k=8)
    assert st.alphabet.render(rep.witness[-1]) == [3]
    # the older version is still fine
    assert check_consistency(design("versioned_v1.scl"), "seq", st, k=8).ok


def test_deleted_writer_witness_is_shortest():
    # the deleted move is the writer holding true after its first rise:
    # false, true, true and one more true
    st = fixture("stub_writer_deleted.json")
    rep = check_consistency(design("writer_reader.scl"), "w", st, k=8)
    assert [st.alphabet.render(l) for l in rep.witness] == [[False], [True], [True], [True]]


def test_short_bound_may_miss_corruption():
    st = fixture("stub_writer_deleted.json")
    assert check_consistency(design("writer_reader.scl"), "w", st, k=3).ok


def test_stale_stub_against_changed_interface():
    other = load(corpus.read("writer_reader.scl").replace("s: bool", "s: int[0..1]")
                 .replace("s <= true", "s <= 1").replace("|| w.s", "|| w.s == 1"))
    with pytest.raises(StaleStubError):
        check_consistency(other, "w", fixture("stub_writer.json"))
    with pytest.raises(StaleStubError):
        compose(other, {"w": fixture("stub_writer.json")})


# composition

def test_alphabet_fingerprint_ignores_internals():
    a = interface_alphabet(design("ecu_memory.scl"), "hw")
    b = interface_alphabet(design("ecu_system.scl"), "hw")
    assert a.fingerprint == b.fingerprint
    assert [p.name for p in a.ports] == ["req", "fw_req", "grant", "fw_grant"]


def test_hidden_internal_in_property():
    d = design("ecu_system.scl")
    composed = compose(d, {"hw": learn_stub(d, "hw")})
    assert "no_double" not in composed.properties
    assert "exclusive" in composed.properties
    with pytest.raises(HiddenSymbolError) as err:
        property_for(composed, d, "no_double")
    assert "hw.double_grant" in str(err.value)


def test_zero_port_stub_is_removal():
    d = load(LONER)
    stubbed = compose(d, {"b": learn_stub(d, "b")})
    plain = load(WITHOUT_LONER)
    cfg = KernelConfig(max_time=4)
    a = enumerate_state_space(stubbed, MOST_GENERAL, cfg)
    b = enumerate_state_space(plain, MOST_GENERAL, cfg)
    assert (a.states, a.transitions) == (b.states, b.transitions)
    va = check_safety(stubbed, MOST_GENERAL, ["seen_implies_s"], cfg)
    vb = check_safety(plain, MOST_GENERAL, ["seen_implies_s"], cfg)
    assert va.status == vb.status == PASS


def test_stubbed_writer_keeps_safety():
    d = design("writer_reader.scl")
    _, v = compose_and_verify(d, {"w": fixture("stub_writer.json")}, "seen_implies_s")
    assert v.status == PASS


def test_stubbed_violation_survives():
    d = design("writer_reader.scl")
    _, v = compose_and_verify(d, {"w": fixture("stub_writer.json")}, "not_yet_seen")
    assert v.status == INVARIANT
    assert check_safety(d, MOST_GENERAL, ["not_yet_seen"]).status == INVARIANT


def test_liveness_with_stubs_is_advisory():
    d = design("ecu_software.scl")
    _, v = compose_and_verify(d, {"mem": learn_stub(d, "mem")}, "served")
    assert v.status == PASS and v.advisory
    _, v = compose_and_verify(d, {}, "served")
    assert v.status == PASS and not v.advisory


# replay

def test_relaxed_stub_gives_spurious():
    d = design("writer_reader.scl")
    composed, v = compose_and_verify(d, {"w": fixture("stub_writer_relaxed.json")}, "seen_implies_s")
    assert v.status == INVARIANT
    r = replay_on_concrete(d, composed, v)
    assert r.status == "Spurious"
    assert r.letter == "w(s=false)"
    assert r.expected == {"w.s": False, "r.seen": True}
    assert 0 <= r.divergence <= len(v.trace)


def test_ecu_conflict_confirmed():
    d = design("ecu_system.scl")
    composed, v = compose_and_verify(d, {"hw": fixture("stub_hw.json")}, "sw_served")
    assert v.status == LTL
    r = replay_on_concrete(d, composed, v)
    assert r.status == "Confirmed"
    assert r.trace is not None and r.trace.loop_start is not None


def test_replay_result_json():
    d = design("writer_reader.scl")
    composed, v = compose_and_verify(d, {"w": fixture("stub_writer_relaxed.json")}, "seen_implies_s")
    data = replay_on_concrete(d, composed, v).to_json()
    assert data["status"] == "Spurious" and data["divergence"] >= 0


def test_ecu_software_stubbed_no_double_grant():
    d = design("ecu_system.scl")
    _, v = compose_and_verify(d, {"sw": learn_stub(d, "sw")}, "no_double")
    assert v.status == PASS
    _, v = compose_and_verify(d, {}, "no_double")
    assert v.status == PASS


def test_unstubbed_violation_confirmed_trivially():
    d = design("writer_reader.scl")
    composed, v = compose_and_verify(d, {}, "not_yet_seen")
    r = replay_on_concrete(d, composed, v)
    assert r.status == "Confirmed"
