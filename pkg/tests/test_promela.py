import itertools
import os
import re

import pytest

from scver import corpus
from scver.errors import InfrastructureError, PromelaError
from scver.frontend import load
from scver.kernel import CLOSED_DEFAULT, KernelConfig
from scver.promela import emit_promela, find_spin, mangle, mangle_part, promela_type, spin_crosscheck
from scver.frontend.types import BOOL, EnumType, IntType

SIGNAL_ONLY = """
module M { signal s: bool = false; process p { s <= true; } }
instance a: M;
"""

ODD_NAMES = """
module M {
    out s_cur: bool;
    signal s: bool = false;
    var a__b: int[0..3] = 0;
    process p_st { s <= true; s_cur <= true; a__b = 1; }
}
instance a: M;
instance a_b: M;
"""


def emitted(name):
    return emit_promela(load(corpus.read(name)))


def test_signal_declaration_mapping():
    text = emit_promela(load(SIGNAL_ONLY))
    assert "bool a__s_cur = false; bool a__s_next = false; bool a__s_wr = false;" in text


def test_invariant_block():
    text = emitted("mutex_flawed.scl")
    assert "ltl inv_mutex { [] (!(a__in_cs && b__in_cs)) }" in text


def test_ltl_block():
    text = emitted("ecu_system.scl")
    assert "ltl ltl_sw_served { [] (!sw__req_cur || <> hw__grant_cur) }" in text


@pytest.mark.parametrize("name", corpus.names())
def test_golden_files(name):
    assert emitted(name) == corpus.read(name[:-4] + ".pml")


@pytest.mark.parametrize("name", corpus.names())
def test_emission_deterministic(name):
    assert emitted(name) == emit_promela(load(corpus.read(name)))


def test_header_records_source_hash():
    a = emitted("versioned_v1.scl").splitlines()[1]
    b = emitted("versioned_v2.scl").splitlines()[1]
    assert a.startswith("/* source sha256 ") and a != b


def test_mangle_examples():
    assert mangle("a.s") == "a__s"
    assert mangle("a.in_cs") == "a__in_cs"
    assert mangle("a_b.c") != mangle("a.b_c")
    assert mangle("a__b.c") != mangle("a.b__c")
    assert mangle("a.s_cur") != mangle("a.s") + "_cur"


def _names():
    parts = ["a", "b", "a_b", "b_c", "a__b", "_a", "a_", "s_cur", "s", "cur", "x_0", "_0", "__"]
    for n in (1, 2, 3):
        for combo in itertools.product(parts, repeat=n):
            yield ".".join(combo)


def test_mangle_injective_on_adversarial_names():
    seen = {}
    suffixes = ["", "_cur", "_next", "_wr", "_pend", "_st", "_arg", "_loc", "_nx"]
    for name in _names():
        for suf in suffixes:
            m = mangle(name) + suf
            assert m not in seen, (name, suf, seen.get(m))
            seen[m] = (name, suf)
            assert re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", m)


def test_mangle_injective_on_corpus():
    for name in corpus.names():
        d = load(corpus.read(name))
        names = [x.name for x in list(d.signals) + list(d.vars) + list(d.inputs) + list(d.events)]
        names += [p.name for p in d.processes]
        assert len({mangle(n) for n in names}) == len(names)


def test_mangle_part_keeps_plain():
    assert mangle_part("grant") == "grant"
    assert mangle_part("fw_grant") == "fw_grant"
    assert mangle_part("x_cur") == "_x_0cur"


def test_odd_names_emit_distinct_globals():
    text = emit_promela(load(ODD_NAMES))
    decls = re.findall(r"^(?:bool|byte|short|int) (\w+)", text, re.M)
    assert len(decls) == len(set(decls))
    assert "a__s_cur" in text and "a___s_0cur_cur" in text


def test_type_widths():
    assert promela_type(BOOL) == "bool"
    assert promela_type(IntType(0, 255)) == "byte"
    assert promela_type(IntType(-1, 5)) == "short"
    assert promela_type(IntType(0, 40000)) == "int"
    assert promela_type(EnumType(("x", "y"))) == "byte"
    with pytest.raises(PromelaError):
        promela_type(IntType(0, 1 << 40))


def test_block_structure_balanced():
    for name in corpus.names():
        text = emitted(name)
        body = re.sub(r"/\*.*?\*/", "", text, flags=re.S)
        assert body.count("{") == body.count("}")
        assert len(re.findall(r"\bif\b", body)) == len(re.findall(r"\bfi\b", body))
        assert len(re.findall(r"\bdo\b", body)) == len(re.findall(r"\bod\b", body))


def test_horizon_and_env_compiled_in():
    d = load(corpus.read("ecu_firmware.scl"))
    text = emit_promela(d, config=KernelConfig(max_time=7, max_delta=5))
    assert "#define MAX_TIME 7" in text and "#define MAX_DELTA 5" in text
    closed = emit_promela(d, env=CLOSED_DEFAULT)
    assert "fw__granted_nx = false;" in closed
    assert ":: fw__granted_nx = true" not in closed


def test_property_selection():
    d = load(corpus.read("ecu_system.scl"))
    text = emit_promela(d, ["exclusive"])
    assert "inv_exclusive" in text and "ltl_sw_served" not in text
    with pytest.raises(PromelaError):
        emit_promela(d, ["nope"])


def test_missing_spin_is_infrastructure_error(tmp_path):
    d = load(corpus.read("mutex_flawed.scl"))
    with pytest.raises(InfrastructureError):
        spin_crosscheck(d, "mutex", spin_path=str(tmp_path / "no-spin"))


SPIN = find_spin()


@pytest.mark.skipif(SPIN is None, reason="SPIN not installed (set SCVER_SPIN)")
@pytest.mark.parametrize("name", corpus.names())
def test_spin_agrees(name, tmp_path):
    d = load(corpus.read(name))
    for prop in sorted(d.properties):
        rep = spin_crosscheck(d, prop, SPIN, workdir=str(tmp_path))
        assert rep.agree is not False, (prop, rep.internal, rep.spin_output[-2000:])
