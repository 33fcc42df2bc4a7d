import json

import pytest

from scver import corpus
from scver.errors import ConcretizationError, HorizonError
from scver.frontend import load
from scver.kernel import MOST_GENERAL, Kernel, KernelConfig
from scver.testgen import (UNREACHABLE, concretize, covers, default_map, enumerate_goals,
                           generate_tests, replay_test, reuse_gap)

from oracles import shortest_depths

FOUR_LOCS = """
module M { signal s: bool = false; process p { s <= true; skip; skip; } }
instance m: M;
"""

DEAD = """
module M {
  signal s: bool = false;
  process p { if false { s <= true; } skip; }
}
instance m: M;
"""

REQ_GRANT = """
module M {
  in req: bool;
  out grant: bool;
  process p { while !req { wait(change req); } grant <= true; wait(time 1); }
}
instance m: M;
"""


def design(name):
    return load(corpus.read(name))


def suite_json(name):
    return generate_tests(design(name)).to_json()


def test_goal_counts():
    d = load(FOUR_LOCS)
    assert len(d.processes[0].nodes) == 4
    assert [g.id for g in enumerate_goals(d, ["statements"])] == [
        "stmt:m.p:0", "stmt:m.p:1", "stmt:m.p:2", "stmt:m.p:3"]
    assert [g.id for g in enumerate_goals(d, ["toggles"])] == [
        "toggle:m.s:false->true", "toggle:m.s:true->false"]
    assert enumerate_goals(d, []) == []
    with pytest.raises(ValueError):
        enumerate_goals(d, ["mcdc"])


def test_goal_ids_unique_and_ordered():
    for name in corpus.names():
        ids = [g.id for g in enumerate_goals(design(name))]
        assert len(ids) == len(set(ids))
        assert ids == [g.id for g in enumerate_goals(design(name))]


def test_entry_goals_need_one_run_step():
    for name in ["mutex_flawed.scl", "ecu_system.scl", "writer_reader.scl"]:
        d = design(name)
        s = generate_tests(d)
        by_goal = {t.goal: t for t in s.tests}
        for p in d.processes:
            t = by_goal[f"stmt:{p.name}:0"]
            assert t.length == 1
            assert t.schedule[0][0] == "run"
            assert all(not vals or all(v == 0 for v in vals.values()) for _, vals in t.stimulus[:1])


def test_grant_toggle_on_memory():
    d = design("ecu_memory.scl")
    s = generate_tests(d)
    t = next(t for t in s.tests if t.goal == "toggle:hw.grant:false->true")
    assert t.stimulus[0] == (0, {"hw.req": 1, "hw.fw_req": 0})
    assert (1, "hw.grant", 1) in t.expectations
    assert (0, "hw.grant", 0) in t.expectations


def test_dead_branch_reported():
    s = generate_tests(load(DEAD), goals=enumerate_goals(load(DEAD), ["statements"]))
    dead = dict(s.uncovered)
    assert dead == {"stmt:m.p:2": UNREACHABLE}


def test_bound_annotates_goals():
    d = design("ecu_memory.scl")
    s = generate_tests(d, config=KernelConfig(max_time=2))
    reasons = set(dict(s.uncovered).values())
    assert "TimeBound" in reasons
    assert s.tests


@pytest.mark.parametrize("name", corpus.names())
def test_statement_coverage_complete(name):
    d = design(name)
    s = generate_tests(d)
    stmt_left = [g for g, _ in s.uncovered if g.startswith("stmt:")]
    reachable = {f"stmt:{p.name}:{loc}" for p in d.processes for loc in p.reachable}
    assert not (set(stmt_left) & reachable)


@pytest.mark.parametrize("name", corpus.names())
def test_every_test_replays(name):
    d = design(name)
    s = generate_tests(d)
    for t in s.tests:
        replay_test(d, t)
    for t in s.to_json()["tests"]:
        replay_test(d, t)


def _oracle_depths(d):
    kernel, depth = shortest_depths(d)
    best = {}
    goals = enumerate_goals(d)
    for s, k in depth.items():
        try:
            succ = kernel.expand(s)
        except HorizonError:
            continue
        for c, t, visited in succ:
            for g in goals:
                if covers(g, s, c, t, visited):
                    best[g.id] = min(best.get(g.id, k + 1), k + 1)
    return best


@pytest.mark.parametrize("name", corpus.names())
def test_witness_lengths_are_bfs_depths(name):
    d = design(name)
    s = generate_tests(d)
    oracle = _oracle_depths(d)
    assert {t.goal: t.length for t in s.tests} == oracle


def test_tampered_test_fails_replay():
    d = design("ecu_memory.scl")
    data = generate_tests(d).to_json()["tests"][5]
    data["expectations"][-1]["value"] = not data["expectations"][-1]["value"]
    with pytest.raises(Exception):
        replay_test(d, data)


def test_concretize_examples():
    suite = generate_tests(load(REQ_GRANT)).to_json()
    mapping = {"time_scale": 1000, "names": {
        "m.req": {"channel": "PIN_7", "values": {"true": "1", "false": "0"}},
        "m.grant": {"channel": "PIN_8", "values": {"true": "1", "false": "0"}},
    }}
    stim, expect = concretize(suite, mapping)
    first = next(t for t in suite["tests"] if t["stimulus"][0]["inputs"]["m.req"])
    assert first["stimulus"][0]["time"] == 0
    one = concretize({"types": suite["types"], "tests": [first]}, mapping)[0]
    assert one.splitlines()[0] == "0,PIN_7,1"
    assert all(int(line.split(",")[0]) % 1000 == 0 for line in stim.splitlines() + expect.splitlines())
    two = {"types": suite["types"], "tests": [{"stimulus": [{"time": 2, "inputs": {"m.req": True}}],
                                               "expectations": []}]}
    assert concretize(two, mapping)[0] == "2000,PIN_7,1\n"


def test_concretize_reports_every_missing_name():
    suite = suite_json("ecu_memory.scl")
    mapping = default_map(suite)
    del mapping["names"]["hw.grant"]
    with pytest.raises(ConcretizationError) as err:
        concretize(suite, mapping)
    assert err.value.missing == ["hw.grant"]
    del mapping["names"]["hw.req"]
    mapping["names"]["hw.fw_grant"]["values"].pop("true")
    with pytest.raises(ConcretizationError) as err:
        concretize(suite, mapping)
    assert err.value.missing == ["hw.fw_grant=true", "hw.grant", "hw.req"]


@pytest.mark.parametrize("name", corpus.names())
def test_concretized_golden(name):
    stem = name[:-4]
    suite = suite_json(name)
    mapping = json.loads(corpus.read(f"{stem}_map.json"))
    stim, expect = concretize(suite, mapping)
    assert stim == corpus.read(f"{stem}_stimulus.csv")
    assert expect == corpus.read(f"{stem}_expected.csv")


def test_csv_shape():
    text = corpus.read("ecu_memory_stimulus.csv")
    assert "\r" not in text and text.endswith("\n")
    for line in text.splitlines():
        t, channel, value = line.split(",")
        assert int(t) >= 0 and channel and value


def test_suite_json_deterministic():
    assert suite_json("ecu_system.scl") == suite_json("ecu_system.scl")
    a = generate_tests(design("ecu_system.scl")).dumps()
    assert a == generate_tests(design("ecu_system.scl")).dumps()


def test_system_tests_not_reusable_on_components():
    d = design("ecu_system.scl")
    gap = reuse_gap(d, generate_tests(d))
    assert gap
    # the firmware-wins branch of the arbiter needs the firmware to request
    assert "stmt:hw.arbiter:8" in gap
