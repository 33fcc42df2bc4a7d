import json
import subprocess
import sys

import pytest

from scver import corpus, schemas
from scver.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_mutex_flawed_exit_1_with_trace(capsys):
    code, out, _ = call(capsys, "check", "examples/mutex_flawed.scl", "--prop", "mutex")
    assert code == 1
    doc = json.loads(out)
    schemas.validate(doc, "verdict")
    assert doc["status"] == "InvariantViolation"
    assert doc["trace"]["steps"]


def test_mutex_fixed_exit_0(capsys):
    code, out, _ = call(capsys, "check", "examples/mutex_fixed.scl", "--prop", "mutex")
    assert code == 0
    assert json.loads(out)["status"] == "Pass"


def test_config_echoed(capsys):
    code, out, _ = call(capsys, "check", "examples/mutex_fixed.scl", "--prop", "mutex",
                        "--max-time", "7", "--max-delta", "9", "--state-cap", "1000")
    assert json.loads(out)["config"] == {"max_time": 7, "max_delta": 9, "state_cap": 1000}


def test_check_all_properties(capsys):
    code, out, _ = call(capsys, "check", "examples/ecu_repaired.scl", "--no-deadlock")
    doc = json.loads(out)
    schemas.validate(doc, "check")
    assert code == 0
    assert {v["status"] for v in doc["verdicts"]} == {"Pass"}


def test_concretize_missing_names_exit_3(capsys, tmp_path):
    tests = tmp_path / "tests.json"
    assert run(["testgen", "examples/writer_reader.scl", "-o", str(tests)]) == 0
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"time_scale": 1, "names": {"r.seen": {
        "channel": "SEEN", "values": {"true": "1", "false": "0"}}}}))
    capsys.readouterr()
    code, out, err = call(capsys, "concretize", str(tests), "--map", str(missing),
                          "--stimulus", str(tmp_path / "s.csv"),
                          "--expectations", str(tmp_path / "e.csv"))
    assert code == 3
    doc = json.loads(out)
    schemas.validate(doc, "error")
    assert "w.s" in doc["message"] and "r.seen" not in doc["message"]
    assert "w.s" in err


def test_concretize_golden(capsys, tmp_path):
    tests = tmp_path / "tests.json"
    run(["testgen", "examples/ecu_memory.scl", "-o", str(tests)])
    s, e = tmp_path / "s.csv", tmp_path / "e.csv"
    capsys.readouterr()
    code, out, _ = call(capsys, "concretize", str(tests), "--map", "ecu_memory_map.json",
                        "--stimulus", str(s), "--expectations", str(e))
    assert code == 0
    schemas.validate(json.loads(out), "concretize")
    assert s.read_bytes() == corpus.path("ecu_memory_stimulus.csv").read_bytes()
    assert e.read_bytes() == corpus.path("ecu_memory_expected.csv").read_bytes()


def test_unknown_flag_exit_3_usage_on_stderr(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["check", "examples/mutex_fixed.scl", "--bogus"])
    assert exc.value.code == 3
    assert "usage:" in capsys.readouterr().err


def test_no_subcommand_exit_3(capsys):
    with pytest.raises(SystemExit) as exc:
        run([])
    assert exc.value.code == 3


def test_nonpositive_bound_exit_3(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["check", "examples/mutex_fixed.scl", "--max-time", "0"])
    assert exc.value.code == 3


def test_parse_error_has_position(capsys, tmp_path):
    bad = tmp_path / "bad.scl"
    bad.write_text("module M {\n  out s: bool;\n  process p { s <= ; }\n}\ninstance m: M;\n")
    code, out, err = call(capsys, "check", str(bad))
    assert code == 3
    doc = json.loads(out)
    schemas.validate(doc, "error")
    assert doc["position"][0] == 3
    assert "3:" in err


def test_unknown_property_exit_3(capsys):
    code, out, _ = call(capsys, "check", "examples/mutex_fixed.scl", "--prop", "nope")
    assert code == 3


# fault injection: exit codes never conflate verdicts with failures

def test_unreadable_file_exit_4(capsys, tmp_path):
    code, out, _ = call(capsys, "check", str(tmp_path))  # a directory cannot be read
    assert code == 4
    schemas.validate(json.loads(out), "error")


def test_missing_file_exit_3(capsys, tmp_path):
    code, _, _ = call(capsys, "check", str(tmp_path / "nothing.scl"))
    assert code == 3


def test_missing_spin_exit_4(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("SCVER_SPIN", str(tmp_path / "no-spin"))
    monkeypatch.setenv("PATH", str(tmp_path))
    code, out, _ = call(capsys, "crosscheck", "examples/mutex_fixed.scl")
    assert code == 4
    assert json.loads(out)["kind"] == "InfrastructureError"


def test_state_cap_1_exit_2(capsys):
    code, out, _ = call(capsys, "check", "examples/mutex_flawed.scl", "--state-cap", "1")
    assert code == 2
    assert json.loads(out)["kind"] == "ResourceLimit"


def test_time_bound_exit_2(capsys):
    code, out, _ = call(capsys, "check", "examples/versioned_v2.scl", "--max-time", "1")
    assert code == 2
    assert json.loads(out)["status"] == "TimeBound"


# other subcommands

def test_simulate(capsys):
    code, out, _ = call(capsys, "simulate", "examples/writer_reader.scl")
    doc = json.loads(out)
    schemas.validate(doc, "simulate")
    assert code == 0
    assert doc["env"] == "ClosedDefault"
    assert doc["status"] == "Terminated"
    assert doc["steps"][-1]["phase"] == "terminal"


def test_simulate_deadlock(capsys):
    code, out, _ = call(capsys, "simulate", "examples/lost_wakeup.scl")
    # the producer runs first and its immediate notification is lost
    assert json.loads(out)["status"] == "Deadlock"
    assert code == 1


def test_emit_promela_matches_golden(capsys, tmp_path):
    code, out, _ = call(capsys, "emit-promela", "examples/mutex_flawed.scl")
    assert code == 0
    assert out == corpus.read("mutex_flawed.pml")
    pml = tmp_path / "m.pml"
    code, out, _ = call(capsys, "emit-promela", "examples/mutex_flawed.scl", "-o", str(pml))
    schemas.validate(json.loads(out), "promela")
    assert pml.read_text() == corpus.read("mutex_flawed.pml")


def test_stub_and_consistency(capsys, tmp_path):
    out_file = tmp_path / "w.json"
    code, _, _ = call(capsys, "stub", "examples/writer_reader.scl", "--instance", "w")
    assert code == 0
    code, _, _ = call(capsys, "stub", "examples/writer_reader.scl", "--instance", "w",
                      "-o", str(out_file))
    assert out_file.read_text() == corpus.read("stub_writer.json")
    code, out, _ = call(capsys, "consistency", "examples/writer_reader.scl", "--instance", "w",
                        "--stub", str(out_file))
    assert code == 0
    schemas.validate(json.loads(out), "consistency")
    code, out, _ = call(capsys, "consistency", "examples/writer_reader.scl", "--instance", "w",
                        "--stub", "stub_writer_deleted.json")
    assert code == 1
    doc = json.loads(out)
    assert doc["status"] == "fail" and doc["witness_length"] <= 8


def test_unknown_instance_exit_3(capsys):
    code, _, _ = call(capsys, "stub", "examples/writer_reader.scl", "--instance", "zz")
    assert code == 3


def test_compose_confirmed_and_spurious(capsys):
    code, out, _ = call(capsys, "compose", "examples/ecu_system.scl", "--stub", "hw=stub_hw.json",
                        "--prop", "sw_served")
    doc = json.loads(out)
    schemas.validate(doc, "compose")
    assert code == 1
    assert doc["verdict"]["advisory"] is True
    assert doc["replay"]["status"] == "Confirmed"
    code, out, _ = call(capsys, "compose", "examples/writer_reader.scl",
                        "--stub", "w=stub_writer_relaxed.json", "--prop", "seen_implies_s")
    doc = json.loads(out)
    schemas.validate(doc, "compose")
    assert doc["verdict"]["status"] == "InvariantViolation"
    assert doc["replay"]["status"] == "Spurious"
    assert code == 0


def test_compose_stale_stub_exit_3(capsys):
    code, out, _ = call(capsys, "compose", "examples/ecu_system.scl", "--stub", "sw=stub_hw.json",
                        "--prop", "no_double")
    assert code == 3
    assert json.loads(out)["kind"] == "StaleStubError"


def test_testgen_schema_and_plot(capsys, tmp_path):
    code, out, _ = call(capsys, "testgen", "examples/ecu_memory.scl", "--plot", str(tmp_path))
    assert code == 0
    schemas.validate(json.loads(out), "tests")
    assert (tmp_path / "ecu_memory_coverage.png").stat().st_size > 0


def test_plot_files_written(capsys, tmp_path):
    code, out, _ = call(capsys, "check", "examples/mutex_flawed.scl", "--prop", "mutex",
                        "--plot", str(tmp_path))
    doc = json.loads(out)
    assert doc["figures"] == [str(tmp_path / "mutex_flawed_mutex.png")]
    assert (tmp_path / "mutex_flawed_mutex.png").read_bytes()[:4] == b"\x89PNG"


def test_plain_format_is_tab_delimited(capsys):
    code, out, _ = call(capsys, "check", "examples/mutex_flawed.scl", "--prop", "mutex",
                        "--format", "plain")
    assert code == 1
    lines = out.splitlines()
    assert lines[0] == "property\tmutex"
    header = next(line for line in lines if line.startswith("step\t"))
    width = len(header.split("\t"))
    rows = [line for line in lines[lines.index(header) + 1:] if line.split("\t")[0].isdigit()]
    assert rows and all(len(r.split("\t")) == width for r in rows)


@pytest.mark.parametrize("argv", [
    ["check", "examples/ecu_system.scl", "--prop", "sw_served"],
    ["simulate", "examples/ecu_memory.scl"],
    ["testgen", "examples/writer_reader.scl"],
    ["stub", "examples/writer_reader.scl", "--instance", "w"],
])
def test_repeated_invocations_byte_identical(argv):
    cmd = [sys.executable, "-m", "scver"] + argv
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    assert a.stdout and a.stdout == b.stdout
    assert a.returncode == b.returncode
