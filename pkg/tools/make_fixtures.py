"""Regenerate the stub fixtures shipped in scver/corpus.

Learned stubs are written as-is; corrupted ones are derived from them
by a single small edit so the corruption is easy to audit.
"""

import dataclasses
import pathlib

from scver import corpus
from scver.frontend import load
from scver.integration import learn_stub

OUT = pathlib.Path(corpus.__file__).parent


def learned(source, inst, **kw):
    return learn_stub(load(corpus.read(source)), inst, **kw)


def relax_writer(w):
    """Let the writer's output fall back to false after it rose."""
    hi, lo = (1,), (0,)
    rose = w.states.index((hi, hi))
    states = list(w.states) + [(hi, lo), (lo, lo)]
    fell, low = len(w.states), len(w.states) + 1
    extra = [(rose, lo, fell), (fell, hi, rose), (fell, lo, low), (low, lo, low), (low, hi, fell)]
    return dataclasses.replace(w, states=states, transitions=sorted(list(w.transitions) + extra))


def main():
    w = learned("writer_reader.scl", "w")
    hw = learned("ecu_system.scl", "hw")
    v1 = learned("versioned_v1.scl", "seq")
    fixtures = [
        ("stub_writer.json", w),
        ("stub_hw.json", hw),
        ("stub_versioned_v1.json", v1),
        # drop one learned transition, i.e. behaviour the component does exhibit
        ("stub_writer_deleted.json", dataclasses.replace(w, transitions=w.transitions[:-1])),
        ("stub_hw_deleted.json", dataclasses.replace(hw, transitions=hw.transitions[:-1])),
        ("stub_writer_relaxed.json", relax_writer(w)),
    ]
    for name, stub in fixtures:
        (OUT / name).write_text(stub.dumps())
        print(name, len(stub.states), len(stub.transitions))


if __name__ == "__main__":
    main()
