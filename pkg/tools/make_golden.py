"""Regenerate the golden files next to the corpus designs: Promela
models, concretization maps and concretized test CSVs."""

import json
import pathlib

from scver import corpus
from scver.frontend import load
from scver.promela import emit_promela
from scver.testgen import concretize, default_map, generate_tests

OUT = pathlib.Path(corpus.__file__).parent


def main():
    for name in corpus.names():
        stem = name[:-4]
        design = load(corpus.read(name))
        (OUT / f"{stem}.pml").write_text(emit_promela(design), encoding="utf-8")
        suite = generate_tests(design).to_json()
        mapping = default_map(suite)
        (OUT / f"{stem}_map.json").write_text(json.dumps(mapping, indent=2) + "\n")
        stim, expect = concretize(suite, mapping)
        (OUT / f"{stem}_stimulus.csv").write_text(stim)
        (OUT / f"{stem}_expected.csv").write_text(expect)
        print(stem, len(suite["tests"]), len(stim.splitlines()), len(expect.splitlines()))


if __name__ == "__main__":
    main()
