"""JSON schemas of every machine-readable report, and a validator."""

import json
from functools import lru_cache
from importlib import resources

import jsonschema
from referencing import Registry, Resource

NAMES = ("check", "compose", "concretize", "consistency", "crosscheck", "error", "map", "promela",
         "replay", "simulate", "stub", "tests", "trace", "verdict")


def load(name):
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())


@lru_cache(maxsize=None)
def _registry():
    pairs = [(f"urn:scver:{n}", Resource.from_contents(load(n))) for n in NAMES]
    return Registry().with_resources(pairs)


def validate(doc, name):
    """Raise ``jsonschema.ValidationError`` unless ``doc`` matches schema ``name``."""
    cls = jsonschema.validators.validator_for(load(name))
    cls(load(name), registry=_registry()).validate(doc)
