"""Bundled SCL models, stub fixtures and concretization maps."""

from importlib import resources


def path(name):
    return resources.files(__name__).joinpath(name)


def read(name):
    return path(name).read_text(encoding="utf-8")


def names(suffix=".scl"):
    return sorted(p.name for p in resources.files(__name__).iterdir() if p.name.endswith(suffix))
