"""Finite scalar types.  Every value is stored as a small integer code."""

from dataclasses import dataclass

DEFAULT_WIDTH_CAP = 1 << 16


@dataclass(frozen=True)
class BoolType:
    kind = "bool"

    @property
    def lo(self):
        return 0

    @property
    def hi(self):
        return 1

    def codes(self):
        return range(2)

    def cardinality(self):
        return 2

    def default(self):
        return 0

    def contains(self, code):
        return code in (0, 1)

    def render(self, code):
        return bool(code)

    def encode(self, value):
        if isinstance(value, bool):
            return int(value)
        raise ValueError(f"{value!r} is not a bool literal")

    def to_json(self):
        return {"kind": "bool"}

    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class IntType:
    lo: int
    hi: int
    kind = "int"

    def codes(self):
        return range(self.lo, self.hi + 1)

    def cardinality(self):
        return self.hi - self.lo + 1

    def default(self):
        return self.lo

    def contains(self, code):
        return self.lo <= code <= self.hi

    def render(self, code):
        return code

    def encode(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{value!r} is not an integer literal")
        return value

    def to_json(self):
        return {"kind": "int", "lo": self.lo, "hi": self.hi}

    def __str__(self):
        return f"int[{self.lo}..{self.hi}]"


@dataclass(frozen=True)
class EnumType:
    labels: tuple
    kind = "enum"

    @property
    def lo(self):
        return 0

    @property
    def hi(self):
        return len(self.labels) - 1

    def codes(self):
        return range(len(self.labels))

    def cardinality(self):
        return len(self.labels)

    def default(self):
        return 0

    def contains(self, code):
        return 0 <= code < len(self.labels)

    def render(self, code):
        return self.labels[code]

    def encode(self, value):
        if isinstance(value, str) and value in self.labels:
            return self.labels.index(value)
        raise ValueError(f"{value!r} is not a label of {self}")

    def to_json(self):
        return {"kind": "enum", "labels": list(self.labels)}

    def __str__(self):
        return "enum{" + ", ".join(self.labels) + "}"


BOOL = BoolType()


def type_from_json(data):
    kind = data["kind"]
    if kind == "bool":
        return BOOL
    if kind == "int":
        return IntType(data["lo"], data["hi"])
    if kind == "enum":
        return EnumType(tuple(data["labels"]))
    raise ValueError(f"unknown type kind {kind!r}")


def decode_json_value(typ, value):
    """Inverse of ``typ.render`` for JSON-loaded values."""
    code = typ.encode(value)
    if not typ.contains(code):
        raise ValueError(f"{value!r} outside {typ}")
    return code
