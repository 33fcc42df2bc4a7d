"""Exception hierarchy shared by all modules."""


class ScverError(Exception):
    """Base class of every error raised by the toolchain."""


class SourceError(ScverError):
    """An error tied to a position in SCL or LTL source text."""

    def __init__(self, message, pos=None, expected=None):
        self.message = message
        self.pos = pos
        self.expected = sorted(expected) if expected else []
        text = message
        if pos is not None:
            text = f"{pos[0]}:{pos[1]}: {message}"
        if self.expected:
            text += " (expected one of: " + ", ".join(self.expected) + ")"
        super().__init__(text)


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class ElaborationError(SourceError):
    pass


class HorizonError(ScverError):
    """The finite horizon (max_time / max_delta) was exceeded."""

    status = "Horizon"


class TimeBound(HorizonError):
    status = "TimeBound"


class DeltaOverflow(HorizonError):
    status = "DeltaOverflow"


class ResourceLimit(ScverError):
    """The configured state cap was exceeded."""


class StaleStubError(ScverError):
    """A stub's alphabet no longer matches the component it was learned from."""


class HiddenSymbolError(ScverError):
    """A property names an internal symbol of a stubbed component."""


class ConcretizationError(ScverError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__("unmapped names: " + ", ".join(self.missing))


class InfrastructureError(ScverError):
    """An external tool (SPIN, C compiler) is missing or failed."""


class PromelaError(ScverError):
    pass
