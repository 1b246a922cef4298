"""Exception hierarchy shared by all eprsim modules."""


class EprSimError(ValueError):
    """Base class for every error raised by eprsim."""


class InvalidStateError(EprSimError):
    """A polarization state is not normalized."""


class ImpossibleOutcomeError(EprSimError):
    """A measurement outcome with (numerically) zero probability was requested."""


class InvalidBoostError(EprSimError):
    """A boost velocity with |beta| >= 1."""


class InvalidGeometryError(EprSimError):
    """Non-positive distances, zero-length segments or malformed worldlines."""


class ScenarioError(EprSimError):
    """A scenario violates a semantic constraint.

    ``field`` names the offending key path, e.g. ``photon1.distance``.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class ScenarioSyntaxError(ScenarioError):
    """The scenario text does not follow the file grammar."""

    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")
