"""Exception hierarchy.

Every error raised for bad input derives from ``ValueError`` so callers that
only care about "the input was wrong" can catch that, while the CLI maps the
subclasses onto distinct exit codes.
"""


class WedgeCircError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(WedgeCircError, ValueError):
    """Matrix or register dimensions are unusable for the requested operation."""


class UnitarityError(WedgeCircError, ValueError):
    """A matrix expected to be unitary is not, within tolerance."""


class ContractionError(WedgeCircError, ValueError):
    """A matrix has spectral norm larger than one."""


class DegenerateInputError(WedgeCircError, ValueError):
    """Both entries handed to a Givens construction are zero."""


class RegisterMismatchError(WedgeCircError, ValueError):
    """Qubit registers of two objects do not line up."""


class CircuitParseError(WedgeCircError, ValueError):
    """A serialized circuit (or matrix/state file) is malformed.

    ``location`` is a JSON-path-like pointer to the offending element.
    """

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class ImpossibleOutcomeError(WedgeCircError, RuntimeError):
    """Post-selection on an outcome of (numerically) zero probability."""


class InvariantError(WedgeCircError, RuntimeError):
    """A synthesized artifact failed its own correctness check."""
