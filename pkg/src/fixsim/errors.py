"""Exception types shared across the package."""


class FixsimError(Exception):
    """Base class for all fixsim errors."""


class WrongArity(FixsimError):
    """A coordinate sequence has the wrong length for the working dimension."""


class NotOnSimplex(FixsimError):
    """Coordinates are too negative or do not sum to 1 within tolerance."""


class ResourceLimit(FixsimError):
    """A grid, scan, or refinement would exceed the configured cell budget."""


class MapRangeError(FixsimError):
    """A map evaluation produced a point that is not on the simplex."""


class SearchExhausted(FixsimError):
    """A fully-labeled cell search ran out of cells; signals a bug or an
    inadmissible labeling."""


class TauTooLarge(FixsimError):
    """The perturbation size is not strictly below every labeled coordinate."""


class NoFixedPointFound(FixsimError):
    """The exact construction found no fully labeled cell; signals a bug."""


class RoundTripMismatch(FixsimError):
    """The floating-point solver and the exact construction disagree."""


class EmptyPairSet(FixsimError):
    """No sampled pair is far enough apart for the pair-infimum diagnostic."""


class MapSyntaxError(FixsimError):
    """Map text failed to parse; carries 1-based line and column."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ArityError(FixsimError):
    """A parsed map does not define exactly one component per coordinate."""


class UnknownBuiltin(FixsimError):
    """Map text names a builtin family that does not exist."""


class DegenerateOutput(FixsimError):
    """Clamped map components sum to (nearly) zero; normalization undefined."""


class UnsupportedDimension(FixsimError):
    """The operation is only available for a specific dimension."""


class ModulusRangeError(FixsimError):
    """The supplied continuity data cannot certify the requested accuracy."""


class InvalidInput(FixsimError):
    """A user-supplied file or flag value is malformed."""
