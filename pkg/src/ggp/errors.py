"""Exception hierarchy. Every constraint violation maps to a named error class."""


class GgpError(Exception):
    """Base class for all errors raised by this package."""


# -- model parameter validation ------------------------------------------------

class DimensionTooSmall(GgpError):
    """Ambient dimension below 2."""


class AlphaOutOfRange(GgpError):
    """Radial exponent alpha must be > -1."""


class BetaOutOfRange(GgpError):
    """Decay exponent beta must be >= 1."""


class NonpositiveIntensity(GgpError):
    """Intensity lambda must be > 0."""


class IntensityTooSmall(GgpError):
    """Intensity too small for the critical radius to be defined (or R < 1)."""


# -- geometry ------------------------------------------------------------------

class DegenerateInput(GgpError):
    """Point set is affinely dependent; the hull is lower-dimensional."""


class OriginPoint(GgpError):
    """A point coincides with the origin where that is not allowed."""


class IndexOutOfRange(GgpError, IndexError):
    """Index outside its valid range."""


class OriginOutside(GgpError):
    """The origin is not interior to the polytope."""


# -- rescaling -----------------------------------------------------------------

class OutsideWindow(GgpError):
    """Scaled point lies outside the target window of the scaling map."""


class CosineDegenerate(GgpError):
    """Downward grain boundary undefined at geodesic distance >= pi/2."""


class OutsideSupport(GgpError):
    """Query location outside the spatial hull of the extreme points."""


# -- harness / CLI ---------------------------------------------------------------

class ParseError(GgpError):
    """Configuration text could not be parsed (carries line/column)."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(GgpError):
    """Configuration parsed but a field is invalid; names the field."""

    def __init__(self, field, message=""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field


class EmptyInput(GgpError):
    """Operation requires a non-empty input."""


class IoError(GgpError):
    """Filesystem failure while writing or reading artifacts."""
