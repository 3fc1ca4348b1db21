"""Exception hierarchy shared by every snmark module."""


class SnmarkError(ValueError):
    """Base class for all errors raised by snmark."""


class ParseError(SnmarkError):
    """Malformed serial number, key file, registry or measurement file."""


class ConfigError(SnmarkError):
    """Invalid logo layout or solver configuration."""


class ShapeError(SnmarkError):
    """Array dimensions do not match what the operation requires."""


class WatermarkKeyError(SnmarkError):
    """Invalid watermark key parameters (planes, layer count, thresholds)."""


class ParameterError(SnmarkError):
    """Attack or sampling parameter outside its documented range."""


class NumericError(SnmarkError):
    """Non-finite values where finite reals are required."""


class DuplicateSerialError(ParseError):
    """The same serial number appears twice in a registry."""
