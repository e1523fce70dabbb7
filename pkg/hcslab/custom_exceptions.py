"""
Exception categories shared by every hcslab package.

Each package declares its own specific errors next to its code and derives them
from one of these categories; the command line maps the categories to exit
codes.
"""


class HcsLabError(Exception):
    pass


class ConfigurationError(HcsLabError):
    pass


class ToleranceError(HcsLabError):
    pass


class TruncationError(HcsLabError):
    pass


class DegenerateStateError(HcsLabError):
    pass


class SubsystemError(HcsLabError):
    pass


class SkippedPointWarning(UserWarning):
    pass
