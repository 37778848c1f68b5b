from __future__ import annotations


class SdirngError(ValueError):
    """Base class for every validation or operational failure raised by sdirng."""


class InvalidStateError(SdirngError):
    pass


class InvalidMeasurementError(SdirngError):
    pass


class ShapeError(SdirngError):
    pass


class CapacityError(SdirngError):
    pass


class SettingRangeError(SdirngError):
    pass


class InsufficientDataError(SdirngError):
    pass


class InfeasibleValueError(SdirngError):
    pass
