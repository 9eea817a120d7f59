"""Exception hierarchy for the ground-distance toolkit."""


class GroundSightError(Exception):
    """Base class for all errors raised by this package."""


# -- calibration ingestion ------------------------------------------------

class CalibrationError(GroundSightError):
    pass


class MissingField(CalibrationError):
    pass


class NonOrthonormalRotation(CalibrationError):
    pass


class OutOfRangePrincipalPoint(CalibrationError):
    pass


# -- geometry -------------------------------------------------------------

class NonPositiveDepth(GroundSightError):
    pass


class PointBehindCamera(GroundSightError):
    pass


class DegenerateCalibration(GroundSightError):
    pass


# -- image / frame handling -----------------------------------------------

class DimensionMismatch(GroundSightError):
    pass


class RangeExceeded(GroundSightError):
    pass


class RoiOutOfBounds(GroundSightError):
    pass


# -- estimation -----------------------------------------------------------

class UnorderedTimestamps(GroundSightError):
    pass


class InsufficientData(GroundSightError):
    pass


# -- simulation / pipeline ------------------------------------------------

class SpecOutOfRange(GroundSightError):
    pass


class SourceExhausted(GroundSightError):
    pass


class ConfigInvalid(GroundSightError):
    pass


class PairingError(ConfigInvalid):
    """A depth frame without its RGB partner (or vice versa) in a replay directory."""
