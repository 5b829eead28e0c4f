"""Exception types shared across the package."""


class PitchscopeError(Exception):
    """Base class for package errors."""


class FormatError(PitchscopeError):
    """Malformed or unsupported audio file / record data."""


class CalibrationError(PitchscopeError):
    """SNR calibration produced an unusable (non-monotone) curve."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = list(offending or [])


class CalibrationMismatch(PitchscopeError):
    """Calibration table does not match the analysis bank."""


class CalibrationRejected(PitchscopeError):
    """Level calibration refused because the test signal is unstable."""

    def __init__(self, message, spread_db=None):
        super().__init__(message)
        self.spread_db = spread_db


class ControlRejected(PitchscopeError):
    """Control command invalid in the current service state."""

    def __init__(self, command, state, reason=""):
        msg = f"{command} rejected in state '{state}'"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.command = command
        self.state = state
        self.reason = reason
