"""Exception types shared across the package."""


class LadderphaseError(Exception):
    """Base class for all package errors."""


class DomainError(LadderphaseError, ValueError):
    """A physical input lies outside the supported domain."""


class ArgumentError(LadderphaseError, ValueError):
    """An argument is structurally invalid (wrong sign, parity, range)."""


class ConfigError(LadderphaseError, ValueError):
    """A configuration or plan is inconsistent or incomplete."""


class CalibrationError(LadderphaseError, ValueError):
    """Calibration inputs are inconsistent with the interferometer model."""


class SegmentationError(LadderphaseError, ValueError):
    """A trace cannot be segmented into analysis windows."""


class MissingReferenceError(LadderphaseError, ValueError):
    """A required control-off reference trace was not provided."""


class UnphysicalSumError(LadderphaseError, ValueError):
    """Detector voltages violate the interferometer sum rule."""


class PhaseUnobservableError(LadderphaseError, ValueError):
    """Transmission is too low for the phase to be recovered."""


class SolverError(LadderphaseError, RuntimeError):
    """A linear or nonlinear solve failed to produce a valid solution."""


class IntegrationFailure(LadderphaseError, RuntimeError):
    """Time integration aborted before reaching the end of the span."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (time reached: {t_reached:.6e} s)")
        self.t_reached = t_reached


class TraceFormatError(LadderphaseError, ValueError):
    """A stored trace file is malformed or truncated."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
