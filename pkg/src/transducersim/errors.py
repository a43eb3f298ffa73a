"""Exception hierarchy shared by all toolkit modules."""


class TransducerError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(TransducerError):
    """Invalid physical parameter or inconsistent inputs."""


class InstabilityError(TransducerError):
    """Blue-detuned operation past the parametric oscillation threshold."""


class SamplingError(TransducerError):
    """Grid or sampling rate too coarse for the requested dynamics."""


class TraceError(TransducerError):
    """Malformed trace data (non-monotone axis, NaNs, bad file)."""


class FitError(TransducerError):
    """Fit failed: no feature found, non-convergence, or degenerate data."""


class DeviceFileError(TransducerError):
    """Device file rejected; carries the full list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
