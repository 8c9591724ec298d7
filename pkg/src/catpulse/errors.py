"""Exception hierarchy. CLI exit codes hang off the two roots."""


class ConfigError(ValueError):
    """Invalid or unreadable run configuration (CLI exit code 2)."""


class NumericalContractError(RuntimeError):
    """A numerical pre/post-condition was violated (CLI exit code 3)."""


class ResolutionError(NumericalContractError):
    """Time grid too coarse for the oscillation it must resolve."""


class StepSizeError(NumericalContractError):
    """Propagator step too large for the instantaneous Hamiltonian norm."""


class TruncationError(NumericalContractError):
    """Fock cutoff too small for the state being represented."""


class DegeneracyError(NumericalContractError):
    """The G-series never rises above the degeneracy floor."""


class NormDriftError(NumericalContractError):
    """Propagation lost or gained norm beyond tolerance."""


class DomainError(NumericalContractError):
    """Requested time lies outside the range where a series is defined."""


class EmptyBranchError(NumericalContractError):
    """Conditioning on a qubit branch with (numerically) zero weight."""


class CalibrationError(NumericalContractError):
    """Target phase not reachable inside the scanned parameter range.

    ``scan`` holds the ``(parameter_value, achieved_phase)`` table.
    """

    def __init__(self, message, scan=()):
        super().__init__(message)
        self.scan = list(scan)
