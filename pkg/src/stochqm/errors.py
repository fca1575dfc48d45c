"""Exception types raised across the package."""


class StochQMError(Exception):
    """Base class for all package errors."""


class GridError(StochQMError, ValueError):
    """Invalid grid parameters."""


class GridMismatch(StochQMError, ValueError):
    """Two fields that must share a grid do not."""


class ZeroState(StochQMError, ValueError):
    """A wavefunction with (numerically) zero norm cannot be normalized."""


class UnstableStep(StochQMError, RuntimeError):
    """Norm drifted by more than the allowed amount in a single step."""


class SnapshotMismatch(StochQMError, ValueError):
    """Snapshots handed to a residual check disagree on grid or constants."""


class NodeFormation(StochQMError, RuntimeError):
    """The density developed an interior node during hydrodynamic integration."""


class DimensionTooLow(StochQMError, ValueError):
    """The operation needs at least two spatial dimensions."""


class DimensionMismatch(StochQMError, ValueError):
    """Phase-space polynomials or exponentials of different dimension."""


class ConfigError(StochQMError, ValueError):
    """Run configuration could not be parsed or validated."""


class CheckFailure(StochQMError, RuntimeError):
    """One or more named checks failed."""

    def __init__(self, failing):
        self.failing = list(failing)
        super().__init__("failing checks: " + ", ".join(self.failing))
