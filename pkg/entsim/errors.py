"""Exception hierarchy for the simulator.

Everything raised on purpose derives from SimErr so the CLI can map
configuration problems (exit 2) apart from runtime failures (exit 3).
"""

from __future__ import annotations


class SimErr(Exception):
    """Base class for all simulator errors."""


class ConfigErr(SimErr):
    """Raised when a configuration document is malformed or out of range."""

    def __init__(self, message: str, *, path: str | None = None) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class EpochRangeErr(SimErr, ValueError):
    """Raised for epochs outside the supported 1990-2060 window."""


class FrameMismatchErr(SimErr, ValueError):
    """Raised when ECI and ECEF vectors are mixed in one operation."""


class KeplerConvergenceErr(SimErr):
    """Raised when the Kepler solver exhausts its iteration cap."""


class PropagationErr(SimErr):
    """Raised when a satellite position cannot be produced for an epoch."""

    def __init__(self, message: str, *, epoch: str | None = None) -> None:
        super().__init__(f"{message} (epoch {epoch})" if epoch else message)
        self.epoch = epoch


class BelowHorizonErr(SimErr, ValueError):
    """Raised when a link is evaluated at a non-positive elevation."""


class EphemerisFormatErr(SimErr):
    """Raised when an ephemeris file is unreadable or structurally invalid."""

    def __init__(self, message: str, *, line_no: int | None = None) -> None:
        super().__init__(f"line {line_no}: {message}" if line_no else message)
        self.line_no = line_no


class OutputWriteErr(SimErr):
    """Raised when writing result artifacts fails."""
