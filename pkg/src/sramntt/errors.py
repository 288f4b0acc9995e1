"""Exception types shared across the simulator, mapped to CLI exit codes."""


class SimError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class ParameterError(SimError):
    """Invalid run parameters (bad modulus, congruence failure, width too small...)."""

    exit_code = 2


class VerificationError(SimError):
    """In-array result disagrees with a reference oracle."""

    exit_code = 3


class CapacityError(SimError):
    """Requested polynomial does not fit the array layout."""

    exit_code = 4


class TraceIOError(SimError):
    """Malformed trace/state file or unreadable path."""

    exit_code = 5


class DimensionError(ParameterError):
    """Subarray dimensions below the supported minimum."""


class AddressError(SimError):
    """Row address outside the subarray, or an illegal same-row activation."""


class TileGeometryError(SimError):
    """Tile-scoped shift with an unusable tile width."""


class ObservationError(SimError):
    """A latch bit that the carry-save invariants promise to be zero was set."""
