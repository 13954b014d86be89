"""Exception types shared across the simulator."""


class MrtError(Exception):
    """Base class for all simulator errors."""


class ParameterError(MrtError):
    """A physical parameter is outside its allowed domain."""


class ConfigurationError(MrtError):
    """A grid or run configuration cannot support the requested computation."""


class PotentialShapeError(MrtError):
    """The potential does not have the expected two-well structure."""


class LevelCountError(MrtError):
    """More metastable levels were requested than exist below the barrier."""

    def __init__(self, requested, available, well):
        self.requested = requested
        self.available = available
        self.well = well
        super().__init__(
            f"requested {requested} {well}-well levels but only "
            f"{available} lie below the barrier top"
        )


class SingularPairError(MrtError):
    """A state pair has equal mean currents but a nonzero current element."""


class ResolutionError(MrtError):
    """A frequency or time grid is too coarse for the requested quantity."""


class IntegrationError(MrtError):
    """The master-equation integrator lost accuracy (e.g. negative P_n)."""
