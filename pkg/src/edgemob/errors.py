"""Exception types shared across the package."""


class EdgeMobError(Exception):
    """Base class for all package errors."""


class UnstableServer(EdgeMobError, ValueError):
    """Raised when arrivals meet or exceed the edge server's spare capacity."""


class ConfigError(EdgeMobError, ValueError):
    pass


class InfeasibleScenario(EdgeMobError):
    """A generated period has no base station passing the rate/delay checks."""


class SchemaError(EdgeMobError, ValueError):
    pass


class FrameInfeasible(EdgeMobError):
    """No decision sequence for a frame satisfies the frame energy budget."""

    def __init__(self, message, frame_index=None):
        super().__init__(message)
        self.frame_index = frame_index


class DegenerateGapWarning(UserWarning):
    """Two or more arms share the optimal objective; zero gaps were dropped."""
