"""Exception hierarchy shared across the package."""


class WaveControlError(Exception):
    """Base class for all package errors."""


class InvalidGeometry(WaveControlError):
    pass


class MeshingFailure(WaveControlError):
    pass


class NonConvergence(WaveControlError):
    pass


class BuoyancyImbalance(WaveControlError):
    pass


class AssemblyFailure(WaveControlError):
    pass


class SingularSystem(WaveControlError):
    pass


class SingularKKT(SingularSystem):
    pass


class InadmissibleControl(WaveControlError):
    pass


class InadmissibleInitialControl(InadmissibleControl):
    pass


class ConfigError(WaveControlError):
    """Raised for malformed run configurations; ``key`` names the culprit."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
