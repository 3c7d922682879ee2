"""Exception hierarchy shared by all modules."""


class OmegaError(Exception):
    """Base class for every error raised by omegaspec."""


class InputError(OmegaError, ValueError):
    """Invalid arguments or malformed forms."""


class PreconditionError(InputError):
    """A mathematical hypothesis of an operation does not hold."""


class InsufficientSpectrumError(OmegaError):
    """A truncated spectrum is too short to certify the requested prefix."""


class ConvergenceError(OmegaError):
    """An iterative eigensolver failed to meet its residual contract."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ResolutionError(OmegaError):
    """A mesh is too coarse to resolve the requested geometric feature."""


class MeshError(InputError):
    """Base class for mesh validation problems.

    ``simplex`` names the offending vertex, edge or face when known.
    """

    def __init__(self, message, simplex=None):
        super().__init__(message)
        self.simplex = simplex


class MeshParseError(MeshError):
    pass


class NonManifoldError(MeshError):
    pass


class OpenSurfaceError(MeshError):
    pass


class OrientationError(MeshError):
    pass


class DegenerateFaceError(MeshError):
    pass


class DisconnectedMeshError(MeshError):
    pass
