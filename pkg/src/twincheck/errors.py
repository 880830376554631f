"""Exception types raised by twincheck."""


class TwincheckError(Exception):
    """Base class for all errors raised by this package."""


class InvalidCoxeterMatrix(TwincheckError, ValueError):
    pass


class InvalidWord(TwincheckError, ValueError):
    pass


class NonSphericalParabolic(TwincheckError):
    pass


class PreconditionViolated(TwincheckError, ValueError):
    pass


class UnsupportedType(TwincheckError):
    pass


class NotPrimePower(TwincheckError, ValueError):
    pass


class InvalidGeometry(TwincheckError, ValueError):
    pass


class InvalidPolygon(InvalidGeometry):
    pass


class DisconnectedChamberGraph(TwincheckError):
    pass


class InvalidBuilding(TwincheckError):
    pass


class NonSpherical(TwincheckError):
    pass


class AxiomValidationFailed(TwincheckError):
    pass


class NotInvolution(TwincheckError, ValueError):
    pass


class ClassificationFailed(TwincheckError):
    pass


class NotApplicable(TwincheckError):
    pass


class IncompatibleBuilding(TwincheckError, ValueError):
    pass


class WitnessValidationFailed(TwincheckError):
    pass
