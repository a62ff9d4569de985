"""Exception hierarchy shared by all pdem modules."""


class PDEMError(Exception):
    """Base class for every error raised by this package."""


class NonPositiveMass(PDEMError, ValueError):
    pass


class OutOfDomain(PDEMError, ValueError):
    pass


class QuadratureFailure(PDEMError, RuntimeError):
    pass


class SingularPoint(PDEMError, ValueError):
    pass


class NonNormalizable(PDEMError, ValueError):
    pass


class TooManyStates(PDEMError, ValueError):
    pass


class ConvergenceFailure(PDEMError, RuntimeError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConfigError(PDEMError, ValueError):
    def __init__(self, message, key=None):
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key
