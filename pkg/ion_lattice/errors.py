class IonLatticeError(Exception):
    """Base class of every error raised by the library.

    `code` is a short machine-readable tag (e.g. "divergence") that the CLI and
    the agent tools report alongside the message.
    """

    code = "error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class DomainError(IonLatticeError, ValueError):
    code = "out_of_range"


class DivergenceError(DomainError):
    code = "divergence"


class QuadratureError(IonLatticeError):
    code = "quadrature"

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate:.12g}, error={error_bound:.3g})")
        self.estimate = estimate
        self.error_bound = error_bound


class SingularConfigurationError(IonLatticeError, ValueError):
    code = "singular_configuration"


class SolverError(IonLatticeError):
    code = "solver"

    def __init__(self, message, last_iterate=None, gradient_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.gradient_norm = gradient_norm


class UnstableConfigurationError(IonLatticeError):
    code = "unstable"

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class FitError(IonLatticeError):
    code = "fit"


class DegenerateFitError(FitError):
    code = "degenerate_fit"


class NegativeThermalVarianceError(IonLatticeError):
    code = "negative_thermal_variance"

    def __init__(self, message, deficits):
        super().__init__(message)
        self.deficits = deficits


class ConfigError(IonLatticeError, ValueError):
    code = "config"

    def __init__(self, message, key=None):
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


class SpotsFormatError(IonLatticeError, ValueError):
    code = "spots_format"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# warning categories


class AdiabaticityWarning(UserWarning):
    pass


class TrackingWarning(UserWarning):
    pass


class OverlapWarning(UserWarning):
    pass


class SaddleWarning(UserWarning):
    pass
