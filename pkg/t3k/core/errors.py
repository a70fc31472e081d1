"""Exception hierarchy shared by the physics layer and the command line."""

EXIT_OK = 0
EXIT_PHYSICS = 1
EXIT_CONFIG = 2


class T3KError(Exception):
    """Base class for all t3k-lab errors."""

    exit_status = EXIT_PHYSICS


class ConfigError(T3KError):
    """Raised when a run configuration is invalid.

    Args:
        path: Dotted path to the offending key, e.g. ``model.d``
        message: What is wrong with it
    """

    exit_status = EXIT_CONFIG

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class PhysicsError(T3KError):
    """A physics-domain failure (resonance, divergence, unusable input)."""


class ResonanceError(PhysicsError):
    """A detuning that must stay away from zero came too close to it."""


class PoleError(ResonanceError):
    """The negative-detuning closed form sits on a pole of csc((2l+d)/xi)."""

    def __init__(self, message: str, distance: float, order: int):
        self.distance = distance
        self.order = order
        super().__init__(message)


class ConvergenceError(PhysicsError):
    """A series or quadrature did not reach the requested tolerance."""


class ProfileError(PhysicsError):
    """The cavity profile cannot serve the requested computation."""


class ClassificationError(PhysicsError):
    """The symmetric/antisymmetric eigenpair could not be identified."""


class NonHermitianError(PhysicsError):
    """A matrix handed to the eigensolver is not exactly Hermitian."""


def exit_status_for(exc: BaseException) -> int:
    """Map an exception to the command-line exit status."""
    if isinstance(exc, T3KError):
        return exc.exit_status
    return EXIT_PHYSICS
