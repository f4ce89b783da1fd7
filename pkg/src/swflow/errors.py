"""Exception types shared across the package."""


class SwflowError(Exception):
    """Base class for all package-specific errors."""


class LatticeMismatchError(SwflowError):
    """Operands live on different lattices or have incompatible degrees."""


class DegreeError(SwflowError):
    """A cochain of unsupported or unexpected degree was supplied."""


class IllQuantizedFluxError(SwflowError):
    """Plaquette angles are too rough for an unambiguous integer flux."""

    def __init__(self, plane, distance):
        self.plane = plane
        self.distance = distance
        super().__init__(
            f"flux in plane {plane} is {distance:.3f} away from the nearest "
            "integer (limit 0.25); field too rough for flux identification"
        )


class SectorChangeError(SwflowError):
    """A descent step pushed a plaquette angle across the principal branch."""


class StagnationError(SwflowError):
    """Line search shrank below the step-size floor without progress."""


class NonFiniteEnergyError(SwflowError):
    """The energy evaluated to NaN or infinity."""


class ContractibleLoopError(SwflowError):
    """Saddle search requested with the zero winding vector."""


class EnumerationTooLargeError(SwflowError):
    """Class-enumeration search box exceeds the configured cell cap."""


class ConfigError(SwflowError):
    """Experiment configuration failed validation."""
