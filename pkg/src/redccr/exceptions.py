"""Exception types raised by redccr."""


class ShapeError(ValueError):
    """Array shapes do not match the momentum grid or truncation."""


class GridSpecError(ValueError):
    """Invalid grid construction parameters."""


class ProfileError(ValueError):
    """Vacuum profile is not normalizable or has the wrong size."""


class TruncationError(ValueError):
    """The Fock truncation is too small for the requested operation."""


class DimensionCapError(MemoryError):
    """A dense ensemble representation would exceed the configured cap."""


class SingularRayError(ValueError):
    """A momentum lies on the negative z-axis, where the spinor section is undefined."""


class GridCompatibilityError(ValueError):
    """A Lorentz transformation does not map the grid onto itself."""


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""
