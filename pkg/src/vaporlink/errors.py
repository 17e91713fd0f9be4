"""Exception types shared across the library."""


class VaporlinkError(Exception):
    """Base class for all library errors."""


class ParameterError(VaporlinkError, ValueError):
    """A parameter bundle violates its invariants or a precondition."""


class ProfileError(VaporlinkError, ValueError):
    """A parameter profile file failed to parse or validate."""


class InfeasibleConfigError(VaporlinkError, RuntimeError):
    """A requested quantity is undefined for this configuration
    (zero efficiency, divergent resonance, no crossover in range, ...)."""


class IntegrationError(VaporlinkError, RuntimeError):
    """Time integration failed (stiffness, step underflow, non-finite state)."""


class RegimeError(VaporlinkError, RuntimeError):
    """Parameters are outside the validity regime of the requested reduction."""
