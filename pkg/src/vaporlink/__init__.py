"""Simulator and analytics for non-cryogenic quantum repeaters built from
hot alkali-vapor / noble-gas hybrid memories in a ring cavity.

Layers:

* :mod:`vaporlink.memory`     closed-form memory/cavity physics
* :mod:`vaporlink.dynamics`   time-domain integration of the memory equations
* :mod:`vaporlink.repeater`   protocol analytics (rates, fidelities)
* :mod:`vaporlink.montecarlo` discrete-event waiting-time validation
* :mod:`vaporlink.profiles`   parameter profiles (built-ins: paper-sec5,
  paper-fig4)
* :mod:`vaporlink.cli`        the ``vaporlink`` command-line front end
"""

from .errors import (InfeasibleConfigError, IntegrationError, ParameterError,
                     ProfileError, RegimeError, VaporlinkError)
from .params import CavityParams, MemoryParams, ProtocolParams
from .profiles import ParameterProfile, load_profile

__version__ = "0.1.0"

__all__ = [
    "CavityParams",
    "MemoryParams",
    "ProtocolParams",
    "ParameterProfile",
    "load_profile",
    "VaporlinkError",
    "ParameterError",
    "ProfileError",
    "InfeasibleConfigError",
    "IntegrationError",
    "RegimeError",
    "__version__",
]
