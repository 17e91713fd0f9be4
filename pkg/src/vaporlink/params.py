"""Parameter bundles for the hybrid-gas memory, ring cavity, and repeater link.

Unit conventions
----------------
All rates and detunings are stored as plain frequencies in s^-1 (Hz numbers
as quoted, e.g. gamma_e = 13.5e9).  Every formula in this library is built
from ratios or products that are insensitive to the ordinary-vs-angular
choice, with one documented exception: the cavity roundtrip length
L = pi*c/(2*delta_hf_angular) converts the hyperfine splitting to angular
frequency internally (see :func:`vaporlink.memory.cavity_geometry`).
Equation-of-motion rates (J, gamma_s, gamma_k, delta_k, Omega) enter the
dynamics directly as written, so the alkali->noble transfer time is
pi/(2*J) with J = 1000 -> 1.57 ms.
"""

from dataclasses import dataclass, field
import math

from scipy.constants import c as C_VACUUM

from .errors import ParameterError

__all__ = ["MemoryParams", "CavityParams", "ProtocolParams", "C_VACUUM"]


def _require(cond, msg):
    if not cond:
        raise ParameterError(msg)


@dataclass(frozen=True)
class MemoryParams:
    """Physical constants of the hot alkali / noble-gas hybrid cell.

    Attributes
    ----------
    d : float
        Optical depth of the alkali vapor (dimensionless).
    gamma_e : float
        Excited-state decoherence rate, half the collision-broadened
        linewidth (a quoted 27 GHz linewidth means gamma_e = 13.5e9).
    delta_s : float
        Signal detuning from the excited state, s^-1.
    delta_hf : float
        Ground-state hyperfine splitting between |g> and |s>, s^-1.
    J : float
        Spin-exchange coupling between alkali and noble-gas collective
        spins, s^-1.
    gamma_s, gamma_k : float
        Collective alkali / noble-gas spin decoherence rates, s^-1.
        gamma_k <= gamma_s always (noble-gas spins decohere far slower).
    delta_k : float
        Alkali-noble two-spin detuning, s^-1.  May take any real value;
        large |delta_k| decouples the species.
    """

    d: float
    gamma_e: float
    delta_s: float
    delta_hf: float
    J: float
    gamma_s: float
    gamma_k: float
    delta_k: float = 0.0

    def __post_init__(self):
        for name in ("d", "gamma_e", "delta_s", "delta_hf", "J"):
            _require(getattr(self, name) > 0, f"MemoryParams.{name} must be > 0")
        # gamma_s = gamma_k = 0 is the idealized no-decoherence limit used in
        # oracle tests; only negativity is rejected.
        _require(self.gamma_s >= 0, "MemoryParams.gamma_s must be >= 0")
        _require(self.gamma_k >= 0, "MemoryParams.gamma_k must be >= 0")
        _require(self.gamma_k <= self.gamma_s,
                 "MemoryParams.gamma_k must not exceed gamma_s")
        for name in ("d", "gamma_e", "delta_s", "delta_hf", "J",
                     "gamma_s", "gamma_k", "delta_k"):
            _require(math.isfinite(getattr(self, name)),
                     f"MemoryParams.{name} must be finite")

    @property
    def far_detuned(self) -> bool:
        """True when delta_s > 10*gamma_e, the regime where the closed-form
        stage-1 efficiency is valid."""
        return self.delta_s > 10.0 * self.gamma_e

    @property
    def transfer_time(self) -> float:
        """Optimal alkali->noble transfer duration pi/(2J), seconds."""
        return math.pi / (2.0 * self.J)


@dataclass(frozen=True)
class CavityParams:
    """Ring-cavity quantities.

    phi_s/phi_a are the signal / anti-Stokes roundtrip phases; maximum
    four-wave-mixing suppression requires phi_s = 0 (resonant) and
    phi_a = pi (anti-resonant).  zeta1 is the dimensionless coupling
    strength entering the readout g2.
    """

    r: float
    roundtrip_length: float
    phi_s: float = 0.0
    phi_a: float = math.pi
    zeta1: float = 1.0
    roundtrip_time: float = field(init=False)

    def __post_init__(self):
        _require(0.0 < self.r < 1.0, "CavityParams.r must lie in (0, 1)")
        _require(self.roundtrip_length > 0,
                 "CavityParams.roundtrip_length must be > 0")
        _require(self.zeta1 > 0, "CavityParams.zeta1 must be > 0")
        object.__setattr__(self, "roundtrip_time",
                           self.roundtrip_length / C_VACUUM)

    @property
    def t_r(self) -> float:
        """Input coupler amplitude transmission sqrt(1 - r^2)."""
        return math.sqrt(1.0 - self.r * self.r)

    @property
    def is_tuned(self) -> bool:
        """Resonant signal / anti-resonant anti-Stokes tuning."""
        return (abs(self.phi_s) < 1e-9
                and abs(self.phi_a - math.pi) < 1e-9)


@dataclass(frozen=True)
class ProtocolParams:
    """Link, detector, and source quantities for the repeater protocol.

    Lengths are in km, times in seconds, rates in s^-1.  alpha2/beta2 are
    the beam-splitter reflection/transmission probabilities and must sum
    to one.  eta_s/eta_r/F_re are normally bound to the physics-core
    outputs by the profile loader; they are plain numbers here so the
    protocol layer stays a pure function of its inputs.
    """

    L0_km: float
    alpha2: float
    beta2: float
    eta_d: float
    eta_c: float
    eta_st: float
    lambda_dark: float
    T_d: float
    p1: float
    p_charge: float
    rep_rate: float
    eta_s: float
    eta_r: float
    t_trans: float
    F_targ: float
    F_re: float
    n: int = 2
    m_mux: int = 1
    L_att_km: float = 22.0
    c_fiber: float = 2.0e8

    def __post_init__(self):
        _require(abs(self.alpha2 + self.beta2 - 1.0) <= 1e-12,
                 "alpha2 + beta2 must equal 1 within 1e-12")
        for name in ("alpha2", "beta2", "eta_d", "eta_c", "eta_st", "p1",
                     "p_charge", "eta_s", "eta_r", "F_targ", "F_re"):
            v = getattr(self, name)
            _require(0.0 <= v <= 1.0, f"ProtocolParams.{name} must lie in [0, 1]")
        _require(self.L0_km >= 0, "ProtocolParams.L0_km must be >= 0")
        _require(self.L_att_km > 0, "ProtocolParams.L_att_km must be > 0")
        _require(self.c_fiber > 0, "ProtocolParams.c_fiber must be > 0")
        _require(self.lambda_dark >= 0, "ProtocolParams.lambda_dark must be >= 0")
        _require(self.T_d > 0, "ProtocolParams.T_d must be > 0")
        _require(self.rep_rate > 0, "ProtocolParams.rep_rate must be > 0")
        _require(self.t_trans >= 0, "ProtocolParams.t_trans must be >= 0")
        _require(isinstance(self.n, int) and self.n >= 0,
                 "ProtocolParams.n must be an integer >= 0")
        _require(isinstance(self.m_mux, int) and self.m_mux >= 1,
                 "ProtocolParams.m_mux must be an integer >= 1")

    @property
    def t_ch(self) -> float:
        """Mean source charging time 1/(R*p), seconds."""
        return 1.0 / (self.rep_rate * self.p_charge)

    @property
    def eta_tot(self) -> float:
        """Combined storage * retrieval * detection efficiency."""
        return self.eta_s * self.eta_r * self.eta_d
