"""Closed-form memory and cavity quantities for the hybrid-gas cell.

Everything here is a pure, stateless function of :class:`MemoryParams`
and :class:`CavityParams`: storage/retrieval efficiencies, intracavity
decay rates, the four-wave-mixing suppression factor, the readout g2 and
fidelity, and the derived cavity geometry.  No state, safe to call
concurrently.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import InfeasibleConfigError, ParameterError
from .params import C_VACUUM, CavityParams, MemoryParams

__all__ = [
    "complex_detunings",
    "storage_efficiency",
    "cavity_decay",
    "fwm_suppression_factor",
    "optimal_reflectivity",
    "cavity_geometry",
    "readout_g2",
    "readout_fidelity",
    "calibrate_zeta1",
    "validity_report",
]


class ComplexDetunings(NamedTuple):
    gamma_s: complex          # gamma_e - i*delta_s
    gamma_a: complex          # gamma_e - i*(delta_s + delta_hf)
    gamma_a_plus: complex     # gamma_e - i*(delta_s + 2*delta_hf)


class StorageEfficiency(NamedTuple):
    eta1: float   # optical stage: photon -> alkali spin wave
    eta2: float   # magnetic stage: alkali -> noble-gas spin wave
    eta_s: float  # total, eta1 * eta2


class CavityDecay(NamedTuple):
    kappa_s: complex        # Stokes decay rate c*d*gamma_e/(L*Gamma_s)
    kappa_a: complex        # anti-Stokes decay rate, uses Gamma_a^+
    mu_s: float             # roundtrip amplitude transmission, signal
    mu_a: float             # roundtrip amplitude transmission, anti-Stokes
    kappa_tilde_s: complex  # resonant cavity decay rate of the signal
    kappa_tilde_a: complex  # anti-resonant decay rate of the anti-Stokes


class CavityGeometry(NamedTuple):
    kappa_c: float           # cavity linewidth, same convention as delta_hf
    bandwidth: float         # memory bandwidth bound 0.3*kappa_c
    roundtrip_length: float  # m
    roundtrip_time: float    # s


def complex_detunings(m: MemoryParams) -> ComplexDetunings:
    """Complex detunings of the signal and anti-Stokes fields.

    Gamma_s = gamma_e - i*delta_s; the anti-Stokes detuning is
    delta_a = delta_s + delta_hf, and the cavity decay of the anti-Stokes
    uses the shifted Gamma_a^+ = gamma_e - i*(delta_a + delta_hf).
    """
    delta_a = m.delta_s + m.delta_hf
    return ComplexDetunings(
        gamma_s=complex(m.gamma_e, -m.delta_s),
        gamma_a=complex(m.gamma_e, -delta_a),
        gamma_a_plus=complex(m.gamma_e, -(delta_a + m.delta_hf)),
    )


def _check_far_detuned(m: MemoryParams):
    if not m.far_detuned:
        raise ParameterError(
            "closed-form stage-1 efficiency requires the far-detuned regime "
            f"delta_s > 10*gamma_e (got delta_s/gamma_e = "
            f"{m.delta_s / m.gamma_e:.3g})")


def storage_efficiency(m: MemoryParams) -> StorageEfficiency:
    """Optimal two-stage storage efficiency.

    Stage 1 (photon -> alkali spin wave, cavity-assisted Raman):
        eta1 = 1 - sqrt(d)*gamma_e / (sqrt(2)*delta_s)
    valid in the far-detuned, strong-coupling regime with a lossless,
    optimally tuned cavity; it is an upper bound for any concrete control
    pulse.  Stage 2 (spin-exchange transfer over time pi/(2J)):
        eta2 = exp(-pi*(gamma_s + gamma_k)/(2J))

    Returns
    -------
    StorageEfficiency
        (eta1, eta2, eta_s) with eta_s = eta1*eta2.

    Raises
    ------
    ParameterError
        Outside the far-detuned regime, or when sqrt(d)*gamma_e >=
        sqrt(2)*delta_s makes eta1 non-positive.
    """
    _check_far_detuned(m)
    eta1 = 1.0 - math.sqrt(m.d) * m.gamma_e / (math.sqrt(2.0) * m.delta_s)
    if eta1 <= 0.0:
        raise ParameterError(
            "parameters outside validity: sqrt(d)*gamma_e >= sqrt(2)*delta_s "
            f"gives eta1 = {eta1:.3g} <= 0")
    eta2 = math.exp(-math.pi * (m.gamma_s + m.gamma_k) / (2.0 * m.J))
    return StorageEfficiency(eta1, eta2, eta1 * eta2)


def cavity_decay(m: MemoryParams, c: CavityParams) -> CavityDecay:
    """Intracavity decay rates and roundtrip transmissions.

    kappa_s = c*d*gamma_e/(L*Gamma_s) and kappa_a uses Gamma_a^+; the
    roundtrip amplitude transmission is mu = r*exp(-Re(kappa)*tau) and the
    effective (anti-)resonant rates follow from

        1/kappa_tilde = tau * mu*e^{i phi} / (1 - mu*e^{i phi}).

    At exact anti-resonance (phi_a = pi) kappa_tilde_a is real and
    negative with magnitude (1 + mu_a)/(tau*mu_a); the anti-Stokes
    amplitude is then only meaningful adiabatically (see the dynamics
    module).

    Raises
    ------
    InfeasibleConfigError
        When mu*e^{i phi} = 1 (divergent kappa_tilde: a lossless resonant
        roundtrip is unphysical).
    """
    det = complex_detunings(m)
    tau = c.roundtrip_time
    scale = C_VACUUM * m.d * m.gamma_e / c.roundtrip_length
    kappa_s = scale / det.gamma_s
    kappa_a = scale / det.gamma_a_plus
    mu_s = c.r * math.exp(-kappa_s.real * tau)
    mu_a = c.r * math.exp(-kappa_a.real * tau)

    def tilde(mu: float, phi: float) -> complex:
        loop = mu * complex(math.cos(phi), math.sin(phi))
        if abs(1.0 - loop) < 1e-15:
            raise InfeasibleConfigError(
                "mu*exp(i*phi) = 1: lossless resonant roundtrip makes "
                "kappa_tilde divergent")
        return (1.0 - loop) / (tau * loop)

    return CavityDecay(kappa_s, kappa_a, mu_s, mu_a,
                       tilde(mu_s, c.phi_s), tilde(mu_a, c.phi_a))


def _alpha_s(m: MemoryParams, exact: bool) -> float:
    """Signal roundtrip absorption factor.

    The default is the far-detuned approximation exp(-d*(gamma_e/delta_s)^2)
    used by the suppression-factor formula; ``exact=True`` uses the full
    Re(kappa_s)*tau = d*gamma_e^2/(gamma_e^2 + delta_s^2).  They differ at
    O((gamma_e/delta_s)^4).
    """
    if exact:
        g2 = m.gamma_e * m.gamma_e
        return math.exp(-m.d * g2 / (g2 + m.delta_s * m.delta_s))
    return math.exp(-m.d * (m.gamma_e / m.delta_s) ** 2)


def _check_tuned(c: CavityParams):
    if not c.is_tuned:
        raise ParameterError(
            "suppression formula is only valid at the tuned operating point "
            f"phi_s = 0, phi_a = pi (got phi_s = {c.phi_s!r}, "
            f"phi_a = {c.phi_a!r})")


def fwm_suppression_factor(m: MemoryParams, c: CavityParams,
                           exact_alpha: bool = False) -> float:
    """Four-wave-mixing noise suppression factor x = (1 - mu_s)/(2*mu_s).

    Requires the tuned cavity (signal resonant, anti-Stokes anti-resonant).
    mu_s = r*alpha_s with the approximate alpha_s by default; pass
    ``exact_alpha=True`` for the exact roundtrip absorption, which matches
    ``cavity_decay(...).mu_s``.
    """
    _check_tuned(c)
    mu = c.r * _alpha_s(m, exact_alpha)
    return (1.0 - mu) / (2.0 * mu)


def optimal_reflectivity(m: MemoryParams, exact_alpha: bool = False) -> float:
    """Input-coupler reflectivity maximizing storage/retrieval efficiency,
    r = (1 - sqrt(1 - alpha_s^2)) / alpha_s."""
    a = _alpha_s(m, exact_alpha)
    return (1.0 - math.sqrt(1.0 - a * a)) / a


def cavity_geometry(m: MemoryParams, r: float) -> CavityGeometry:
    """Cavity linewidth, memory bandwidth, and roundtrip geometry.

    kappa_c = 8*delta_hf*(1-r)/r (same frequency convention as delta_hf),
    bandwidth = 0.3*kappa_c, and the roundtrip length places the signal
    and anti-Stokes on opposite resonance conditions:
    L = pi*c/(2*delta_hf_angular) = c/(4*delta_hf).  This is the single
    place where the stored ordinary frequency is converted to angular.
    """
    if not (0.0 < r < 1.0):
        raise ParameterError(f"reflectivity must lie in (0, 1), got {r!r}")
    kappa_c = 8.0 * m.delta_hf * (1.0 - r) / r
    length = C_VACUUM / (4.0 * m.delta_hf)
    return CavityGeometry(kappa_c, 0.3 * kappa_c, length, length / C_VACUUM)


def readout_g2(m: MemoryParams, c: CavityParams,
               exact_alpha: bool = False) -> float:
    """Second-order autocorrelation of the retrieved signal,
    g2 = 2*x^2*zeta1*|Gamma_s|^2/|Gamma_a|^2 (tuned cavity, single-photon
    input, no mode mismatch)."""
    det = complex_detunings(m)
    x = fwm_suppression_factor(m, c, exact_alpha)
    return (2.0 * x * x * c.zeta1
            * abs(det.gamma_s) ** 2 / abs(det.gamma_a) ** 2)


def readout_fidelity(g2: float) -> float:
    """Readout fidelity F_re = 1/(1 + SNR^-1) with SNR^-1 = g2/2."""
    if g2 < 0:
        raise ParameterError(f"g2 must be >= 0, got {g2!r}")
    return 1.0 / (1.0 + 0.5 * g2)


def calibrate_zeta1(m: MemoryParams, c: CavityParams,
                    f_re_target: float, exact_alpha: bool = False) -> float:
    """Coupling strength zeta1 reproducing a target readout fidelity.

    Closed-form inversion of the g2 expression through F_re = 1/(1+g2/2):
    zeta1 = (1/F - 1) * |Gamma_a|^2 / (x^2 * |Gamma_s|^2).  The roundtrip
    readout_fidelity(readout_g2(...)) then reproduces the target to
    floating-point accuracy (well inside 1e-9 relative).
    """
    if not (0.0 < f_re_target < 1.0):
        raise ParameterError(
            f"F_re target must lie strictly in (0, 1), got {f_re_target!r}")
    det = complex_detunings(m)
    x = fwm_suppression_factor(m, c, exact_alpha)
    if x <= 0.0:
        raise ParameterError("suppression factor must be > 0 to calibrate zeta1")
    zeta1 = ((1.0 / f_re_target - 1.0)
             * abs(det.gamma_a) ** 2 / (x * x * abs(det.gamma_s) ** 2))
    if zeta1 <= 0.0:
        raise ParameterError(f"implied zeta1 = {zeta1!r} is not positive")
    return zeta1


def validity_report(m: MemoryParams, c: CavityParams) -> list[str]:
    """Regime warnings for the closed forms; empty list means fully valid."""
    notes = []
    if not m.far_detuned:
        notes.append(
            f"not far-detuned: delta_s/gamma_e = {m.delta_s / m.gamma_e:.3g} "
            "<= 10; closed-form eta1 invalid")
    if not c.is_tuned:
        notes.append(
            "cavity not at the phi_s = 0, phi_a = pi operating point; "
            "suppression/g2 formulas do not apply")
    if c.zeta1 < 10.0:
        notes.append(
            f"zeta1 = {c.zeta1:.4g} only mildly satisfies the strong-coupling "
            "assumption zeta1 >> 1")
    if m.J < 50.0 * (m.gamma_s + m.gamma_k):
        notes.append(
            f"J/(gamma_s+gamma_k) = {m.J / (m.gamma_s + m.gamma_k):.3g} < 50; "
            "transfer-stage closed form degrades outside strong coupling")
    return notes
