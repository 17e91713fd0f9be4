"""Time-domain integration of the intracavity memory equations.

State variables are the intracavity amplitudes (s, a, b, k): signal,
anti-Stokes, collective alkali spin wave, collective noble-gas spin wave.
With g0 = sqrt(d*gamma_e/tau) the equations of motion are

    ds/dt = -kt_s*s + i*g0*(Omega/Gamma_s)*b
            + e^{-i phi_s} * t_r/(mu_s*sqrt(tau)) * S_in(t)
    da/dt = -kt_a*a + i*g0*(Omega/Gamma_a)*conj(b)
            + e^{-i phi_a} * t_r/(mu_a*sqrt(tau)) * A_in(t)
    db/dt = -gamma_s*b + i*g0*(-conj(Omega)/Gamma_s*s + Omega/Gamma_a*a)
            - (1/Gamma_s + 1/conj(Gamma_a))*|Omega|^2*b - i*J*k
    dk/dt = -(gamma_k + i*delta_k)*k - i*J*b

Two deliberate deviations from the literal source equations, never load
bearing beyond what the closed-form g2 already covers:

* the anti-Stokes source term couples to conj(b), not to a itself: the
  propagating-field form couples A to B^dagger, and the intracavity
  reduction's a-to-a self-coupling is inconsistent with it;
* at the tuned operating point (phi_a = pi) the anti-resonant decay rate
  kt_a is real and NEGATIVE, i.e. the literal ODE is anti-damped and
  cannot be integrated.  The anti-Stokes amplitude is therefore treated
  adiabatically by default (a = source/kt_a, which is the physically
  suppressed anti-resonant response); ``antistokes="dynamic"`` integrates
  the literal equation and refuses anti-damped configurations.

Stages whose optical fields are undriven (Omega = 0, no input) evolve
(b, k) numerically while s and a follow their exact exponential decay,
which keeps millisecond-long spin-exchange stages non-stiff without
approximating the spin dynamics.

Each integration is an independent, deterministic, single-threaded
computation; trajectories are immutable once produced.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationError, ParameterError, RegimeError
from .memory import cavity_decay, complex_detunings, storage_efficiency
from .params import CavityParams, MemoryParams

__all__ = [
    "ControlPulse",
    "InputSignal",
    "Stage",
    "GridSpec",
    "MemoryTrajectory",
    "StorageResult",
    "RetrievalResult",
    "transfer_stage",
    "storage_stages",
    "retrieval_stages",
    "simulate",
    "adiabatic_trajectory",
    "simulate_storage",
    "simulate_retrieval",
]

DECOUPLE_FACTOR = 100.0  # stage-1 detuning delta_k = 100*J decouples b from k


@dataclass(frozen=True)
class ControlPulse:
    """Control-field Rabi frequency Omega(t) on a finite window.

    shape:
        "constant"  amplitude inside [t_on, t_off]
        "gaussian"  amplitude*exp(-(t-center)^2/(2*width^2)) inside the window
        "table"     linear interpolation of (times, values), zero outside
    """

    shape: str = "constant"
    amplitude: float = 0.0
    t_on: float = 0.0
    t_off: float = 0.0
    center: float = 0.0
    width: float = 1.0
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.shape not in ("constant", "gaussian", "table"):
            raise ParameterError(f"unknown pulse shape {self.shape!r}")
        if self.amplitude < 0:
            raise ParameterError("pulse amplitude must be >= 0")
        if self.t_off < self.t_on:
            raise ParameterError("pulse window must have t_off >= t_on")
        if self.shape == "table" and len(self.times) != len(self.values):
            raise ParameterError("pulse table times/values length mismatch")

    def __call__(self, t: float) -> float:
        if self.shape == "table":
            return float(np.interp(t, self.times, self.values, left=0.0,
                                   right=0.0))
        if not (self.t_on <= t <= self.t_off):
            return 0.0
        if self.shape == "constant":
            return self.amplitude
        arg = (t - self.center) / self.width
        return self.amplitude * math.exp(-0.5 * arg * arg)

    @property
    def peak(self) -> float:
        if self.shape == "table":
            return max(map(abs, self.values), default=0.0)
        return self.amplitude


@dataclass(frozen=True)
class InputSignal:
    """Input signal envelope S_in(t) with norm(S)^2 integrating to the
    photon number.  The Gaussian constructor is truncated to [0, duration]
    and normalized analytically on that window."""

    duration: float
    envelope: Callable[[float], complex]
    photons: float = 1.0

    @classmethod
    def gaussian(cls, duration: float, photons: float = 1.0,
                 width: float | None = None) -> "InputSignal":
        if duration <= 0:
            raise ParameterError("input signal duration must be > 0")
        w = width if width is not None else duration / 6.0
        t0 = duration / 2.0
        # integral of exp(-(t-t0)^2/w^2) over [0, duration]
        norm = w * math.sqrt(math.pi) * math.erf(t0 / w)
        amp = math.sqrt(photons / norm)

        def env(t: float) -> complex:
            if not (0.0 <= t <= duration):
                return 0.0
            return amp * math.exp(-0.5 * ((t - t0) / w) ** 2)

        return cls(duration=duration, envelope=env, photons=photons)

    @classmethod
    def none(cls) -> "InputSignal":
        return cls(duration=0.0, envelope=lambda t: 0.0, photons=0.0)

    def check_bandwidth(self, m: MemoryParams) -> bool:
        """Sequential storage is optimal for T << 1/gamma_s."""
        return self.duration * m.gamma_s < 0.1 if m.gamma_s > 0 else True


@dataclass(frozen=True)
class Stage:
    """One protocol window with fixed detuning and drives.

    delta_k switches are instantaneous steps by default; a linear ramp of
    duration delta_k_ramp from the previous stage's value is available.
    """

    duration: float
    delta_k: float = 0.0
    pulse: ControlPulse | None = None
    signal_in: InputSignal | None = None
    label: str = ""
    delta_k_ramp: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise ParameterError("stage duration must be >= 0")
        if self.delta_k_ramp < 0 or self.delta_k_ramp > self.duration:
            raise ParameterError("delta_k_ramp must lie in [0, duration]")
        if self.pulse is not None and self.pulse.t_off > self.duration + 1e-15:
            raise ParameterError("pulse window extends beyond its stage")

    @property
    def driven(self) -> bool:
        return ((self.pulse is not None and self.pulse.peak > 0.0)
                or (self.signal_in is not None and self.signal_in.photons > 0.0))


@dataclass(frozen=True)
class GridSpec:
    """Integrator controls.  max_step_factor bounds the step at
    factor/max(active rates); fixed_step selects a classic RK4 grid for
    bitwise-reproducibility studies."""

    rtol: float = 1e-8
    atol: float = 1e-12
    method: str = "DOP853"
    max_step_factor: float = 0.1
    samples_per_stage: int = 200
    fixed_step: float | None = None
    max_steps: int = 2_000_000
    regime_min_ratio: float = 10.0

    def error_estimate(self, value: float) -> float:
        """Conservative milestone error bound used by the convergence
        property: halving rtol must move milestones by less than this."""
        return 10.0 * self.rtol * abs(value) + 10.0 * self.atol


@dataclass(frozen=True)
class MemoryTrajectory:
    """Sampled trajectory of the intracavity amplitudes.

    emitted[i] is the cumulative signal energy coupled out through the
    mirror up to t[i] (the coupler's share (1-r)/(1-mu_s) of the signal
    cavity decay).  stage_bounds[j] indexes the last sample of stage j.
    """

    t: np.ndarray
    s: np.ndarray
    a: np.ndarray
    b: np.ndarray
    k: np.ndarray
    emitted: np.ndarray
    stage_bounds: tuple[int, ...]
    grid: GridSpec
    milestones: dict = field(default_factory=dict)

    def stage_end(self, j: int) -> int:
        return self.stage_bounds[j]

    @property
    def spin_norm(self) -> np.ndarray:
        """|b|^2 + |k|^2 along the trajectory."""
        return np.abs(self.b) ** 2 + np.abs(self.k) ** 2


class StorageResult(NamedTuple):
    eta1_num: float
    eta2_num: float
    eta_s_num: float
    eta2_closed: float
    trajectory: MemoryTrajectory


class RetrievalResult(NamedTuple):
    eta_r_num: float
    eta_r_closed: float
    trajectory: MemoryTrajectory


def transfer_stage(m: MemoryParams, duration: float | None = None,
                   delta_k: float = 0.0, label: str = "transfer") -> Stage:
    """Undriven spin-exchange window; duration defaults to the optimal
    half-swap pi/(2J)."""
    return Stage(duration=m.transfer_time if duration is None else duration,
                 delta_k=delta_k, label=label)


def storage_stages(m: MemoryParams, pulse: ControlPulse,
                   signal: InputSignal,
                   decouple_factor: float = DECOUPLE_FACTOR) -> tuple[Stage, ...]:
    """Two-stage storage: optical write with the species decoupled
    (delta_k = decouple_factor*J), then the resonant transfer window."""
    if decouple_factor < DECOUPLE_FACTOR:
        raise ParameterError(
            f"stage-1 decoupling requires delta_k >= {DECOUPLE_FACTOR:g}*J")
    dur1 = max(signal.duration, pulse.t_off)
    return (
        Stage(duration=dur1, delta_k=decouple_factor * m.J, pulse=pulse,
              signal_in=signal, label="write"),
        transfer_stage(m, label="transfer b->k"),
    )


def retrieval_stages(m: MemoryParams, pulse: ControlPulse | None,
                     readout_duration: float | None = None,
                     decouple_factor: float = DECOUPLE_FACTOR) -> tuple[Stage, ...]:
    """Two-phase retrieval: resonant transfer k->b, then optical readout
    with the species decoupled.  ``pulse=None`` runs the transfer phase
    only."""
    stages = [transfer_stage(m, label="transfer k->b")]
    if pulse is not None:
        dur2 = pulse.t_off if readout_duration is None else readout_duration
        if dur2 > 0:
            stages.append(Stage(duration=dur2,
                                delta_k=decouple_factor * m.J, pulse=pulse,
                                label="read"))
    return tuple(stages)


# --------------------------------------------------------------------------
# integration core

class _Rates:
    """Precomputed coefficients shared by all stages of one run."""

    def __init__(self, m: MemoryParams, c: CavityParams):
        det = complex_detunings(m)
        dec = cavity_decay(m, c)
        tau = c.roundtrip_time
        self.m, self.c = m, c
        self.gamma_s_det = det.gamma_s
        self.gamma_a_det = det.gamma_a
        self.kt_s = dec.kappa_tilde_s
        self.kt_a = dec.kappa_tilde_a
        self.g0 = math.sqrt(m.d * m.gamma_e / tau)
        self.drive_s = cmath.exp(-1j * c.phi_s) * c.t_r / (dec.mu_s * math.sqrt(tau))
        self.drive_a = cmath.exp(-1j * c.phi_a) * c.t_r / (dec.mu_a * math.sqrt(tau))
        self.loss = (1.0 / det.gamma_s + 1.0 / det.gamma_a.conjugate())
        # coupler's share of the signal cavity decay: out-coupled vs absorbed
        one_minus_mu = 1.0 - dec.mu_s
        share = (1.0 - c.r) / one_minus_mu if one_minus_mu > 0 else 0.0
        self.kappa_out = dec.kappa_tilde_s.real * share

    def max_rate(self, stage: Stage, include_kt_a: bool) -> float:
        rates = [abs(self.kt_s), self.m.J, abs(stage.delta_k),
                 self.m.gamma_s, self.m.gamma_k]
        if stage.pulse is not None:
            w = stage.pulse.peak
            rates.append(w)
            rates.append(abs(self.loss) * w * w)
        if include_kt_a:
            rates.append(abs(self.kt_a))
        return max(rates)


def _delta_k_fn(stage: Stage, prev_delta_k: float):
    if stage.delta_k_ramp <= 0.0:
        dk = stage.delta_k
        return lambda t: dk
    ramp, d0, d1 = stage.delta_k_ramp, prev_delta_k, stage.delta_k
    return lambda t: d1 if t >= ramp else d0 + (d1 - d0) * t / ramp


def _solve_stage(rhs, y0, duration, grid: GridSpec, max_rate, n_out, label):
    t_eval = np.linspace(0.0, duration, n_out)
    if grid.fixed_step is not None:
        return _rk4_stage(rhs, y0, duration, grid, t_eval, label)
    max_step = np.inf
    if max_rate > 0:
        max_step = grid.max_step_factor / max_rate
        if duration / max_step > grid.max_steps:
            raise IntegrationError(
                f"stage {label!r} is stiff: resolving rate {max_rate:.3e}/s "
                f"over {duration:.3e}s needs > {grid.max_steps} steps")
    sol = solve_ivp(rhs, (0.0, duration), y0, method=grid.method,
                    t_eval=t_eval, rtol=grid.rtol, atol=grid.atol,
                    max_step=max_step)
    if not sol.success:
        raise IntegrationError(
            f"integrator failed in stage {label!r}: {sol.message} "
            f"(fastest rate {max_rate:.3e}/s)")
    bad = ~np.isfinite(sol.y).all(axis=0)
    if bad.any():
        t_bad = sol.t[int(np.argmax(bad))]
        raise IntegrationError(
            f"non-finite amplitudes in stage {label!r} at t = {t_bad:.6e}s")
    return sol.t, sol.y


def _rk4_stage(rhs, y0, duration, grid: GridSpec, t_eval, label):
    h = grid.fixed_step
    n = max(1, int(math.ceil(duration / h)))
    if n > grid.max_steps:
        raise IntegrationError(
            f"stage {label!r}: fixed step {h:.3e}s needs {n} steps "
            f"(> {grid.max_steps})")
    ts = np.linspace(0.0, duration, n + 1)
    h = ts[1] - ts[0] if n > 0 else duration
    ys = np.empty((len(y0), n + 1), dtype=complex)
    y = np.asarray(y0, dtype=complex)
    ys[:, 0] = y
    for i in range(n):
        t = ts[i]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[:, i + 1] = y
    if not np.isfinite(ys).all():
        raise IntegrationError(f"non-finite amplitudes in stage {label!r}")
    # resample onto the requested output grid
    out = np.empty((len(y0), len(t_eval)), dtype=complex)
    for j in range(len(y0)):
        out[j] = np.interp(t_eval, ts, ys[j].real) \
            + 1j * np.interp(t_eval, ts, ys[j].imag)
    return t_eval, out


def simulate(m: MemoryParams, c: CavityParams, stages: Sequence[Stage],
             y0: tuple[complex, complex, complex, complex] = (0, 0, 0, 0),
             grid: GridSpec | None = None,
             antistokes: str = "adiabatic") -> MemoryTrajectory:
    """Integrate the full memory equations through a stage sequence.

    antistokes:
        "adiabatic"  a follows its algebraic steady state (default; the
                     only stable choice at the anti-resonant tuning)
        "dynamic"    integrate the a equation literally (rejected when
                     Re(kt_a) < 0 and the anti-Stokes is driven)
        "off"        a = 0 (pure Raman storage reference)

    Returns the sampled :class:`MemoryTrajectory`; local truncation error
    is controlled by grid.rtol/atol via an adaptive embedded Runge-Kutta
    pair (or a fixed-step RK4 when grid.fixed_step is set).
    """
    if antistokes not in ("adiabatic", "dynamic", "off"):
        raise ParameterError(f"unknown antistokes mode {antistokes!r}")
    grid = grid or GridSpec()
    rates = _Rates(m, c)

    t_parts, y_parts, bounds = [], [], []
    t_offset = 0.0
    state = np.array([*y0, 0.0], dtype=complex)  # s, a, b, k, emitted
    prev_dk = stages[0].delta_k if stages else 0.0
    n_samples = 0

    for stage in stages:
        if stage.duration == 0.0:
            continue
        dk_fn = _delta_k_fn(stage, prev_dk)
        prev_dk = stage.delta_k
        n_out = grid.samples_per_stage + 1

        if not stage.driven:
            t_loc, y_loc = _undriven_stage(rates, state, stage, dk_fn, grid,
                                           n_out, antistokes)
        else:
            if antistokes == "dynamic" and rates.kt_a.real < 0:
                raise RegimeError(
                    "literal anti-Stokes integration is anti-damped at this "
                    f"tuning (Re kt_a = {rates.kt_a.real:.3e}/s < 0); use "
                    "antistokes='adiabatic'")
            rhs = _full_rhs(rates, stage, dk_fn, antistokes)
            max_rate = rates.max_rate(stage, include_kt_a=(antistokes == "dynamic"))
            t_loc, y_loc = _solve_stage(rhs, state, stage.duration, grid,
                                        max_rate, n_out, stage.label)
            if antistokes == "adiabatic":
                y_loc = y_loc.copy()
                y_loc[1] = _adiabatic_a(rates, stage, t_loc, y_loc[2])

        state = y_loc[:, -1].copy()
        t_parts.append(t_loc + t_offset)
        y_parts.append(y_loc)
        t_offset += stage.duration
        n_samples += len(t_loc)
        bounds.append(n_samples - 1)

    if not t_parts:
        raise ParameterError("schedule contains no stage with positive duration")
    t = np.concatenate(t_parts)
    y = np.concatenate(y_parts, axis=1)
    return MemoryTrajectory(t=t, s=y[0], a=y[1], b=y[2], k=y[3],
                            emitted=y[4].real.copy(),
                            stage_bounds=tuple(bounds), grid=grid)


def _full_rhs(rates: _Rates, stage: Stage, dk_fn, antistokes: str):
    m = rates.m
    pulse = stage.pulse
    signal = stage.signal_in
    g0, loss = rates.g0, rates.loss
    kt_s, kt_a = rates.kt_s, rates.kt_a
    gs_det, ga_det = rates.gamma_s_det, rates.gamma_a_det
    drive_s, drive_a = rates.drive_s, rates.drive_a
    kout = rates.kappa_out
    dynamic_a = antistokes == "dynamic"
    adiabatic_a = antistokes == "adiabatic"

    def rhs(t, y):
        s, a, b, k = y[0], y[1], y[2], y[3]
        omega = pulse(t) if pulse is not None else 0.0
        sin_t = signal.envelope(t) if signal is not None else 0.0
        if adiabatic_a:
            a = (1j * g0 * omega / ga_det * b.conjugate()) / kt_a
        elif not dynamic_a:
            a = 0.0
        ds = -kt_s * s + 1j * g0 * omega / gs_det * b + drive_s * sin_t
        db = (-m.gamma_s * b
              + 1j * g0 * (-omega / gs_det * s + omega / ga_det * a)
              - loss * omega * omega * b
              - 1j * m.J * k)
        dk = -(m.gamma_k + 1j * dk_fn(t)) * k - 1j * m.J * b
        de = 2.0 * kout * (s.real * s.real + s.imag * s.imag)
        if dynamic_a:
            da = -kt_a * a + 1j * g0 * omega / ga_det * b.conjugate()
        else:
            da = 0.0
        return np.array([ds, da, db, dk, de], dtype=complex)

    return rhs


def _adiabatic_a(rates: _Rates, stage: Stage, t_loc, b_vals):
    pulse = stage.pulse
    if pulse is None:
        return np.zeros_like(b_vals)
    omegas = np.array([pulse(t) for t in t_loc])
    return (1j * rates.g0 * omegas / rates.gamma_a_det
            * np.conj(b_vals)) / rates.kt_a


def _undriven_stage(rates: _Rates, state, stage: Stage, dk_fn,
                    grid: GridSpec, n_out, antistokes: str):
    """Omega = 0 and no input: the optical amplitudes decouple from the
    spins and decay exactly as s(t) = s0*exp(-kt_s*t); only (b, k) need
    numerical integration."""
    m = rates.m

    def rhs(t, y):
        b, k = y[0], y[1]
        db = -m.gamma_s * b - 1j * m.J * k
        dk = -(m.gamma_k + 1j * dk_fn(t)) * k - 1j * m.J * b
        return np.array([db, dk], dtype=complex)

    max_rate = max(m.J, abs(stage.delta_k), m.gamma_s, m.gamma_k)
    t_loc, bk = _solve_stage(rhs, state[2:4], stage.duration, grid,
                             max_rate, n_out, stage.label or "undriven")
    y = np.empty((5, len(t_loc)), dtype=complex)
    s0, a0, e0 = state[0], state[1], state[4]
    y[0] = s0 * np.exp(-rates.kt_s * t_loc)
    if antistokes == "dynamic" and rates.kt_a.real >= 0:
        y[1] = a0 * np.exp(-rates.kt_a * t_loc)
    else:
        y[1] = 0.0
    y[2], y[3] = bk[0], bk[1]
    # exact out-coupled energy of the decaying signal amplitude
    re = rates.kt_s.real
    if re > 0 and abs(s0) > 0:
        y[4] = e0 + (rates.kappa_out / re) * abs(s0) ** 2 \
            * (1.0 - np.exp(-2.0 * re * t_loc))
    else:
        y[4] = e0
    return t_loc, y


def adiabatic_trajectory(m: MemoryParams, c: CavityParams,
                         stages: Sequence[Stage],
                         y0: tuple[complex, complex] = (0, 0),
                         grid: GridSpec | None = None) -> MemoryTrajectory:
    """Bad-cavity reduction: both optical amplitudes are eliminated
    algebraically and only (b, k) are integrated; s and a are
    reconstructed from their steady-state expressions at every sample.

    Raises
    ------
    RegimeError
        When |kt_{s,a}| < regime_min_ratio * |g0*Omega/Gamma_{s,a}| for
        some driven stage (the elimination is not justified).
    """
    grid = grid or GridSpec()
    rates = _Rates(m, c)

    for stage in stages:
        if stage.pulse is None or stage.pulse.peak == 0.0:
            continue
        w = stage.pulse.peak
        ratio = min(
            abs(rates.kt_s) / (rates.g0 * w / abs(rates.gamma_s_det)),
            abs(rates.kt_a) / (rates.g0 * w / abs(rates.gamma_a_det)),
        )
        if ratio < grid.regime_min_ratio:
            raise RegimeError(
                f"bad-cavity regime violated in stage {stage.label!r}: "
                f"|kt|/(g0*Omega/Gamma) = {ratio:.3g} < "
                f"{grid.regime_min_ratio:g}")

    t_parts, y_parts, bounds = [], [], []
    t_offset = 0.0
    state = np.array(y0, dtype=complex)
    prev_dk = stages[0].delta_k if stages else 0.0
    n_samples = 0

    for stage in stages:
        if stage.duration == 0.0:
            continue
        dk_fn = _delta_k_fn(stage, prev_dk)
        prev_dk = stage.delta_k
        rhs = _reduced_rhs(rates, stage, dk_fn)
        max_rate = max(m.J, abs(stage.delta_k), m.gamma_s, m.gamma_k)
        if stage.pulse is not None:
            w = stage.pulse.peak
            eff = (rates.g0 * w / abs(rates.gamma_s_det)) ** 2 / abs(rates.kt_s)
            max_rate = max(max_rate, eff, abs(rates.loss) * w * w)
        t_loc, bk = _solve_stage(rhs, state, stage.duration, grid,
                                 max_rate, grid.samples_per_stage + 1,
                                 stage.label or "reduced")
        state = bk[:, -1].copy()
        y = np.empty((5, len(t_loc)), dtype=complex)
        y[2], y[3] = bk[0], bk[1]
        y[0], y[1] = _reconstruct_optical(rates, stage, t_loc, bk[0])
        y[4] = 0.0
        t_parts.append(t_loc + t_offset)
        y_parts.append(y)
        t_offset += stage.duration
        n_samples += len(t_loc)
        bounds.append(n_samples - 1)

    if not t_parts:
        raise ParameterError("schedule contains no stage with positive duration")
    t = np.concatenate(t_parts)
    y = np.concatenate(y_parts, axis=1)
    return MemoryTrajectory(t=t, s=y[0], a=y[1], b=y[2], k=y[3],
                            emitted=y[4].real.copy(),
                            stage_bounds=tuple(bounds), grid=grid)


def _reduced_rhs(rates: _Rates, stage: Stage, dk_fn):
    m = rates.m
    pulse, signal = stage.pulse, stage.signal_in
    g0, loss = rates.g0, rates.loss
    gs_det, ga_det = rates.gamma_s_det, rates.gamma_a_det

    def rhs(t, y):
        b, k = y[0], y[1]
        omega = pulse(t) if pulse is not None else 0.0
        sin_t = signal.envelope(t) if signal is not None else 0.0
        s = (1j * g0 * omega / gs_det * b + rates.drive_s * sin_t) / rates.kt_s
        a = (1j * g0 * omega / ga_det * b.conjugate()) / rates.kt_a
        db = (-m.gamma_s * b
              + 1j * g0 * (-omega / gs_det * s + omega / ga_det * a)
              - loss * omega * omega * b
              - 1j * m.J * k)
        dk = -(m.gamma_k + 1j * dk_fn(t)) * k - 1j * m.J * b
        return np.array([db, dk], dtype=complex)

    return rhs


def _reconstruct_optical(rates: _Rates, stage: Stage, t_loc, b_vals):
    pulse, signal = stage.pulse, stage.signal_in
    omegas = np.array([pulse(t) if pulse is not None else 0.0 for t in t_loc])
    sins = np.array([signal.envelope(t) if signal is not None else 0.0
                     for t in t_loc])
    s = (1j * rates.g0 * omegas / rates.gamma_s_det * b_vals
         + rates.drive_s * sins) / rates.kt_s
    a = (1j * rates.g0 * omegas / rates.gamma_a_det
         * np.conj(b_vals)) / rates.kt_a
    return s, a


def simulate_storage(m: MemoryParams, c: CavityParams, pulse: ControlPulse,
                     signal: InputSignal, grid: GridSpec | None = None,
                     antistokes: str = "adiabatic",
                     decouple_factor: float = DECOUPLE_FACTOR) -> StorageResult:
    """Sequential storage run: optical write then spin-exchange transfer.

    eta1_num is the alkali spin-wave population per input photon at the
    end of the write stage, eta2_num the b->k transfer ratio.  eta1_num is
    bounded above by the closed-form optimum for any concrete pulse;
    eta2_closed is the closed-form transfer efficiency for comparison.
    """
    stages = storage_stages(m, pulse, signal, decouple_factor)
    traj = simulate(m, c, stages, grid=grid, antistokes=antistokes)
    i1 = traj.stage_end(0)
    photons = signal.photons if signal.photons > 0 else 1.0
    eta1 = abs(traj.b[i1]) ** 2 / photons
    eta_s = abs(traj.k[-1]) ** 2 / photons
    eta2 = eta_s / eta1 if eta1 > 0.0 else 0.0
    eta2_closed = math.exp(-math.pi * (m.gamma_s + m.gamma_k) / (2.0 * m.J))
    traj.milestones.update(eta1_num=eta1, eta2_num=eta2, eta_s_num=eta_s,
                           eta2_closed=eta2_closed)
    return StorageResult(eta1, eta2, eta_s, eta2_closed, traj)


def simulate_retrieval(m: MemoryParams, c: CavityParams,
                       pulse: ControlPulse | None,
                       grid: GridSpec | None = None,
                       readout_duration: float | None = None,
                       antistokes: str = "adiabatic",
                       decouple_factor: float = DECOUPLE_FACTOR) -> RetrievalResult:
    """Retrieval run from a stored noble-gas excitation (k = 1).

    eta_r_num is the signal energy coupled out of the cavity per stored
    excitation; the closed-form reference eta_r = eta_s is reported
    alongside (NaN when the closed form is invalid for these parameters).
    """
    stages = retrieval_stages(m, pulse, readout_duration, decouple_factor)
    traj = simulate(m, c, stages, y0=(0, 0, 0, 1), grid=grid,
                    antistokes=antistokes)
    eta_r = float(traj.emitted[-1])
    try:
        eta_r_closed = storage_efficiency(m).eta_s
    except ParameterError:
        eta_r_closed = float("nan")
    traj.milestones.update(eta_r_num=eta_r, eta_r_closed=eta_r_closed,
                           transfer_b2=abs(traj.b[traj.stage_end(0)]) ** 2)
    return RetrievalResult(eta_r, eta_r_closed, traj)
