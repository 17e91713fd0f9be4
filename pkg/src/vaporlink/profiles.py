"""Parameter profiles: flat key-value files with mandatory unit suffixes.

Format: one ``key = value unit`` per line, ``#`` comments, UTF-8.  Every
numeric value carries an explicit unit (``delta_s = 2700 GHz``,
``T_d = 12.5 ns``, ``d = 100 dimensionless``); unknown keys, duplicate
keys, missing keys, and missing units are hard errors.  Derived fields
may be set to ``auto`` to bind them to the physics layer:

    cavity_r                 optimal reflectivity for these memory params
    cavity_roundtrip_length  from the cavity geometry
    cavity_zeta1             calibrated so the readout fidelity hits
                             F_re_target
    eta_s, eta_r             closed-form storage efficiency (eta_r = eta_s)
    F_re                     forward readout fidelity at the calibrated zeta1
    t_trans                  pi/(2J)
    p_charge                 charging model at (n, F_targ)

``gamma_e`` may be given as ``linewidth_fwhm`` instead (the full
collision-broadened linewidth, e.g. 27 GHz); the loader halves it, which
removes the classic factor-of-2 ambiguity.

Two profiles ship with the library: ``paper-sec5`` (physical
t_trans = pi/(2J)) and ``paper-fig4`` (t_trans pinned to 1.5 ms, as used
for the rate-vs-distance figures).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

from .errors import InfeasibleConfigError, ProfileError
from .memory import (calibrate_zeta1, cavity_geometry, optimal_reflectivity,
                     readout_fidelity, readout_g2, storage_efficiency)
from .params import CavityParams, MemoryParams, ProtocolParams
from .repeater import charging_model

__all__ = ["ParameterProfile", "parse_profile", "canonical_form",
           "load_profile", "builtin_names", "BUILTIN_PROFILES"]

BUILTIN_PROFILES = ("paper-sec5", "paper-fig4")

# key -> (dimension, canonical unit).  Dimensions define the accepted unit
# suffixes; values are stored in the canonical unit.
_FREQ = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}
_LEN_M = {"m": 1.0, "mm": 1e-3, "cm": 1e-2, "km": 1e3}
_LEN_KM = {"km": 1.0, "m": 1e-3}
_SPEED = {"m/s": 1.0}
_ANGLE = {"rad": 1.0}
_DIMLESS = {"dimensionless": 1.0}

_SCHEMA: dict[str, tuple[dict, str]] = {
    "d": (_DIMLESS, "dimensionless"),
    "gamma_e": (_FREQ, "Hz"),
    "delta_s": (_FREQ, "Hz"),
    "delta_hf": (_FREQ, "Hz"),
    "J": (_FREQ, "Hz"),
    "gamma_s": (_FREQ, "Hz"),
    "gamma_k": (_FREQ, "Hz"),
    "delta_k": (_FREQ, "Hz"),
    "cavity_r": (_DIMLESS, "dimensionless"),
    "cavity_phi_s": (_ANGLE, "rad"),
    "cavity_phi_a": (_ANGLE, "rad"),
    "cavity_zeta1": (_DIMLESS, "dimensionless"),
    "cavity_roundtrip_length": (_LEN_M, "m"),
    "F_re_target": (_DIMLESS, "dimensionless"),
    "L0": (_LEN_KM, "km"),
    "L_att": (_LEN_KM, "km"),
    "c_fiber": (_SPEED, "m/s"),
    "alpha2": (_DIMLESS, "dimensionless"),
    "beta2": (_DIMLESS, "dimensionless"),
    "eta_d": (_DIMLESS, "dimensionless"),
    "eta_c": (_DIMLESS, "dimensionless"),
    "eta_st": (_DIMLESS, "dimensionless"),
    "lambda_dark": (_FREQ, "Hz"),
    "T_d": (_TIME, "s"),
    "p1": (_DIMLESS, "dimensionless"),
    "p_charge": (_DIMLESS, "dimensionless"),
    "rep_rate": (_FREQ, "Hz"),
    "eta_s": (_DIMLESS, "dimensionless"),
    "eta_r": (_DIMLESS, "dimensionless"),
    "t_trans": (_TIME, "s"),
    "F_re": (_DIMLESS, "dimensionless"),
    "n": (_DIMLESS, "dimensionless"),
    "m_mux": (_DIMLESS, "dimensionless"),
    "F_targ": (_DIMLESS, "dimensionless"),
}

_STRING_KEYS = ("name", "description")
_AUTO_KEYS = frozenset({"cavity_r", "cavity_zeta1", "cavity_roundtrip_length",
                        "eta_s", "eta_r", "t_trans", "F_re", "p_charge"})
_INT_KEYS = frozenset({"n", "m_mux"})
# gamma_e may be spelled as the full linewidth instead
_ALT_KEYS = {"linewidth_fwhm": "gamma_e"}
_OPTIONAL_KEYS = frozenset({"description"})

# canonical emission order
_KEY_ORDER = ["name", "description"] + list(_SCHEMA)

AUTO = "auto"


@dataclass(frozen=True)
class ParameterProfile:
    """A named, fully resolved parameter bundle plus its raw file form."""

    name: str
    description: str
    memory: MemoryParams
    cavity: CavityParams
    protocol: ProtocolParams
    raw: dict  # key -> AUTO | float | int | str, in canonical units

    def serialize(self) -> str:
        """Canonical text form; byte-stable and idempotent under
        parse -> serialize."""
        lines = []
        for key in _KEY_ORDER:
            if key not in self.raw:
                continue
            val = self.raw[key]
            if key in _STRING_KEYS:
                lines.append(f"{key} = {val}")
            elif val == AUTO:
                lines.append(f"{key} = {AUTO}")
            else:
                unit = _SCHEMA[key][1]
                num = str(val) if key in _INT_KEYS else repr(float(val))
                lines.append(f"{key} = {num} {unit}")
        return "\n".join(lines) + "\n"


def _parse_number(key: str, text: str, lineno: int) -> float:
    parts = text.split()
    if len(parts) == 1:
        raise ProfileError(
            f"line {lineno}: key {key!r} is missing its unit suffix")
    if len(parts) != 2:
        raise ProfileError(
            f"line {lineno}: key {key!r} expects '<number> <unit>', got {text!r}")
    num_s, unit = parts
    units, canonical = _SCHEMA[key]
    if unit not in units:
        raise ProfileError(
            f"line {lineno}: key {key!r} does not accept unit {unit!r} "
            f"(accepted: {', '.join(units)})")
    try:
        value = float(num_s)
    except ValueError:
        raise ProfileError(
            f"line {lineno}: key {key!r} has a malformed number {num_s!r}")
    return value * units[unit]


def parse_profile(text: str) -> ParameterProfile:
    """Parse and resolve a profile.  Raises ProfileError with the key path
    and reason on any validation failure."""
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ProfileError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, rest = body.partition("=")
        key, rest = key.strip(), rest.strip()
        if key in _ALT_KEYS:
            target = _ALT_KEYS[key]
            if target in raw:
                raise ProfileError(
                    f"line {lineno}: {key!r} conflicts with an explicit "
                    f"{target!r} value")
            raw[target] = 0.5 * _parse_number(key if key in _SCHEMA else target,
                                              rest, lineno)
            continue
        if key in raw:
            raise ProfileError(f"line {lineno}: duplicate key {key!r}")
        if key in _STRING_KEYS:
            raw[key] = rest
            continue
        if key not in _SCHEMA:
            raise ProfileError(f"line {lineno}: unknown key {key!r}")
        if rest == AUTO:
            if key not in _AUTO_KEYS:
                raise ProfileError(
                    f"line {lineno}: key {key!r} cannot be set to 'auto'")
            raw[key] = AUTO
            continue
        value = _parse_number(key, rest, lineno)
        if key in _INT_KEYS:
            if value != int(value):
                raise ProfileError(f"line {lineno}: key {key!r} must be an integer")
            value = int(value)
        raw[key] = value

    missing = [k for k in list(_SCHEMA) + ["name"]
               if k not in raw and k not in _OPTIONAL_KEYS]
    if missing:
        raise ProfileError("missing required keys: " + ", ".join(missing))
    return _resolve(raw)


def _resolve(raw: dict) -> ParameterProfile:
    try:
        memory = MemoryParams(
            d=raw["d"], gamma_e=raw["gamma_e"], delta_s=raw["delta_s"],
            delta_hf=raw["delta_hf"], J=raw["J"], gamma_s=raw["gamma_s"],
            gamma_k=raw["gamma_k"], delta_k=raw["delta_k"])

        r = raw["cavity_r"]
        if r == AUTO:
            r = optimal_reflectivity(memory)
        length = raw["cavity_roundtrip_length"]
        if length == AUTO:
            length = cavity_geometry(memory, r).roundtrip_length
        probe = CavityParams(r=r, roundtrip_length=length,
                             phi_s=raw["cavity_phi_s"],
                             phi_a=raw["cavity_phi_a"], zeta1=1.0)
        zeta1 = raw["cavity_zeta1"]
        if zeta1 == AUTO:
            zeta1 = calibrate_zeta1(memory, probe, raw["F_re_target"])
        cavity = CavityParams(r=r, roundtrip_length=length,
                              phi_s=raw["cavity_phi_s"],
                              phi_a=raw["cavity_phi_a"], zeta1=zeta1)

        eta_s = raw["eta_s"]
        if eta_s == AUTO:
            eta_s = storage_efficiency(memory).eta_s
        eta_r = raw["eta_r"]
        if eta_r == AUTO:
            eta_r = eta_s
        f_re = raw["F_re"]
        if f_re == AUTO:
            f_re = readout_fidelity(readout_g2(memory, cavity))
        t_trans = raw["t_trans"]
        if t_trans == AUTO:
            t_trans = memory.transfer_time

        p_charge = raw["p_charge"]
        if p_charge == AUTO:
            # charging_model only needs eta_st/p1/rep_rate; feed a minimal
            # bundle with p_charge provisionally set to 1
            scaffold = ProtocolParams(
                L0_km=raw["L0"], alpha2=raw["alpha2"], beta2=raw["beta2"],
                eta_d=raw["eta_d"], eta_c=raw["eta_c"], eta_st=raw["eta_st"],
                lambda_dark=raw["lambda_dark"], T_d=raw["T_d"], p1=raw["p1"],
                p_charge=1.0, rep_rate=raw["rep_rate"], eta_s=eta_s,
                eta_r=eta_r, t_trans=t_trans, F_targ=raw["F_targ"],
                F_re=f_re, n=raw["n"], m_mux=raw["m_mux"],
                L_att_km=raw["L_att"], c_fiber=raw["c_fiber"])
            try:
                p_charge = charging_model(raw["F_targ"], raw["n"],
                                          scaffold).p_charge
            except InfeasibleConfigError as exc:
                raise ProfileError(
                    f"p_charge = auto failed: {exc}; set p_charge explicitly")

        protocol = ProtocolParams(
            L0_km=raw["L0"], alpha2=raw["alpha2"], beta2=raw["beta2"],
            eta_d=raw["eta_d"], eta_c=raw["eta_c"], eta_st=raw["eta_st"],
            lambda_dark=raw["lambda_dark"], T_d=raw["T_d"], p1=raw["p1"],
            p_charge=p_charge, rep_rate=raw["rep_rate"], eta_s=eta_s,
            eta_r=eta_r, t_trans=t_trans, F_targ=raw["F_targ"], F_re=f_re,
            n=raw["n"], m_mux=raw["m_mux"], L_att_km=raw["L_att"],
            c_fiber=raw["c_fiber"])
    except ProfileError:
        raise
    except Exception as exc:
        raise ProfileError(f"profile validation failed: {exc}") from exc

    return ParameterProfile(
        name=raw["name"], description=raw.get("description", ""),
        memory=memory, cavity=cavity, protocol=protocol, raw=dict(raw))


def canonical_form(text: str) -> str:
    """Canonical serialization of a profile file's content."""
    return parse_profile(text).serialize()


def builtin_names() -> tuple[str, ...]:
    return BUILTIN_PROFILES


def load_profile(name_or_path: str) -> ParameterProfile:
    """Load a built-in profile by name or any profile file by path."""
    if name_or_path in BUILTIN_PROFILES:
        fname = name_or_path.replace("-", "_") + ".profile"
        text = (resources.files("vaporlink.data") / fname).read_text("utf-8")
        return parse_profile(text)
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProfileError(
            f"profile {name_or_path!r} is neither a built-in name "
            f"({', '.join(BUILTIN_PROFILES)}) nor a readable file: {exc}")
    return parse_profile(text)
