"""Command-line front end.

Subcommands: ``params``, ``rate-sweep``, ``fidelity-sweep``,
``memory-sim``, ``mc-validate``, ``overlay``.  Global flags (before the
subcommand): ``--profile <path|builtin>``, ``--out <path>``,
``--seed <u64>``, ``--format csv|tsv``.

Exit codes: 0 success, 1 validation error, 2 infeasible configuration,
3 Monte Carlo validation failure (a ratio left the accuracy band).

All emission is deterministic: rows are sorted by the sweep variable,
floats are printed with shortest-roundtrip repr, lines end with LF.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import dynamics, memory, montecarlo, repeater
from .errors import (InfeasibleConfigError, ParameterError, ProfileError,
                     VaporlinkError)
from .profiles import BUILTIN_PROFILES, ParameterProfile, load_profile

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_MC_BAND = 3

_SWEEP_VARS = ("L_total", "n", "m_mux", "eta_d", "eta_c", "L0")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; remap to 1 (validation)
    def error(self, message):
        raise _UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _emit(lines: list[str], out_path: str | None):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_to_csv(header, rows, delim) -> list[str]:
    lines = [delim.join(header)]
    lines.extend(delim.join(_fmt(v) for v in row) for row in rows)
    return lines


def _sweep_values(args) -> list[float]:
    if args.values is not None:
        try:
            vals = [float(v) for v in args.values.split(",") if v.strip() != ""]
        except ValueError:
            raise _UsageError(f"--values must be comma-separated numbers, "
                              f"got {args.values!r}")
        if not vals:
            raise _UsageError("--values is empty")
        return sorted(vals)
    if args.min is None or args.max is None:
        raise _UsageError("provide either --values or --min/--max/--steps")
    if not (args.min < args.max):
        raise _UsageError("--min must be strictly below --max")
    if args.steps < 2:
        raise _UsageError("--steps must be >= 2")
    return list(np.linspace(args.min, args.max, args.steps))


def _point_params(profile: ParameterProfile, var: str, value: float,
                  args) -> "repeater.ProtocolParams":
    """Protocol parameters for one sweep point."""
    p = profile.protocol
    n = args.n if args.n is not None else p.n
    m_mux = args.m_mux if args.m_mux is not None else p.m_mux
    l_total = args.l_total
    if var == "n":
        n = int(value)
    elif var == "m_mux":
        m_mux = int(value)
    p = repeater.resolve_charging(p, n)
    p = replace(p, m_mux=m_mux)
    if var == "L_total":
        p = replace(p, L0_km=value / 2 ** n)
    elif var == "L0":
        p = replace(p, L0_km=value)
    elif l_total is not None:
        p = replace(p, L0_km=l_total / 2 ** n)
    if var == "eta_d":
        p = replace(p, eta_d=value)
    elif var == "eta_c":
        p = replace(p, eta_c=value)
    return p


# --------------------------------------------------------------------------
# subcommands

def _cmd_params(profile: ParameterProfile, args, delim) -> int:
    m, c, p = profile.memory, profile.cavity, profile.protocol
    eff = memory.storage_efficiency(m)
    x = memory.fwm_suppression_factor(m, c)
    g2 = memory.readout_g2(m, c)
    f_re = memory.readout_fidelity(g2)
    geom = memory.cavity_geometry(m, c.r)
    gen = repeater.generation_fidelity_efficiency(p)
    q = repeater.q_parameter(p)
    p1_swap = repeater.swap_probability(1, p)

    rows = [
        ("eta1", eff.eta1, "dimensionless"),
        ("eta2", eff.eta2, "dimensionless"),
        ("eta_s", eff.eta_s, "dimensionless"),
        ("r", c.r, "dimensionless"),
        ("x", x, "dimensionless"),
        ("zeta1", c.zeta1, "dimensionless"),
        ("g2", g2, "dimensionless"),
        ("F_re", f_re, "dimensionless"),
        ("kappa_c", geom.kappa_c, "Hz"),
        ("delta_B", geom.bandwidth, "Hz"),
        ("L_roundtrip", geom.roundtrip_length, "m"),
        ("tau_roundtrip", geom.roundtrip_time, "s"),
        ("t_trans", p.t_trans, "s"),
        ("t_ch", p.t_ch, "s"),
        ("q", q, "dimensionless"),
        ("P_1", p1_swap, "dimensionless"),
        ("F_gen", gen.f_gen, "dimensionless"),
    ]
    if args.machine:
        _emit(_rows_to_csv(("quantity", "value", "unit"), rows, delim),
              args.out)
        return EXIT_OK

    pretty = {
        "kappa_c": lambda v: f"{v / 1e9:.6f} GHz",
        "delta_B": lambda v: f"{v / 1e6:.4f} MHz",
        "L_roundtrip": lambda v: f"{v * 1e3:.4f} mm",
        "tau_roundtrip": lambda v: f"{v * 1e9:.6f} ns",
        "t_trans": lambda v: f"{v * 1e3:.6f} ms",
        "t_ch": lambda v: f"{v * 1e3:.6f} ms",
    }
    lines = [f"profile {profile.name}: derived quantities"]
    for name, value, unit in rows:
        shown = pretty.get(name, lambda v: f"{v:.6f}")(value)
        lines.append(f"  {name:<14s} = {shown}")
    notes = memory.validity_report(m, c)
    for note in notes:
        lines.append(f"  note: {note}")
    _emit(lines, args.out)
    return EXIT_OK


def _rate_row(p, value, var, with_direct, direct_rate):
    try:
        t_tot = repeater.total_time(p)
        rate = p.m_mux / t_tot
        f_tot = repeater.overall_fidelity(p)
        row = [p.L0_km * 2 ** p.n, p.n, p.m_mux]
        if var in ("eta_d", "eta_c", "L0"):
            row.append(value)
        row += [rate, t_tot, f_tot]
        if with_direct:
            row.append(repeater.direct_transmission_rate(
                p.L0_km * 2 ** p.n, direct_rate, p.L_att_km))
        row.append("ok")
        return row, True
    except (InfeasibleConfigError, ParameterError) as exc:
        row = [p.L0_km * 2 ** p.n, p.n, p.m_mux]
        if var in ("eta_d", "eta_c", "L0"):
            row.append(value)
        row += ["", "", ""]
        if with_direct:
            row.append("")
        row.append(f"error:{type(exc).__name__}:{exc}")
        return row, False


def _cmd_rate_sweep(profile: ParameterProfile, args, delim) -> int:
    values = _sweep_values(args)
    if args.var not in _SWEEP_VARS:
        raise _UsageError(f"--var must be one of {', '.join(_SWEEP_VARS)}")
    header = ["L_km", "n", "m_mux"]
    if args.var in ("eta_d", "eta_c", "L0"):
        header.append(args.var)
    header += ["rate_hz", "T_tot_s", "F_tot"]
    if args.with_direct:
        header.append("direct_rate_hz")
    header.append("status")

    rows = []
    for v in values:
        p = _point_params(profile, args.var, v, args)
        row, _ = _rate_row(p, v, args.var, args.with_direct, args.direct_rate)
        rows.append(row)
    _emit(_rows_to_csv(header, rows, delim), args.out)
    return EXIT_OK


def _cmd_fidelity_sweep(profile: ParameterProfile, args, delim) -> int:
    values = _sweep_values(args)
    if args.var not in ("L_total", "n"):
        raise _UsageError("fidelity-sweep supports --var L_total or n")
    rows = []
    for v in values:
        p = _point_params(profile, args.var, v, args)
        try:
            rows.append([p.L0_km * 2 ** p.n, p.n,
                         repeater.overall_fidelity(p), "ok"])
        except (InfeasibleConfigError, ParameterError) as exc:
            rows.append([p.L0_km * 2 ** p.n, p.n, "",
                         f"error:{type(exc).__name__}:{exc}"])
    _emit(_rows_to_csv(("L_km", "n", "F_tot", "status"), rows, delim),
          args.out)
    return EXIT_OK


def _cmd_memory_sim(profile: ParameterProfile, args, delim) -> int:
    if not args.out:
        raise _UsageError("memory-sim requires --out for the trajectory CSV")
    m, c = profile.memory, profile.cavity
    grid = dynamics.GridSpec(rtol=args.rtol, samples_per_stage=args.samples)

    pulse = None
    if args.pulse_amp > 0:
        t_off = args.pulse_t_off if args.pulse_t_off is not None \
            else args.input_duration
        pulse = dynamics.ControlPulse(
            shape=args.pulse_shape, amplitude=args.pulse_amp,
            t_on=args.pulse_t_on, t_off=t_off,
            center=0.5 * (args.pulse_t_on + t_off),
            width=max((t_off - args.pulse_t_on) / 6.0, 1e-15))

    if args.schedule == "storage":
        if pulse is None:
            raise _UsageError("storage schedule requires --pulse-amp > 0")
        signal = (dynamics.InputSignal.gaussian(args.input_duration,
                                                args.input_photons)
                  if args.input_photons > 0 else dynamics.InputSignal.none())
        if signal.photons == 0:
            # zero drive: integrate the same stages with an all-zero input
            signal = dynamics.InputSignal(duration=args.input_duration,
                                          envelope=lambda t: 0.0, photons=0.0)
        res = dynamics.simulate_storage(m, c, pulse, signal, grid=grid,
                                        antistokes=args.antistokes)
        traj = res.trajectory
        rel = (abs(res.eta2_num - res.eta2_closed) / res.eta2_closed
               if res.eta1_num > 0 else float("nan"))
        summary = [("eta1_num", res.eta1_num), ("eta2_num", res.eta2_num),
                   ("eta_s_num", res.eta_s_num),
                   ("eta2_closed", res.eta2_closed), ("eta2_rel_err", rel)]
    elif args.schedule == "retrieval":
        res = dynamics.simulate_retrieval(m, c, pulse, grid=grid,
                                          antistokes=args.antistokes)
        traj = res.trajectory
        summary = [("eta_r_num", res.eta_r_num),
                   ("eta_r_closed", res.eta_r_closed),
                   ("transfer_b2", traj.milestones["transfer_b2"])]
    else:  # transfer-only: b(0) = 1, resonant half swap
        stages = (dynamics.transfer_stage(m),)
        traj = dynamics.simulate(m, c, stages, y0=(0, 0, 1, 0), grid=grid,
                                 antistokes=args.antistokes)
        k2 = float(abs(traj.k[-1]) ** 2)
        eta2 = math.exp(-math.pi * (m.gamma_s + m.gamma_k) / (2 * m.J))
        summary = [("k2_end", k2), ("eta2_closed", eta2),
                   ("eta2_rel_err", abs(k2 - eta2) / eta2)]

    header = ("t_s", "re_s", "im_s", "re_a", "im_a", "re_b", "im_b",
              "re_k", "im_k")
    rows = [(traj.t[i], traj.s[i].real, traj.s[i].imag, traj.a[i].real,
             traj.a[i].imag, traj.b[i].real, traj.b[i].imag, traj.k[i].real,
             traj.k[i].imag) for i in range(len(traj.t))]
    _emit(_rows_to_csv(header, rows, delim), args.out)
    out_lines = ["metric" + delim + "value"]
    out_lines += [f"{name}{delim}{_fmt(float(v))}" for name, v in summary]
    sys.stdout.write("\n".join(out_lines) + "\n")
    return EXIT_OK


def _cmd_mc_validate(profile: ParameterProfile, args, delim) -> int:
    if args.trials < 1:
        raise _UsageError("--trials must be >= 1")
    try:
        n_values = [int(v) for v in args.n_values.split(",")]
        l_values = [float(v) for v in args.l_values.split(",")]
    except ValueError:
        raise _UsageError("--n-values/--l-values must be comma-separated numbers")
    configs = [montecarlo.make_config(profile.protocol, n, l, args.trials,
                                      args.seed)
               for n in sorted(n_values) for l in sorted(l_values)]
    report = montecarlo.validate_formula(configs)
    header = ("n", "L_km", "trials", "seed", "mean_s", "stderr_s", "p50_s",
              "p90_s", "p99_s", "analytic_s", "ratio")
    rows = [(r.n, r.l_total_km, r.trials, r.seed, r.mean_s, r.stderr_s,
             r.p50_s, r.p90_s, r.p99_s, r.analytic_s, r.ratio)
            for r in report]
    _emit(_rows_to_csv(header, rows, delim), args.out)
    if any(not r.in_band for r in report):
        lo, hi = montecarlo.RATIO_BAND
        sys.stderr.write(
            f"mc-validate: ratio left the [{lo}, {hi}] band for "
            + ", ".join(f"(n={r.n}, L={r.l_total_km:g} km: {r.ratio:.4f})"
                        for r in report if not r.in_band) + "\n")
        return EXIT_MC_BAND
    return EXIT_OK


def _cmd_overlay(profile: ParameterProfile, args, delim) -> int:
    quantity = "rate_hz" if args.quantity == "rate" else "fidelity"
    values = _sweep_values(args)
    rows = []
    for v in values:
        p = _point_params(profile, "L_total", v, args)
        label = f"n={p.n}" + (f" x{p.m_mux}" if p.m_mux > 1 else "")
        if quantity == "rate_hz":
            rows.append([v, p.m_mux / repeater.total_time(p), label])
        else:
            rows.append([v, repeater.overall_fidelity(p), label])

    try:
        with open(args.external, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip() != ""]
    except OSError as exc:
        raise _UsageError(f"cannot read external overlay file: {exc}")
    if not lines:
        raise _UsageError("external overlay file is empty (header required)")
    ext_header = [h.strip() for h in lines[0].split(",")]
    expected = ["L_km", quantity, "label"]
    if ext_header != expected:
        missing = [c for c in expected if c not in ext_header]
        raise _UsageError(
            f"external overlay schema mismatch: expected columns {expected}, "
            f"got {ext_header}"
            + (f" (missing: {', '.join(missing)})" if missing else ""))
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise _UsageError(
                f"external overlay row {lineno}: expected 3 columns, "
                f"got {len(cells)}")
        try:
            rows.append([float(cells[0]), float(cells[1]), cells[2]])
        except ValueError:
            raise _UsageError(
                f"external overlay row {lineno}: non-numeric value in "
                f"{line!r}")

    _emit(_rows_to_csv(("L_km", quantity, "label"), rows, delim), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser assembly

def _add_sweep_args(sp, include_direct=False):
    sp.add_argument("--var", default="L_total",
                    help=f"sweep variable ({', '.join(_SWEEP_VARS)})")
    sp.add_argument("--values", default=None,
                    help="comma-separated explicit sweep values")
    sp.add_argument("--min", type=float, default=None)
    sp.add_argument("--max", type=float, default=None)
    sp.add_argument("--steps", type=int, default=2)
    sp.add_argument("--n", type=int, default=None,
                    help="nesting level override (2^n links)")
    sp.add_argument("--m-mux", dest="m_mux", type=int, default=None,
                    help="multiplexing factor override")
    sp.add_argument("--l-total", dest="l_total", type=float, default=None,
                    help="fixed total distance in km when not sweeping L")
    if include_direct:
        sp.add_argument("--with-direct", action="store_true",
                        help="add a direct-transmission column")
        sp.add_argument("--direct-rate", type=float, default=1e10,
                        help="direct-transmission source rate in Hz")


def _build_parser() -> _Parser:
    parser = _Parser(prog="vaporlink",
                     description="Non-cryogenic hybrid-gas quantum repeater "
                                 "calculator and simulator")
    parser.add_argument("--profile", default="paper-sec5",
                        help="built-in profile name "
                             f"({', '.join(BUILTIN_PROFILES)}) or file path")
    parser.add_argument("--out", default=None, help="output file (default stdout)")
    parser.add_argument("--seed", type=int, default=20260810,
                        help="64-bit seed for Monte Carlo commands")
    parser.add_argument("--format", choices=("csv", "tsv"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", help="derived-quantity report")
    sp.add_argument("--machine", action="store_true",
                    help="machine-readable CSV instead of the human table")

    sp = sub.add_parser("rate-sweep", help="repeater rate vs a swept variable")
    _add_sweep_args(sp, include_direct=True)

    sp = sub.add_parser("fidelity-sweep", help="overall fidelity sweep")
    _add_sweep_args(sp)

    sp = sub.add_parser("memory-sim", help="memory dynamics run + trajectory CSV")
    sp.add_argument("--schedule", choices=("storage", "retrieval",
                                           "transfer-only"),
                    default="transfer-only")
    sp.add_argument("--pulse-shape", choices=("constant", "gaussian"),
                    default="constant")
    sp.add_argument("--pulse-amp", type=float, default=0.0,
                    help="peak Rabi frequency in s^-1")
    sp.add_argument("--pulse-t-on", type=float, default=0.0)
    sp.add_argument("--pulse-t-off", type=float, default=None)
    sp.add_argument("--input-duration", type=float, default=12.5e-9,
                    help="input signal duration in s")
    sp.add_argument("--input-photons", type=float, default=1.0)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--rtol", type=float, default=1e-8)
    sp.add_argument("--antistokes", choices=("adiabatic", "dynamic", "off"),
                    default="adiabatic")

    sp = sub.add_parser("mc-validate", help="Monte Carlo total-time validation")
    sp.add_argument("--n-values", default="1,2")
    sp.add_argument("--l-values", default="200,400")
    sp.add_argument("--trials", type=int, default=100000)

    sp = sub.add_parser("overlay", help="merge externally supplied curves")
    sp.add_argument("--external", required=True,
                    help="CSV with columns L_km,<rate_hz|fidelity>,label")
    sp.add_argument("--quantity", choices=("rate", "fidelity"),
                    default="rate")
    _add_sweep_args(sp)

    return parser


_COMMANDS = {
    "params": _cmd_params,
    "rate-sweep": _cmd_rate_sweep,
    "fidelity-sweep": _cmd_fidelity_sweep,
    "memory-sim": _cmd_memory_sim,
    "mc-validate": _cmd_mc_validate,
    "overlay": _cmd_overlay,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        profile = load_profile(args.profile)
        delim = "," if args.format == "csv" else "\t"
        return _COMMANDS[args.command](profile, args, delim)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except (ProfileError, ParameterError) as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return EXIT_VALIDATION
    except InfeasibleConfigError as exc:
        sys.stderr.write(f"infeasible configuration: {exc}\n")
        return EXIT_INFEASIBLE
    except VaporlinkError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
