"""Command-line interface.

Subcommands: efficiency, spectrum, fit, link, swap, sweep. All
stochastic paths are controlled by --seed (default 0), so identical
invocations produce byte-identical output files. Exit codes: 0 success,
2 validation error, 3 fit non-convergence.
"""

import argparse
import math
import re
import sys
from dataclasses import replace

import numpy as np

from . import core
from .core import PumpState
from .deviceio import (load_device, parse_power, read_points, read_trace,
                       write_table, write_trace)
from .errors import FitError, TransducerError
from .fitting import (FitResult, fit_linewidth_vs_photons, fit_lorentzian_multi,
                      fit_optical_dip, fit_phase_detuning)
from .link import (LinkConfig, eye_diagram, link_metrics, parse_bits, run_link)
from .spectra import (MechanicalMode, driven_spectrum, s_oe_spectrum,
                      thermal_spectrum)
from .swap import rabi_swap_sim, swap_feasibility
from .sweep import SweepSpec, run_sweep


def _print_kv(pairs, stream=None):
    stream = stream or sys.stdout
    for name, value in pairs:
        if isinstance(value, float):
            print(f"{name} = {value:.10g}", file=stream)
        else:
            print(f"{name} = {value}", file=stream)


def _pump_from_args(args, bundle):
    """PumpState from --power/--n-c/--detuning, falling back to the file."""
    sign = getattr(args, "detuning", None)
    if sign is None and bundle.pump is not None:
        sign = bundle.pump.sign
    if sign is None:
        sign = "blue"
    detuning = bundle.device.f_m if sign == "blue" else -bundle.device.f_m
    power = parse_power(args.power) if getattr(args, "power", None) else None
    n_c = getattr(args, "n_c", None)
    if power is None and n_c is None:
        if bundle.pump is None:
            raise TransducerError(
                "no pump defined: pass --power or --n-c, or add a [pump] section")
        return PumpState(detuning=detuning, p_on_chip=bundle.pump.p_on_chip,
                         n_c=bundle.pump.n_c)
    return PumpState(detuning=detuning, p_on_chip=power, n_c=n_c)


def _default_grid(bundle, args):
    dev = bundle.device
    gammas = [m.gamma for m in bundle.modes] or [dev.gamma_m]
    centers = [m.f for m in bundle.modes] or [dev.f_m]
    f_lo = args.f_start if args.f_start is not None \
        else min(centers) - 10 * max(gammas)
    f_hi = args.f_stop if args.f_stop is not None \
        else max(centers) + 10 * max(gammas)
    if f_hi <= f_lo:
        raise TransducerError(f"need f_start < f_stop (got {f_lo}, {f_hi})")
    return np.linspace(f_lo, f_hi, args.points)


def _print_fit(result: FitResult) -> int:
    for name in result.params:
        se = result.stderr.get(name)
        if se is None:
            print(f"{name} = {result.params[name]:.10g}")
        else:
            print(f"{name} = {result.params[name]:.10g} +/- {se:.4g}")
    print(f"residual_norm = {result.residual_norm:.6g}")
    print(f"converged = {result.converged}")
    for note in result.notes:
        print(f"note: {note}")
    return 0 if result.converged else 3


# ---------------------------------------------------------------- subcommands

def cmd_efficiency(args) -> int:
    bundle = load_device(args.device)
    dev = bundle.device
    pump = _pump_from_args(args, bundle)
    sign = pump.sign
    n_c = core.resolve_photon_number(dev, pump)
    gamma_bare = dev.gamma_m
    eta_o, eta_em = core.efficiencies(dev, gamma_bare)
    _print_kv([
        ("device", str(args.device)),
        ("detuning_sign", sign),
        ("n_c", n_c),
        ("gamma_om_hz", core.backaction_rate(dev, n_c)),
        ("gamma_tot_hz", core.total_mech_linewidth(dev, n_c, sign)),
        ("c_om", core.cooperativity(dev, n_c, gamma_bare)),
        ("eta_oc", dev.eta_oc),
        ("eta_o", eta_o),
        ("eta_em", eta_em),
        ("eta_tot", core.total_efficiency(dev, pump, sign)),
    ])
    return 0


def _default_mode(dev) -> MechanicalMode:
    """Principal mode built from the lumped record when the file lists none."""
    return MechanicalMode(f=dev.f_m, gamma=dev.gamma_m, g=dev.g_om,
                          phi=0.0, gamma_e=dev.gamma_me)


def cmd_spectrum(args) -> int:
    bundle = load_device(args.device)
    dev = bundle.device
    modes = bundle.modes
    if not modes:
        modes = (_default_mode(dev),)
    grid = _default_grid(bundle, args)
    n_th = core.thermal_occupation(dev.f_m, args.temperature)
    pump = _pump_from_args(args, bundle)
    n_c = core.resolve_photon_number(dev, pump)
    if args.kind == "thermal":
        trace = thermal_spectrum(dev, modes, n_c, n_th, grid)
    elif args.kind == "driven":
        p_mu = parse_power(args.power_mu)
        drive_f = args.drive_f if args.drive_f is not None else dev.f_m
        trace = driven_spectrum(dev, modes, n_c, n_th, drive_f, p_mu,
                                args.rbw, grid)
    else:
        trace = s_oe_spectrum(dev, modes, pump, grid)
    write_trace(trace, args.out)
    _print_kv([("kind", args.kind), ("points", len(trace)),
               ("n_c", n_c), ("n_th", n_th), ("out", args.out)])
    return 0


def cmd_fit(args) -> int:
    if args.model == "dip":
        result = fit_optical_dip(read_trace(args.trace), branch=args.branch)
    elif args.model == "phase":
        bundle = load_device(args.device)
        result = fit_phase_detuning(read_trace(args.mag), read_trace(args.phase),
                                    bundle.device)
    elif args.model == "linewidth":
        if args.kappa_o is not None:
            kappa_o = args.kappa_o
        elif args.device is not None:
            kappa_o = load_device(args.device).device.kappa_o
        else:
            raise TransducerError("fit linewidth needs --kappa-o or --device")
        result = fit_linewidth_vs_photons(read_points(args.points), args.sign,
                                          kappa_o)
    else:
        background = args.background
        if args.reference is not None:
            background = read_trace(args.reference)
        result = fit_lorentzian_multi(read_trace(args.trace), args.n_peaks,
                                      background)
    return _print_fit(result)


def cmd_link(args) -> int:
    bits = parse_bits(args.bits) if args.bits else \
        parse_bits(open(args.bits_file).read())
    spb = args.samples_per_bit
    if spb is None:     # resolve gamma_m and f_if at the requested rate
        spb = max(32, math.ceil(20.0 * args.gamma_m / args.rate),
                  math.ceil(2.5 * args.f_if / args.rate))
    cfg = LinkConfig(bits=bits, rate=args.rate, gamma_m=args.gamma_m,
                     f_if=args.f_if, v0=args.v0, noise_rms=args.noise_rms,
                     samples_per_bit=spb,
                     drive_mode=args.drive_mode)
    run = run_link(cfg, seed=args.seed)
    env_path = f"{args.out_prefix}_envelope.csv"
    write_trace(run.envelope, env_path)
    iq_path = f"{args.out_prefix}_iq.csv"
    write_table(iq_path, ["t_s", "i_v", "q_v"],
                [{"t_s": float(t), "i_v": float(i), "q_v": float(q)}
                 for t, i, q in zip(run.time, run.i_trace.y, run.q_trace.y)])
    outputs = [("envelope", env_path), ("iq", iq_path)]
    try:
        eye = eye_diagram(run, cfg)
        eye_path = f"{args.out_prefix}_eye.csv"
        cols = ["t_s"] + [f"seg_{k:03d}" for k in range(eye.segments.shape[0])]
        rows = []
        for j, t in enumerate(eye.t):
            row = {"t_s": float(t)}
            for k in range(eye.segments.shape[0]):
                row[f"seg_{k:03d}"] = float(eye.segments[k, j])
            rows.append(row)
        write_table(eye_path, cols, rows)
        outputs.append(("eye", eye_path))
    except TransducerError as err:
        print(f"note: no eye diagram ({err})", file=sys.stderr)
    metrics = link_metrics(run, cfg)
    _print_kv([(k, v) for k, v in metrics.items()]
              + [(name, path) for name, path in outputs])
    return 0


def cmd_swap(args) -> int:
    bundle = load_device(args.device)
    qubit = bundle.qubit
    if qubit is None:
        raise TransducerError("device file has no [qubit] section")
    if args.gamma_mi is not None:
        bundle = replace(bundle, device=replace(bundle.device,
                                                gamma_mi=args.gamma_mi))
    report = swap_feasibility(bundle.device, qubit)
    _print_kv([
        ("z_q_ohm", report.z_q),
        ("g_em_hz", report.g_em),
        ("threshold_gamma_hz", report.threshold_gamma),
        ("gamma_mi_hz", bundle.device.gamma_mi),
        ("feasible", report.feasible),
        ("c_em", report.c_em),
    ])
    if args.rabi_out:
        t_max = args.t_max if args.t_max is not None \
            else 4.0 / max(report.g_em, 1.0)
        t_grid = np.linspace(0.0, t_max, args.points)
        qubit_tr, mech_tr = rabi_swap_sim(bundle.device, qubit, t_grid,
                                          lossless=args.lossless)
        write_table(args.rabi_out, ["t_s", "qubit_excitation", "phonons"],
                    [{"t_s": float(t), "qubit_excitation": float(a),
                      "phonons": float(b)}
                     for t, a, b in zip(t_grid, qubit_tr.y, mech_tr.y)])
        print(f"rabi_out = {args.rabi_out}")
    return 0


def cmd_sweep(args) -> int:
    bundle = load_device(args.device)
    if args.values:
        if len(args.param) != len(args.values):
            raise TransducerError("each --param needs a matching --values list")
        targets = tuple(
            (path, tuple(float(v) for v in vals.split(",")))
            for path, vals in zip(args.param, args.values))
        spec = SweepSpec(targets=targets, quantities=tuple(args.quantity))
    else:
        if len(args.param) != 1:
            raise TransducerError("range sweeps take exactly one --param")
        if args.start is None or args.stop is None:
            raise TransducerError("range sweeps need --start and --stop")
        spec = SweepSpec.from_range(args.param[0], args.start, args.stop,
                                    args.count, args.scale, args.quantity)
    drive_p_mu = parse_power(args.power_mu) if args.power_mu else None
    rows = run_sweep(spec, bundle, temperature=args.temperature,
                     drive_p_mu=drive_p_mu, max_workers=args.workers)
    columns = [path for path, _ in spec.targets] + list(spec.quantities)
    if args.out:
        write_table(args.out, columns, rows)
        print(f"rows = {len(rows)}")
        print(f"out = {args.out}")
    else:
        print(",".join(columns))
        for row in rows:
            print(",".join(f"{row[c]:.10g}" for c in columns))
    return 0


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transducersim",
        description="Piezo-optomechanical transducer simulation and analysis")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for all stochastic paths (default 0)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("efficiency", help="conversion-efficiency chain")
    p.add_argument("--device", required=True)
    p.add_argument("--power", help="on-chip pump power, e.g. -7.9dbm or 1.6e-4w")
    p.add_argument("--n-c", dest="n_c", type=float, help="intracavity photons")
    p.add_argument("--detuning", choices=["blue", "red"])
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("spectrum", help="synthesize spectra to CSV")
    p.add_argument("kind", choices=["thermal", "driven", "soe"])
    p.add_argument("--device", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--temperature", type=float, default=300.0)
    p.add_argument("--power", help="on-chip pump power (dbm/w suffix)")
    p.add_argument("--n-c", dest="n_c", type=float)
    p.add_argument("--detuning", choices=["blue", "red"])
    p.add_argument("--power-mu", help="microwave drive power (dbm/w suffix)")
    p.add_argument("--drive-f", type=float)
    p.add_argument("--rbw", type=float, default=50e3)
    p.add_argument("--f-start", type=float)
    p.add_argument("--f-stop", type=float)
    p.add_argument("--points", type=int, default=4001)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit", help="parameter extraction from trace CSVs")
    fit_sub = p.add_subparsers(dest="model", required=True)
    q = fit_sub.add_parser("dip")
    q.add_argument("--trace", required=True)
    q.add_argument("--branch", choices=["under", "over"])
    q = fit_sub.add_parser("phase")
    q.add_argument("--mag", required=True)
    q.add_argument("--phase", required=True)
    q.add_argument("--device", required=True)
    q = fit_sub.add_parser("linewidth")
    q.add_argument("--points", required=True, help="CSV of n_c,gamma_hz rows")
    q.add_argument("--sign", choices=["blue", "red"], required=True)
    q.add_argument("--kappa-o", dest="kappa_o", type=float)
    q.add_argument("--device")
    q = fit_sub.add_parser("lorentz")
    q.add_argument("--trace", required=True)
    q.add_argument("--n-peaks", dest="n_peaks", type=int, required=True)
    q.add_argument("--background", choices=["constant", "linear"],
                   default="constant")
    q.add_argument("--reference", help="off-resonance background trace CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("link", help="bit-array transmission simulation")
    p.add_argument("--bits", help="bit string, e.g. 010110")
    p.add_argument("--bits-file")
    p.add_argument("--rate", type=float, required=True, help="bit/s")
    p.add_argument("--gamma-m", dest="gamma_m", type=float, required=True)
    p.add_argument("--f-if", dest="f_if", type=float, default=50e6)
    p.add_argument("--v0", type=float, default=1.0)
    p.add_argument("--noise-rms", dest="noise_rms", type=float, default=0.0)
    p.add_argument("--samples-per-bit", dest="samples_per_bit", type=int,
                   help="default: chosen from gamma_m, f_if, and the rate")
    p.add_argument("--drive-mode", choices=["coherent", "thermal"],
                   default="coherent")
    p.add_argument("--out-prefix", default="link")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("swap", help="qubit-swap feasibility report")
    p.add_argument("--device", required=True)
    p.add_argument("--gamma-mi", dest="gamma_mi", type=float,
                   help="override the mechanical loss rate, Hz")
    p.add_argument("--rabi-out", help="write a Rabi exchange CSV here")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--points", type=int, default=801)
    p.add_argument("--lossless", action="store_true")
    p.set_defaults(func=cmd_swap)

    p = sub.add_parser("sweep", help="parameter sweep to a CSV table")
    p.add_argument("--device", required=True)
    p.add_argument("--param", action="append", default=[],
                   help="dotted path, e.g. pump.n_c (repeatable, zipped)")
    p.add_argument("--values", action="append", default=[],
                   help="comma-separated values for the matching --param")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--scale", choices=["linear", "log"], default="linear")
    p.add_argument("--quantity", action="append", required=True,
                   help="output quantity (repeatable)")
    p.add_argument("--temperature", type=float, default=300.0)
    p.add_argument("--power-mu", help="microwave drive power for phonon counts")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    _accept_negative_values(parser)
    return parser


def _accept_negative_values(parser) -> None:
    """Let option values like -7.9dbm or -5e6 parse as values, not flags."""
    parser._negative_number_matcher = re.compile(r"^-\d")
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                _accept_negative_values(sub)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    if getattr(args, "bits", "x") is None and getattr(args, "bits_file", "x") is None:
        print("error: link needs --bits or --bits-file", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except FitError as err:
        print(f"fit error: {err}", file=sys.stderr)
        return 3
    except TransducerError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
