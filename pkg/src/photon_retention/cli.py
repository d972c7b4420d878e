"""Command-line front end.

Exit codes: 0 success, 1 configuration or validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, output, plotting
from .analysis import AnalysisError
from .config import (
    REFERENCE_CONFIG,
    ConfigError,
    dump_config,
    load_config,
    load_config_text,
    parse_pair,
    parse_range,
    to_si,
)
from .model import ParameterError, Role
from .solver import SolverError, convergence_check, input_fields, propagate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
FS = 1e-15


class UsageError(Exception):
    """Bad command-line input; maps to exit code 1."""


def _load(args):
    if args.config is None:
        return load_config_text(REFERENCE_CONFIG, "<reference>")
    return load_config(args.config)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jobs(args, loaded) -> int:
    jobs = args.jobs if args.jobs is not None else loaded.sweep.get("jobs", 1)
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return jobs


def _run_and_write(loaded, out: Path, title: str, logy: bool):
    with output.Timer() as timer:
        rec = propagate(loaded.run)
    manifest = output.run_manifest(
        loaded, timer.elapsed, {"integrated_signal": output.fmt(analysis.integrated_signal(rec))}
    )
    output.write_record(rec, out, manifest)
    t = rec.times / FS
    plotting.line_chart(
        out / "fields.svg",
        [(t, np.abs(rec.omega1_out) ** 2, "|Omega_1(L)|^2"), (t, np.abs(rec.omega_s_out) ** 2, "|Omega_s(L)|^2")],
        "time (fs)",
        "intensity (rad^2/s^2)",
        title,
        logy=True if logy is None else logy,
    )
    plotting.line_chart(
        out / "rho_BA.svg",
        [(t, np.abs(rec.rho_at()[:, 3]), "|rho_BA| at z = L")],
        "time (fs)",
        "|rho_BA|",
        title,
        logy=bool(logy),
    )
    return rec, timer.elapsed


def cmd_run(args) -> int:
    loaded = _load(args)
    out = _out(args)
    rec, wall = _run_and_write(loaded, out, "run", args.logy)
    print(f"wrote {out} (nt={rec.grid.nt}, nz={rec.grid.nz}, {wall:.1f} s)")
    print(f"integrated_signal = {output.fmt(analysis.integrated_signal(rec))}")
    return EXIT_OK


def cmd_seed_run(args) -> int:
    loaded = _load(args)
    run = loaded.run
    seed = next((p for p in run.pulses if p.role == Role.SEED), None)
    if seed is None or seed.peak_amplitude <= 0:
        raise UsageError("seed-run needs [pulses] seed_amplitude > 0")
    if args.delay is not None:
        pump = run.pulse(Role.PUMP)
        seed = dataclasses.replace(seed, center_time=pump.center_time + to_si(args.delay, FS))
        pulses = [p for p in run.pulses if p.role != Role.SEED] + [seed]
        loaded = dataclasses.replace(loaded, run=run.replace(pulses=pulses))
        loaded.values["pulses"]["seed_center"] = seed.center_time
    out = _out(args)
    rec, wall = _run_and_write(loaded, out, "seed run", args.logy)
    # seed-band energy: |Omega_s|^2 over a +-3 duration window around the seed centre
    win = np.abs(rec.times - seed.center_time) <= 3 * seed.duration_fwhm
    _w1, ws_in, _w2 = input_fields(loaded.run)
    e_in = float(np.sum(np.abs(ws_in[win]) ** 2))
    e_out = float(np.sum(np.abs(rec.omega_s_out[win]) ** 2))
    gain = e_out / e_in
    with (out / "manifest.txt").open("a", encoding="utf-8") as fh:
        fh.write(f"seed_gain = {output.fmt(gain)}\n")
    print(f"wrote {out} ({wall:.1f} s)")
    print(f"seed_gain = {output.fmt(gain)} ({'amplified' if gain > 1 else 'absorbed'})")
    return EXIT_OK


def _taus(args, loaded):
    if args.taus:
        return to_si(parse_range(args.taus, "--taus"), FS)
    if "taus" in loaded.sweep:
        return loaded.sweep["taus"]
    raise UsageError("delay-scan needs --taus start:stop:step (fs) or [sweep] taus")


def cmd_delay_scan(args) -> int:
    loaded = _load(args)
    taus = _taus(args, loaded)
    fit = None
    if args.fit:
        lo, hi = parse_pair(args.fit, "--fit")
        fit = (to_si(lo, FS), to_si(hi, FS))
    elif "fit" in loaded.sweep:
        fit = loaded.sweep["fit"]
    res = analysis.delay_scan(loaded.run, taus, fit, _jobs(args, loaded))
    out = _out(args)
    bb = loaded.run.initial_state.rho_BB
    output.write_csv(
        out / "scan.csv",
        ["tau_fs", "integral_rad2_per_s", "max_abs_rho_BA"],
        [res.swept / FS, res.observable, res.extra["max_abs_rho_BA"]],
        [f"rho_BB0 = {output.fmt(bb)}", f"config_sha256 = {loaded.digest}"],
    )
    if res.fit is not None:
        amp, rate, resid = res.fit
        (out / "fit.txt").write_text(
            f"rate_per_ns = {output.fmt(rate / 1e9)}\namplitude = {output.fmt(amp)}\nresidual = {output.fmt(resid)}\n"
            f"fit_from_fs = {output.fmt(fit[0] / FS)}\nfit_to_fs = {output.fmt(fit[1] / FS)}\n",
            encoding="utf-8",
        )
        print(f"fit: rate = {rate:.4g} 1/s, amplitude = {amp:.4g}, log residual = {resid:.3g}")
    plotting.scan_plot(
        out / "scan.svg",
        res.swept / FS,
        res.observable,
        "read delay tau (fs)",
        "integrated signal",
        f"delay scan, rho_BB(0) = {bb:g}",
        logy=True if args.logy is None else args.logy,
        fit=res.fit,
    )
    for tau, v in zip(res.swept, res.observable):
        print(f"{tau / FS:10.1f} fs  {v:.6e}")
    return EXIT_OK


def cmd_population_scan(args) -> int:
    loaded = _load(args)
    if args.rho_bb:
        values = parse_range(args.rho_bb, "--rho-bb")
    elif "rho_bb" in loaded.sweep:
        values = loaded.sweep["rho_bb"]
    else:
        raise UsageError("population-scan needs --rho-bb list or [sweep] rho_bb")
    base = loaded.run
    if args.tau is not None:
        base = base.replace(delay_tau=to_si(args.tau, FS))
    res = analysis.population_scan(base, values, _jobs(args, loaded))
    out = _out(args)
    output.write_csv(
        out / "scan.csv",
        ["rho_BB0", "integral_rad2_per_s", "max_abs_rho_BA"],
        [res.swept, res.observable, res.extra["max_abs_rho_BA"]],
        [f"tau_fs = {output.fmt(base.delay_tau / FS)}", f"config_sha256 = {loaded.digest}"],
    )
    title = f"population scan, tau = {base.delay_tau / FS:g} fs"
    plotting.scan_plot(
        out / "scan.svg", res.swept, res.observable, "rho_BB(0)", "integrated signal", title,
        logy=True if args.logy is None else args.logy,
    )
    plotting.scan_plot(
        out / "rho_BA.svg", res.swept, res.extra["max_abs_rho_BA"], "rho_BB(0)", "max |rho_BA|", title,
        logy=True if args.logy is None else args.logy,
    )
    for v, sig, ba in zip(res.swept, res.observable, res.extra["max_abs_rho_BA"]):
        print(f"rho_BB(0) = {v:<6g} integral = {sig:.6e}  max|rho_BA| = {ba:.6e}")
    return EXIT_OK


def _series_from_csv(path: Path):
    header, data, _comments = output.read_csv(path)
    need = ("t_fs", "re_rad_per_s", "im_rad_per_s")
    if any(h not in header for h in need):
        raise UsageError(f"{path}: expected columns {', '.join(need)}")
    t = data[:, header.index("t_fs")]
    if t.size < 2 or np.any(np.diff(t) <= 0):
        raise UsageError(f"{path}: t_fs must be strictly increasing")
    dt = float(np.mean(np.diff(t))) * FS
    return data[:, header.index("re_rad_per_s")] + 1j * data[:, header.index("im_rad_per_s")], dt


def cmd_spectrum(args) -> int:
    out = _out(args)
    if args.record:
        series, dt = _series_from_csv(Path(args.record))
        title, source = f"spectrum of {Path(args.record).name}", str(args.record)
    else:
        loaded = _load(args)
        rec = propagate(loaded.run)
        series, dt = rec.omega_s_out, rec.grid.dt
        bb = loaded.run.initial_state.rho_BB
        title = f"signal spectrum, tau = {loaded.run.delay_tau / FS:g} fs, rho_BB(0) = {bb:g}"
        source = loaded.source
    spec = analysis.power_spectrum(series, dt)
    output.write_spectrum(out / "spectrum.csv", spec, [f"source = {source}"])
    plotting.spectrum_plot(out / "spectrum.svg", spec, title, logy=bool(args.logy))
    print(f"fwhm = {spec.fwhm / 1e12:.6g} THz  peak offset = {spec.peak_offset / 1e12:.6g} THz  "
          f"asymmetry = {spec.asymmetry:+.4f}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    loaded = _load(args)
    rep = convergence_check(loaded.run, args.factor)
    print(f"base integral    = {rep.base_integral:.12e}")
    print(f"refined integral = {rep.refined_integral:.12e} (x{rep.refinement_factor} in dt and dz)")
    print(f"relative change  = {rep.relative_change:.3e} -> {'PASS' if rep.passed else 'FAIL'} (< {rep.tolerance:g})")
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def cmd_validate(args) -> int:
    from .validation import run_checks

    results = run_checks(fault=args.inject_fault, select=args.only, echo=print)
    failed = [r for r in results if not r.passed]
    total = sum(r.seconds for r in results)
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {total:.0f} s")
    return EXIT_OK if not failed else EXIT_CONFIG


def cmd_dump_config(args) -> int:
    if args.config is None:
        sys.stdout.write(REFERENCE_CONFIG)
    else:
        sys.stdout.write(dump_config(_load(args)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--jobs", type=int, default=None, help="worker processes for scans")
    logy = common.add_mutually_exclusive_group()
    logy.add_argument("--logy", dest="logy", action="store_true", default=None, help="log-scale y axis in figures")
    logy.add_argument("--linear", dest="logy", action="store_false", help="linear y axis in figures")

    parser = argparse.ArgumentParser(prog="photon-retention", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, config=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        if config:
            p.add_argument("config", nargs="?", help="INI config (default: built-in reference parameters)")
        p.set_defaults(func=fn)
        return p

    add("run", cmd_run, "propagate one configuration and write CSV, manifest and figures")
    p = add("delay-scan", cmd_delay_scan, "integrated signal versus read delay")
    p.add_argument("--taus", help="start:stop:step in fs, or a comma list")
    p.add_argument("--fit", help="from:to in fs for the exponential fit")
    p = add("population-scan", cmd_population_scan, "integrated signal and max|rho_BA| versus rho_BB(0)")
    p.add_argument("--rho-bb", dest="rho_bb", help="comma list or start:stop:step")
    p.add_argument("--tau", type=float, help="read delay in fs (default: from config)")
    p = add("spectrum", cmd_spectrum, "power spectrum of the signal field")
    p.add_argument("--record", help="omega_s_out.csv from an earlier run instead of a config")
    p = add("seed-run", cmd_seed_run, "run with a 329.3 nm seed pulse and report its gain")
    p.add_argument("--delay", type=float, help="seed centre relative to the pump centre, fs")
    p = add("convergence", cmd_convergence, "compare against a refined grid")
    p.add_argument("--factor", type=int, default=2)
    p = add("validate", cmd_validate, "run the invariant and oracle checks", config=False)
    p.add_argument("--inject-fault", action="store_true", help="flip the Stark term sign in the kernel")
    p.add_argument("--only", help="run checks whose name contains this text")
    add("dump-config", cmd_dump_config, "print the resolved config (or the reference config)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, UsageError, AnalysisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:  # malformed CSV input, unreadable files
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
