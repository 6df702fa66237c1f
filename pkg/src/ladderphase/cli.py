"""Command line front end.

Four subcommands: ``spectrum`` scans the steady-state response and reports
operating windows, ``simulate`` synthesises detector traces and runs the
recovery on them, ``analyze`` runs the recovery on an existing trace file,
``sweep`` repeats the CW experiment along one plan axis.  The shell stays
thin: it parses arguments, calls the library, and writes artifacts.  Floats
are written through repr, so re-runs with equal seeds are byte-identical.

Exit codes: 0 success, 2 configuration or argument problems, 3 numerical
failures, 4 unreadable trace files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import analyze_cw, analyze_pulsed
from .atoms import velocity_grid
from .config import MODES, load_config
from .errors import (ArgumentError, CalibrationError, ConfigError, DomainError,
                     IntegrationFailure, LadderphaseError,
                     MissingReferenceError, PhaseUnobservableError,
                     SegmentationError, SolverError, TraceFormatError,
                     UnphysicalSumError)
from .scan import run_virtual_cw, run_virtual_pulsed, sweep
from .steadystate import (FieldConfig, fields_control_off, find_roi,
                          rabi_from_power, spectrum_scan)
from .traceio import read_trace, write_trace_bin, write_trace_csv

_TWO_PI = 2.0 * math.pi


def _fmt(value) -> str:
    """One CSV cell; floats go through repr for byte-stable output."""
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (tuple, list)):
        return ";".join(str(v) for v in value)
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _log(args, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


def _load(args):
    if args.config is None:
        raise ConfigError("no configuration file; pass --config FILE")
    return load_config(args.config)


def _write_trace(path: Path, trace, fmt: str) -> Path:
    path = path.with_suffix(".bin" if fmt == "bin" else ".csv")
    if fmt == "bin":
        write_trace_bin(trace, path)
    else:
        write_trace_csv(trace, path)
    return path


# ---------------------------------------------------------------- spectrum

def cmd_spectrum(args) -> int:
    cfg = _load(args)
    to_rad = lambda g: None if g is None else g * _TWO_PI * 1e9
    settings = cfg.spectrum_settings(delta_start=to_rad(args.delta_s_start),
                                     delta_stop=to_rad(args.delta_s_stop),
                                     n_points=args.points)
    plan_t = cfg.plan_table
    grid = velocity_grid(cfg.cell.temperature, cfg.atom.mass,
                         n_points=plan_t.get("n_velocity", 201),
                         span_sigmas=plan_t.get("span_sigmas", 5.0))
    rabi_c = rabi_from_power(cfg.beam.power, cfg.beam.waist, cfg.atom.dipole_ed)
    on = FieldConfig(delta_s=0.0, delta_c=cfg.beam.delta_c, rabi_s=0.0,
                     rabi_c=rabi_c, geometry=cfg.beam.geometry)
    delta = np.linspace(settings.delta_min, settings.delta_max,
                        settings.n_points)
    spec = spectrum_scan(delta, on, fields_control_off(on), cfg.atom,
                         cfg.cell, grid)
    windows = find_roi(spec, settings.t_min, settings.phi_target,
                       settings.phi_flatness)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, ("delta_s_hz", "t_on", "t_off", "dphi_rad"),
               [(d / _TWO_PI, t1, t0, p) for d, t1, t0, p in
                zip(spec.delta_s, spec.t_on, spec.t_off, spec.dphi)])
    roi = {
        "thresholds": {
            "t_min": settings.t_min,
            "phi_target_rad": settings.phi_target,
            "phi_flatness_rad": settings.phi_flatness,
        },
        "scan": {
            "delta_start_hz": settings.delta_min / _TWO_PI,
            "delta_stop_hz": settings.delta_max / _TWO_PI,
            "n_points": settings.n_points,
        },
        "windows": [
            {
                "start_hz": w.start / _TWO_PI,
                "stop_hz": w.stop / _TWO_PI,
                "width_hz": w.width / _TWO_PI,
                "dphi_min_rad": w.dphi_min,
                "dphi_max_rad": w.dphi_max,
                "t_on_min": w.t_on_min,
                "t_off_min": w.t_off_min,
            }
            for w in windows],
    }
    roi_path = out.parent / "roi.json"
    _write_json(roi_path, roi)
    _log(args, f"wrote {out} and {roi_path} ({len(windows)} windows)")
    return 0


# ---------------------------------------------------------------- simulate

def _cw_result_rows(trace, result):
    rows = []
    for seg, est in zip(result.segmentation.usable, result.pulses):
        start = trace.t0 + seg.i_start * trace.dt
        rows.append((start, float(np.sqrt(est.transmission)),
                     est.transmission, est.dphi, est.residual, est.flags))
    return rows

_CW_RESULT_HEADER = ("window_start_s", "t_amp", "transmission", "dphi_rad",
                     "residual_V", "flags")


def _flag_counts(pulses) -> dict:
    counts: dict[str, int] = {}
    for p in pulses:
        for f in p.flags:
            counts[f] = counts.get(f, 0) + 1
    return counts


def _cw_summary(run) -> dict:
    result, seg = run.result, run.result.segmentation
    pairs = run.matched()
    err_t = [abs(e.transmission - t.transmission) for t, e in pairs
             if math.isfinite(e.transmission)]
    err_p = [abs(e.dphi - t.dphi) for t, e in pairs if math.isfinite(e.dphi)]
    return {
        "mode": "cw",
        "gamma": run.plan.readout.gamma,
        "n_windows": len(run.windows),
        "n_usable": len(result.pulses),
        "n_dropped": seg.n_dropped,
        "n_partial": seg.n_partial,
        "n_quadrature": sum(1 for p in result.pulses if p.quadrature),
        "flag_counts": _flag_counts(result.pulses),
        "mean_a_local_V": float(np.mean([p.a_local for p in result.pulses])),
        "mean_transmission": result.mean_transmission(),
        "mean_dphi_rad": result.mean_dphi(),
        "mean_dphi_over_pi": result.mean_dphi() / math.pi,
        "truth": {
            "mean_transmission": float(np.mean(
                [t.transmission for t, _ in pairs])),
            "mean_dphi_rad": float(np.mean([t.dphi for t, _ in pairs])),
            "max_abs_err_transmission": max(err_t, default=math.nan),
            "max_abs_err_dphi_rad": max(err_p, default=math.nan),
        },
    }


def _pulsed_rows(result):
    rows = []
    for p in result.pulses:
        rows.append((p.index, p.transmission, p.transmission_late, p.dphi,
                     p.dphi / math.pi, p.cos_psi, p.cos_theta, p.flags))
    return rows

_PULSED_HEADER = ("pulse_index", "transmission", "transmission_late",
                  "dphi_rad", "dphi_over_pi", "cos_psi", "cos_theta", "flags")


def _pulsed_summary(run) -> dict:
    r, t = run.result, run.truth
    return {
        "mode": "pulsed",
        "gamma": run.plan.readout.gamma,
        "n_pulses": len(r.pulses),
        "flag_counts": _flag_counts(r.pulses),
        "flags": list(r.flags),
        "transmission": r.transmission,
        "dphi_rad": r.dphi,
        "dphi_over_pi": r.dphi / math.pi,
        "cos_theta": r.cos_theta,
        "truth": {
            "transmission": t.transmission,
            "dphi_rad": t.dphi,
            "abs_err_transmission": abs(r.transmission - t.transmission),
            "abs_err_dphi_rad": abs(r.dphi - t.dphi),
        },
    }


def cmd_simulate(args) -> int:
    cfg = _load(args)
    mode = cfg.mode(args.mode)
    plan = cfg.experiment_plan(mode=mode, seed=args.seed)
    fmt = cfg.output_format()
    out_dir = Path(args.out_dir if args.out_dir is not None
                   else cfg.output.get("directory", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    if mode == "cw":
        run = run_virtual_cw(plan)
        trace_path = _write_trace(out_dir / "trace_cw", run.trace, fmt)
        _write_csv(out_dir / "truth_cw.csv",
                   ("window_index", "window_start_s", "delta_s_hz",
                    "transmission", "dphi_rad", "dphi_signed_rad",
                    "theta_rad"),
                   [(i, w.t_start, t.delta_s / _TWO_PI, t.transmission,
                     t.dphi, t.dphi_signed, t.theta)
                    for i, (w, t) in enumerate(zip(run.windows, run.truth))])
        _write_csv(out_dir / "results_cw.csv", _CW_RESULT_HEADER,
                   _cw_result_rows(run.trace, run.result))
        _write_json(out_dir / "summary_cw.json", _cw_summary(run))
        _log(args, f"wrote {trace_path} and cw results to {out_dir}")
        return 0

    run = run_virtual_pulsed(plan)
    on_path = _write_trace(out_dir / "trace_pulsed_on", run.trace_on, fmt)
    _write_trace(out_dir / "trace_pulsed_off", run.trace_off, fmt)
    t = run.truth
    _write_csv(out_dir / "truth_pulsed.csv",
               ("delta_s_hz", "transmission", "dphi_rad", "dphi_signed_rad",
                "theta_rad"),
               [(t.delta_s / _TWO_PI, t.transmission, t.dphi, t.dphi_signed,
                 t.theta)])
    _write_csv(out_dir / "results_pulsed.csv", _PULSED_HEADER,
               _pulsed_rows(run.result))
    _write_json(out_dir / "summary_pulsed.json", _pulsed_summary(run))
    _log(args, f"wrote {on_path} and pulsed results to {out_dir}")
    return 0


# ----------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    trace = read_trace(args.trace)
    cfg = load_config(args.config) if args.config is not None else None
    gamma = trace.meta.get("gamma")
    tau = trace.meta.get("tau")
    if cfg is not None:
        if gamma is None:
            gamma = cfg.readout.gamma
        if tau is None:
            tau = cfg.readout.tau

    if args.off is not None:
        off = read_trace(args.off)
        result = analyze_pulsed(trace, off, gamma=gamma)
        header, rows = _PULSED_HEADER, _pulsed_rows(result)
        summary = {
            "mode": "pulsed",
            "n_pulses": len(result.pulses),
            "flag_counts": _flag_counts(result.pulses),
            "flags": list(result.flags),
            "transmission": result.transmission,
            "dphi_rad": result.dphi,
            "dphi_over_pi": result.dphi / math.pi,
            "cos_theta": result.cos_theta,
        }
    else:
        result = analyze_cw(trace, gamma=gamma, tau=tau)
        header, rows = _CW_RESULT_HEADER, _cw_result_rows(trace, result)
        summary = {
            "mode": "cw",
            "n_usable": len(result.pulses),
            "n_dropped": result.segmentation.n_dropped,
            "n_partial": result.segmentation.n_partial,
            "n_quadrature": sum(1 for p in result.pulses if p.quadrature),
            "flag_counts": _flag_counts(result.pulses),
            "mean_transmission": result.mean_transmission(),
            "mean_dphi_rad": result.mean_dphi(),
            "mean_dphi_over_pi": result.mean_dphi() / math.pi,
        }

    if args.out is None:
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        print("\n".join(lines))
    else:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        _write_csv(out, header, rows)
        summary_path = out.with_name(out.stem + "_summary.json")
        _write_json(summary_path, summary)
        _log(args, f"wrote {out} and {summary_path}")
    return 0


# ------------------------------------------------------------------- sweep

def cmd_sweep(args) -> int:
    cfg = _load(args)
    plan = cfg.experiment_plan(mode="cw", seed=args.seed)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list: {exc}") from exc
    if not values:
        raise ConfigError("--values must hold at least one number")
    rows = sweep(plan, args.axis, values)
    header = ("value", "transmission", "dphi_rad", "transmission_truth",
              "dphi_truth_rad", "n_windows")
    table = [(r.value, r.transmission, r.dphi, r.transmission_truth,
              r.dphi_truth, r.n_windows) for r in rows]
    if args.out is None:
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in table]
        print("\n".join(lines))
    else:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        _write_csv(out, header, table)
        _log(args, f"wrote {out} ({len(rows)} rows)")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", default=None,
                        help="TOML plan file")
    common.add_argument("--verbose", action="store_true",
                        help="progress messages on stderr")
    common.add_argument("--seed", type=int, default=None,
                        help="override the plan seed")

    parser = argparse.ArgumentParser(
        prog="ladderphase",
        description="Phase modulation in a warm-vapour ladder system: "
                    "spectra, virtual experiments, trace recovery.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common],
                       help="steady-state scan and operating windows")
    p.add_argument("--delta-s-start", type=float, default=None, metavar="GHZ",
                   help="scan start, signal detuning in GHz")
    p.add_argument("--delta-s-stop", type=float, default=None, metavar="GHZ",
                   help="scan stop, signal detuning in GHz")
    p.add_argument("--points", type=int, default=None,
                   help="number of detunings")
    p.add_argument("--out", default="spectrum.csv", metavar="FILE",
                   help="spectrum CSV; roi.json lands next to it")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", parents=[common],
                       help="synthesise traces and run the recovery")
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--out-dir", default=None, metavar="DIR",
                   help="artifact directory (default from [output])")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common],
                       help="recover modulation from a trace file")
    p.add_argument("--trace", required=True, metavar="FILE",
                   help="detector trace, CSV or binary")
    p.add_argument("--off", default=None, metavar="FILE",
                   help="control-off reference trace (pulsed mode)")
    p.add_argument("--out", default=None, metavar="FILE",
                   help="results CSV; summary JSON lands next to it "
                        "(default: CSV on stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", parents=[common],
                       help="repeat the CW experiment along one plan axis")
    p.add_argument("--axis", required=True,
                   help="dotted plan field, e.g. beam.power")
    p.add_argument("--values", required=True, metavar="V1,V2,...",
                   help="comma-separated axis values")
    p.add_argument("--out", default=None, metavar="FILE",
                   help="sweep CSV (default: stdout)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TraceFormatError, OSError) as exc:
        print(f"ladderphase: {exc}", file=sys.stderr)
        return 4
    except (SolverError, IntegrationFailure, CalibrationError,
            SegmentationError, UnphysicalSumError, PhaseUnobservableError,
            MissingReferenceError) as exc:
        print(f"ladderphase: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DomainError, ArgumentError, LadderphaseError) as exc:
        print(f"ladderphase: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
