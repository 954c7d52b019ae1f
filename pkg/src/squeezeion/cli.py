"""Command line front end.

Every subcommand reads a JSON run configuration (a path or a shipped preset
name), writes one table to ``--out`` (CSV by default) with a
``<out>.meta.json`` sidecar, and exits with

    0  success
    2  configuration, invariant or sample-rejection error
    3  fit failure
    4  oracle check failure

Errors are reported on stderr as a single ``squeezeion: error[<tag>]: <msg>``
line.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .continuous import (
    ContinuousConfig,
    DecouplingScan,
    GCalibrationPoint,
    decoupling_scan,
    extract_g,
    fit_decoupling_scan,
    fit_linear_g,
)
from .core import ScanResult, hz_to_rad, rad_to_hz, squeezing_db
from .errors import ConfigError, DegenerateError, FitFailure, OracleMismatch, SqueezeIonError
from .io import PRESETS, emit_csv, emit_json, load_config, read_table, run_metadata, write_sidecar
from .sensing import SensingParams, enhancement_scan
from .spin_squeezing import SqueezeRunParams, squeezing_scan
from .stroboscopic import PhaseScanPoint, StroboConfig, fit_strobo_r, phase_scan

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_ORACLE, EXIT_OTHER = 0, 2, 3, 4, 1
FIT_COMMANDS = ("fit-strobo", "fit-decouple", "fit-gv")


def _require_data(args):
    if not args.data:
        raise ConfigError(f"{args.command} needs --data PATH")
    return args.data


# ---------------------------------------------------------------------------
# Subcommands: each returns (ScanResult, summary dict)
# ---------------------------------------------------------------------------


def _strobo_cfg(cfg):
    return StroboConfig(cfg.trap(), cfg.drive(), cfg.motion(), t_s=cfg["scan"]["t_s"],
                        delta_phi=cfg["drive"]["delta_phi_rad"])


def cmd_strobo_scan(cfg, args):
    sc = _strobo_cfg(cfg)
    phis = np.linspace(0, 2 * math.pi, cfg["scan"]["phase_points"], endpoint=False)
    pts = phase_scan(sc, phis)
    res = ScanResult(
        {
            "delta_phi_rad": phis,
            "bright_fraction": np.array([p.bright_fraction for p in pts]),
            "std_dev": np.array([p.std_dev for p in pts]),
        },
        {"r": sc.r},
    )
    return res, {"r": sc.r}


def cmd_fit_strobo(cfg, args):
    tab = read_table(_require_data(args), ("delta_phi_rad", "bright_fraction"))
    std = tab.get("std_dev", np.zeros_like(tab["bright_fraction"]))
    data = [PhaseScanPoint(float(p), float(b), float(s))
            for p, b, s in zip(tab["delta_phi_rad"], tab["bright_fraction"], std)]
    s = cfg["scan"]
    fit = fit_strobo_r(data, _strobo_cfg(cfg), nbar_err=s["nbar_err"], fit_amplitude=s["fit_amplitude"])
    amp_db, var_db = squeezing_db(fit.r)
    row = {
        "r": fit.r,
        "r_err": fit.r_err,
        "r_stat": fit.r_stat,
        "r_sys": fit.r_sys,
        "ftau_sq": fit.amplitude,
        "squeezing_amplitude_db": amp_db,
        "squeezing_variance_db": var_db,
    }
    return ScanResult(row, dict(row)), row


def cmd_sensitivity(cfg, args):
    d, s, sens = cfg["drive"], cfg["scan"], cfg["sensing"]
    p = SensingParams(
        f=d["f_rad_s"],
        Gamma=d["gamma_per_s"],
        tau=d["tau_s"],
        r=cfg["motion"]["r"],
        g=math.inf if sens["instantaneous_squeeze"] else hz_to_rad(d["g_hz"]),
        sigma=hz_to_rad(cfg["noise"]["sigma_hz"]),
        nbar=cfg["motion"]["nbar"],
    )
    taus = np.geomspace(s["tau_start_s"], s["tau_stop_s"], s["tau_points"])
    res = enhancement_scan(p, taus, sql_var=sens["sql_var"])
    keys = ("optimal_gain_db", "db_below_sql_r", "db_below_sql_r0", "tau_opt_r_s", "tau_opt_r0_s")
    return res, {k: res.metadata[k] for k in keys}


def _continuous_cfg(cfg):
    return ContinuousConfig(cfg.trap(), cfg.drive(), cfg.motion(), cfg.noise(),
                            delta_phi_c=cfg["drive"]["delta_phi_c_rad"])


def cmd_decouple_scan(cfg, args):
    s = cfg["scan"]
    det_hz = np.linspace(s["delta_start_hz"], s["delta_stop_hz"], s["delta_points"])
    res = decoupling_scan(_continuous_cfg(cfg), hz_to_rad(det_hz))
    # report the requested grid rather than its rad/s round trip
    res.columns["delta_hz"] = det_hz
    i = int(np.nanargmin(res["bright_fraction"]))
    summary = {"min_bright_fraction": float(res["bright_fraction"][i]), "at_delta_hz": float(res["delta_hz"][i])}
    return res, summary


def cmd_fit_decouple(cfg, args):
    tab = read_table(_require_data(args), ("delta_hz", "bright_fraction"))
    scan = DecouplingScan(hz_to_rad(tab["delta_hz"]), tab["bright_fraction"], cfg["drive"]["tau_s"])
    fit = fit_decoupling_scan(scan, _continuous_cfg(cfg))
    row = {"nbar": fit.nbar, "beta_abs": fit.beta, "cost": fit.cost}
    return ScanResult(row, dict(row)), row


def cmd_extract_g(cfg, args):
    delta_hz = args.delta_hz if args.delta_hz is not None else cfg["drive"]["delta_hz"]
    tau = args.tau_s if args.tau_s is not None else cfg["drive"]["tau_s"]
    k = args.k if args.k is not None else cfg["scan"]["k"]
    if not tau > 0:
        raise ConfigError(f"tau_s must be > 0, got {tau}")
    if k < 1:
        raise ConfigError(f"k must be a positive integer, got {k}")
    g_hz = rad_to_hz(extract_g(hz_to_rad(delta_hz), tau, k))
    row = {"delta_hz": float(delta_hz), "tau_s": float(tau), "k": int(k), "g_hz": g_hz}
    return ScanResult(row, dict(row)), {"g_hz": g_hz}


def cmd_fit_gv(cfg, args):
    tab = read_table(_require_data(args), ("voltage_v", "g_hz"))
    taus = tab.get("tau_s", np.full_like(tab["voltage_v"], cfg["drive"]["tau_s"]))
    points = [GCalibrationPoint(float(v), float(hz_to_rad(g)), float(t))
              for v, g, t in zip(tab["voltage_v"], tab["g_hz"], taus)]
    fit = fit_linear_g(points, zero_intercept=cfg["scan"]["zero_intercept"])
    slope_hz, icpt_hz = rad_to_hz(fit.slope), rad_to_hz(fit.intercept)
    v = tab["voltage_v"]
    res = ScanResult(
        {
            "voltage_v": v,
            "g_hz": tab["g_hz"],
            "g_fit_hz": slope_hz * v + icpt_hz,
            "residual_hz": rad_to_hz(np.asarray(fit.residuals)),
        },
        {"slope_hz_per_v": slope_hz, "intercept_hz": icpt_hz},
    )
    return res, {"slope_hz_per_v": slope_hz, "intercept_hz": icpt_hz}


def squeeze_params(cfg) -> SqueezeRunParams:
    sp = cfg["spin"]
    d = cfg["drive"]
    return SqueezeRunParams(
        N=int(cfg["trap"]["n_ions"]),
        f=d["f_rad_s"],
        g=hz_to_rad(d["g_hz"]),
        tau=d["tau_s"],
        rates=cfg.rates(),
        nbar=cfg["motion"]["nbar"],
        noise=cfg.noise(),
        Jbar_ref=cfg.jbar(),
        delta=hz_to_rad(d["delta_hz"]) if d["delta_hz"] > 0 else None,
        single_loop=sp["single_loop"],
        coupling=sp["coupling"],
        averaging=sp["averaging"],
    )


def cmd_spin_squeeze(cfg, args):
    s = cfg["scan"]
    taus = np.geomspace(s["tau_start_s"], s["tau_stop_s"], s["tau_points"])
    res = squeezing_scan(squeeze_params(cfg), taus)
    return res, {k: res.metadata[k] for k in ("optimal_xi_db", "optimal_tau_s")}


def cmd_oracle_check(cfg, args):
    from .oracle.checks import REGISTRY, manifest, run_checks

    names = args.checks or None
    if names:
        unknown = [n for n in names if n not in REGISTRY]
        if unknown:
            raise ConfigError(f"unknown oracle checks {unknown}; known: {sorted(REGISTRY)}")
    results = run_checks(names)
    man = manifest(results)
    res = ScanResult(
        {
            "name": np.array([r.name for r in results]),
            "closed_forms": np.array([";".join(r.closed_forms) for r in results]),
            "max_deviation": np.array([r.max_deviation for r in results]),
            "tolerance": np.array([r.tolerance for r in results]),
            "passed": np.array([r.passed for r in results]),
            "cases": np.array([r.cases for r in results]),
        },
        man,
    )
    failed = [r.name for r in results if not r.passed]
    summary = {"passed": man["passed"], "failed": ";".join(failed)}
    if failed:
        raise OracleMismatch(f"checks failed: {', '.join(failed)}", res, summary)
    return res, summary


COMMANDS = {
    "strobo-scan": (cmd_strobo_scan, "stroboscopic bright fraction versus relative phase"),
    "fit-strobo": (cmd_fit_strobo, "fit the squeezing parameter to a phase scan (--data)"),
    "sensitivity": (cmd_sensitivity, "displacement variance with and without squeezing versus tau"),
    "decouple-scan": (cmd_decouple_scan, "continuous-protocol bright fraction versus detuning"),
    "fit-decouple": (cmd_fit_decouple, "fit (nbar, |beta|) to a decoupling scan (--data)"),
    "extract-g": (cmd_extract_g, "parametric coupling from a measured decoupling frequency"),
    "fit-gv": (cmd_fit_gv, "linear fit of g against drive voltage (--data)"),
    "spin-squeeze": (cmd_spin_squeeze, "Ramsey squeezing versus interaction time"),
    "oracle-check": (cmd_oracle_check, "certify the closed forms against brute-force simulation"),
}


# ---------------------------------------------------------------------------
# Plumbing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="squeezeion",
        description="Parametrically amplified spin-motion coupling in trapped-ion crystals.",
        epilog=f"Presets: {', '.join(PRESETS)}.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="config file or preset name (defaults when omitted)")
        p.add_argument("--out", help="output path; stdout when omitted")
        p.add_argument("--seed", type=int, help="override noise.seed")
        p.add_argument("--samples", type=int, help="override noise.n_samples")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name in ("fit-strobo", "fit-decouple", "fit-gv"):
            p.add_argument("--data", help="input CSV")
        if name == "extract-g":
            p.add_argument("--delta-hz", type=float, help="measured decoupling frequency (Hz)")
            p.add_argument("--tau-s", type=float, help="arm duration (s)")
            p.add_argument("--k", type=int, help="decoupling order")
        if name == "oracle-check":
            p.add_argument("--check", dest="checks", action="append", help="run only this check (repeatable)")
    return ap


def exit_code(err: BaseException, command: str) -> int:
    if isinstance(err, OracleMismatch):
        return EXIT_ORACLE
    if isinstance(err, FitFailure):
        return EXIT_FIT
    if isinstance(err, DegenerateError) and command in FIT_COMMANDS:
        return EXIT_FIT
    if isinstance(err, SqueezeIonError):
        return EXIT_CONFIG
    return EXIT_OTHER


def _emit(res, summary, cfg, args):
    text_out = emit_json if args.format == "json" else emit_csv
    text_out(res, args.out)
    if args.out:
        write_sidecar(args.out, run_metadata(cfg, args.command, res.metadata))
        for k, v in summary.items():
            print(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn, _ = COMMANDS[args.command]
    try:
        if args.samples is not None and args.samples < 1:
            raise ConfigError(f"--samples must be >= 1, got {args.samples}")
        if args.seed is not None and args.seed < 0:
            raise ConfigError(f"--seed must be >= 0, got {args.seed}")
        cfg = load_config(args.config, seed=args.seed, samples=args.samples)
        try:
            res, summary = fn(cfg, args)
        except OracleMismatch as err:
            # the failing manifest is still written before reporting
            _, res, summary = err.args
            _emit(res, summary, cfg, args)
            raise OracleMismatch(err.args[0]) from None
        _emit(res, summary, cfg, args)
    except SqueezeIonError as err:
        print(f"squeezeion: error[{err.tag}]: {err}", file=sys.stderr)
        return exit_code(err, args.command)
    except OSError as err:
        print(f"squeezeion: error[io-error]: {err}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
