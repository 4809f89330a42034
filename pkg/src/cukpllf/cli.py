"""Command line entry point.

    cukpllf run <preset|config.json>... [--out DIR] [--window T0:T1] [--duration S] [--jobs N]
    cukpllf certify <preset|config.json>
    cukpllf presets list | show NAME

Exit codes: 0 success, 1 certificate failure, 2 I/O or configuration error,
3 simulation anomaly (chattering or too little steady-state data).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .certificate import verify_all
from .converter import STATE_NAMES, build_subsystems, equilibrium
from .errors import ConfigError, SimulationError
from .metrics import compute_metrics
from .scenarios import PRESET_DESCRIPTIONS, PRESETS, resolve
from .sim import run_simulation

log = logging.getLogger("cukpllf")

EXIT_OK = 0
EXIT_CERT_FAIL = 1
EXIT_IO = 2
EXIT_SIM = 3

TRACE_HEADER = ("t",) + STATE_NAMES + ("q", "V")
EVENTS_HEADER = ("t", "j", "facet", "q_before", "q_after")


def write_trace(path, trace, window=None):
    if window is not None:
        trace = trace.window(*window)
    table = np.column_stack([trace.t, trace.x, trace.q, trace.V])
    fmt = ["%.17e"] * 5 + ["%d", "%.17e"]
    np.savetxt(path, table, fmt=fmt, delimiter=",", header=",".join(TRACE_HEADER), comments="")


def write_events(path, events, window=None):
    rows = [e for e in events if window is None or window[0] <= e.t <= window[1]]
    with open(path, "w") as fh:
        fh.write(",".join(EVENTS_HEADER) + "\n")
        for e in rows:
            fh.write(f"{e.t:.17e},{e.j},{e.facet},{e.q_before},{e.q_after}\n")


def certificate_reports(scenario):
    subs = build_subsystems(scenario.params, scenario.op_spec)
    return verify_all(scenario.polytope(), *subs)


def run_command(scenario, out_dir, window=None):
    """Simulate ``scenario`` and write trace, events, metrics and certificates to ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-test"
        probe.touch()
        probe.unlink()
    except OSError as err:
        log.error("cannot write to %s: %s", out_dir, err)
        return EXIT_IO

    poly = scenario.polytope()
    equil = equilibrium(scenario.params, scenario.op_spec)
    try:
        trace, events = run_simulation(scenario.params, scenario.op_spec, poly, scenario.sim)
    except SimulationError as err:
        log.error("%s: %s", scenario.name, err)
        return EXIT_SIM

    try:
        write_trace(out_dir / "trace.csv", trace, window)
        write_events(out_dir / "events.csv", events, window)
        reports = [r.to_dict() for r in certificate_reports(scenario)]
        (out_dir / "certificates.json").write_text(json.dumps(reports, indent=2) + "\n")
    except OSError as err:
        log.error("writing results failed: %s", err)
        return EXIT_IO

    try:
        metrics = compute_metrics(trace, events, poly, equil)
    except SimulationError as err:
        log.error("%s: %s", scenario.name, err)
        return EXIT_SIM
    try:
        (out_dir / "metrics.json").write_text(json.dumps(metrics.to_dict(), indent=2) + "\n")
    except OSError as err:
        log.error("writing metrics failed: %s", err)
        return EXIT_IO
    log.info(
        "%s: %d switch events, period %.4g s, duty %.4f -> %s",
        scenario.name, metrics.switch_count, metrics.period_measured, metrics.duty_measured, out_dir,
    )
    return EXIT_OK


def certify_command(scenario, stream=None):
    stream = stream or sys.stdout
    reports = certificate_reports(scenario)
    for r in reports:
        print(json.dumps(r.to_dict()), file=stream)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CERT_FAIL


def _parse_window(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected T0:T1, got {text!r}")
    if hi < lo:
        raise argparse.ArgumentTypeError("window end precedes start")
    return lo, hi


def _run_one(ref, out_dir, window, duration):
    scenario = resolve(ref)
    if duration is not None:
        scenario = scenario.with_duration(duration)
    return run_command(scenario, out_dir, window)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cukpllf",
        description="Simulate and certify a Cuk converter regulated by polytope-triggered switching.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one or more scenarios")
    run.add_argument("scenarios", nargs="+", metavar="SCENARIO")
    run.add_argument("--out", default="out", help="output directory (default: ./out)")
    run.add_argument("--window", type=_parse_window, help="restrict CSV output to T0:T1 seconds")
    run.add_argument("--duration", type=float, help="override the simulated duration (s)")
    run.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")

    cert = sub.add_parser("certify", help="check the stabilizability certificates")
    cert.add_argument("scenario", metavar="SCENARIO")

    presets = sub.add_parser("presets", help="list or show built-in scenarios")
    presets.add_argument("action", choices=("list", "show"))
    presets.add_argument("name", nargs="?")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )

    try:
        if args.command == "presets":
            if args.action == "list":
                for name, desc in PRESET_DESCRIPTIONS.items():
                    print(f"{name}\t{desc}")
                return EXIT_OK
            if args.name not in PRESETS:
                parser.error(f"unknown preset {args.name!r}")
            print(json.dumps(PRESETS[args.name].to_dict(), indent=2))
            return EXIT_OK

        if args.command == "certify":
            return certify_command(resolve(args.scenario))

        if args.duration is not None and args.duration <= 0:
            parser.error("--duration must be positive")
        refs = args.scenarios
        for ref in refs:
            resolve(ref)  # fail fast on bad configs
        if len(refs) == 1:
            return _run_one(refs[0], args.out, args.window, args.duration)
        outs = [str(Path(args.out) / Path(ref).stem) for ref in refs]
        jobs = [(ref, out, args.window, args.duration) for ref, out in zip(refs, outs)]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                codes = list(pool.map(_run_one, *zip(*jobs)))
        else:
            codes = [_run_one(*job) for job in jobs]
        return max(codes)
    except ConfigError as err:
        log.error("config error: %s", err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
