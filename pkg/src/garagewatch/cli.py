"""garagewatch command line.

Exit status: 0 on success, 1 on bad input or usage, 2 on internal error.
Machine-readable output goes to stdout as JSON; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import plotting
from .errors import GarageWatchError, InputError
from .garage import DriveCommand, MOTIONS, decode_drive_command, encode_drive_command, load_scenario, simulate_patrol
from .localization import (LOCALIZATION_METHODS, PathLossModel, estimate_from_readings, group_by_tick,
                           load_beacons, load_readings)
from .plates import consensus, load_candidates
from .registry import LookupConfig, OwnerLookupClient, load_registry
from .report import LocalizationConfig, build_report
from .solvers import METHODS, BenchConfig, TimingReport, bench_solve

STUB_ENV = "PATROL_STUB_FIXTURE"
log = logging.getLogger("garagewatch")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")


def cmd_localize(args):
    deployment = load_beacons(args.beacons)
    readings = load_readings(args.readings)
    if not readings:
        raise InputError(f"{args.readings}: no readings")
    model = PathLossModel(args.exponent)
    for tick, group in group_by_tick(readings).items():
        est = estimate_from_readings(group, deployment, model, args.method, args.max_beacons)
        _emit(est.as_dict())


def cmd_solve_bench(args):
    report = TimingReport()
    for method in args.method:
        for n in args.n:
            for workers in args.workers:
                cfg = BenchConfig(method, n, workers, args.trials, args.seed, tol=args.tol)
                part = bench_solve(cfg)
                for entry in part:
                    if entry.key not in report.entries:
                        report.add(entry)
    if args.format == "table":
        sys.stdout.write(report.to_table())
    else:
        sys.stdout.write(report.to_jsonl())
    if args.figures:
        path = plotting.plot_timing(report, Path(args.figures) / "timing.png")
        log.info("wrote %s", path)


def cmd_consensus(args):
    result = consensus(load_candidates(args.candidates), args.k)
    _emit(result.as_dict())


def _lookup_client(fixture):
    fixture = fixture or os.environ.get(STUB_ENV)
    if not fixture:
        return None
    return OwnerLookupClient(LookupConfig(fixture=fixture))


def cmd_registry_check(args):
    registry = load_registry(args.registry)
    out = {
        "records": len(registry),
        "stalls": [r.stall_id for r in registry],
        "plates": sorted(r.plate for r in registry if r.plate),
    }
    if args.plate:
        rec = registry.find_by_plate(args.plate)
        out["plate_match"] = dataclasses.asdict(rec) if rec else None
    if args.stall:
        rec = registry.find_by_stall(args.stall)
        out["stall_match"] = dataclasses.asdict(rec) if rec else None
    if args.owner:
        client = _lookup_client(args.owners)
        if client is None:
            raise InputError(f"--owner needs --owners or ${STUB_ENV}")
        rec = client.query(args.owner)
        out["owner"] = rec.as_dict() if rec else None
    _emit(out)


def cmd_patrol(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    registry = load_registry(args.registry)
    events = simulate_patrol(scenario)
    config = LocalizationConfig(method=args.method, path_loss=scenario.path_loss, max_beacons=args.max_beacons)
    report = build_report(events, registry, scenario.garage, config, _lookup_client(args.owners))
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.table:
        sys.stdout.write(report.to_table())
    elif args.out:
        _emit({"out": str(args.out), "statuses": {s.stall_id: str(s.status) for s in report.stalls}})
    else:
        sys.stdout.write(text)
    if args.figures:
        fig_dir = Path(args.figures)
        for path in (plotting.plot_occupancy(report, scenario.garage, fig_dir / "occupancy.png"),
                     plotting.plot_localization_error(report, fig_dir / "localization_error.png")):
            log.info("wrote %s", path)


def _parse_compact_command(text):
    letters = {v: k for k, v in MOTIONS.items()}
    text = text.strip()
    if len(text) < 2 or text[0].upper() not in letters or not text[1:].isdigit():
        raise InputError(f"expected a command like F090, got {text!r}")
    return DriveCommand(letters[text[0].upper()], int(text[1:]))


def cmd_codec(args):
    if args.encode is not None:
        frame = encode_drive_command(_parse_compact_command(args.encode))
        sys.stdout.write(frame.decode("ascii"))
    else:
        frame = args.decode if args.decode.endswith("\n") else args.decode + "\n"
        cmd = decode_drive_command(frame)
        _emit({"motion": cmd.motion, "angle": cmd.angle})


def build_parser():
    parser = _Parser(prog="garagewatch", description="Garage patrol monitoring toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("localize", help="estimate positions from a beacon reading log")
    p.add_argument("--beacons", required=True, help="JSON array of {id, x_m, y_m, tx_power_dbm}")
    p.add_argument("--readings", required=True, help="JSON lines of {tick, beacon_id, rssi_dbm}")
    p.add_argument("--method", choices=LOCALIZATION_METHODS, default="least-squares")
    p.add_argument("--exponent", type=float, default=2.0, help="path-loss exponent (default 2)")
    p.add_argument("--max-beacons", type=int, default=None, help="use only the N strongest beacons")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("solve-bench", help="Monte-Carlo timing of the linear solvers")
    p.add_argument("--method", nargs="+", choices=METHODS, default=["gauss"])
    p.add_argument("--n", nargs="+", type=int, default=[1024])
    p.add_argument("--workers", nargs="+", type=int, default=[1])
    p.add_argument("--trials", type=int, default=100, help="solves per configuration (40000 to match long runs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--format", choices=("jsonl", "table"), default="jsonl")
    p.add_argument("--figures", help="directory for timing.png")
    p.set_defaults(func=cmd_solve_bench)

    p = sub.add_parser("consensus", help="weighted-vote plate consensus")
    p.add_argument("--candidates", required=True, help="JSON lines of {tick, raw, confidence}")
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("registry-check", help="validate a tenant registry and run lookups")
    p.add_argument("--registry", required=True)
    p.add_argument("--plate", help="find the tenant owning this plate")
    p.add_argument("--stall", help="find the tenant of this stall")
    p.add_argument("--owner", help="query the owner-lookup stub for this plate")
    p.add_argument("--owners", help=f"owner fixture JSON (default ${STUB_ENV})")
    p.set_defaults(func=cmd_registry_check)

    p = sub.add_parser("patrol", help="simulate a patrol and write the monitoring report")
    p.add_argument("--scenario", required=True)
    p.add_argument("--registry", required=True)
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--owners", help=f"owner fixture JSON (default ${STUB_ENV})")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--method", choices=LOCALIZATION_METHODS, default="least-squares")
    p.add_argument("--max-beacons", type=int, default=3)
    p.add_argument("--table", action="store_true", help="print the fixed-width table instead of JSON")
    p.add_argument("--figures", help="directory for occupancy.png and localization_error.png")
    p.set_defaults(func=cmd_patrol)

    p = sub.add_parser("codec", help="encode or decode a serial drive-command frame")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--encode", help="compact command, e.g. F090")
    g.add_argument("--decode", help="frame text, e.g. F090")
    p.set_defaults(func=cmd_codec)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if not exc.code else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (GarageWatchError, OSError) as exc:
        print(f"garagewatch {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"garagewatch {args.command}: internal error: {exc!r}", file=sys.stderr)
        if args.verbose:
            log.exception("traceback")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
