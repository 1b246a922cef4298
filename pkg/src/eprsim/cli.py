"""Command-line entry point: ``eprsim {run,sweep,frames,chsh,validate}``.

Exit codes: 0 success, 1 usage or validation failure, 2 I/O failure.
Machine-readable output goes to stdout (or ``--out``); logs go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace

from . import engine, stats
from . import polarization as pol
from .exceptions import EprSimError, ScenarioSyntaxError
from .scenario import (
    DeviationMode,
    Scenario,
    build_timeline,
    load_scenario,
    parse_angle,
    parse_scenario,
    validate,
)

log = logging.getLogger("eprsim")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _angle(text):
    try:
        return parse_angle(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}") from None


def _beta(text):
    value = float(text)
    if not abs(value) < 1.0:
        raise argparse.ArgumentTypeError(f"|beta| must be < 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eprsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate a scenario and write trial records")
    p.add_argument("scenario_file")
    p.add_argument("--out", help="write records here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, help="override run.seed")

    p = sub.add_parser("sweep", help="analytic vs empirical statistics against relative angle")
    p.add_argument("scenario_file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--angles", nargs="+", type=_angle, help="relative angles (radians or NNdeg)")
    g.add_argument("--grid", type=int, help="number of evenly spaced angles on [0, pi/2]")
    p.add_argument("--observable", choices=("p", "E"), default="p")

    p = sub.add_parser("frames", help="event order and collapse locus in boosted frames")
    p.add_argument("scenario_file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta", nargs="+", type=_beta, help="frame velocities in units of c")
    g.add_argument("--auto-critical", action="store_true", help="evaluate beta_c -/+ 0.1")

    p = sub.add_parser("chsh", help="CHSH value for the entangled state")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--trials", type=int, help="Monte Carlo trials per setting pair")
    g.add_argument("--analytic", action="store_true", help="closed form (default)")
    p.add_argument("--angles", nargs=4, type=_angle, metavar=("A", "A2", "B", "B2"),
                   default=list(stats.DEFAULT_CHSH_ANGLES))

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario_file")
    return parser


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _emit(text, out=None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2) + "\n"


def cmd_run(args):
    s = load_scenario(args.scenario_file)
    if args.seed is not None:
        s = replace(s, seed=args.seed)
    log.info("running %d trials (seed %d)", s.trials, s.seed)
    records = engine.run_batch(s)
    text = engine.to_jsonl(records) if args.format == "json" else engine.to_csv(records)
    _emit(text, args.out)
    summary = _dump(engine.summary(records))
    if args.out:
        sys.stdout.write(summary)
    else:
        sys.stderr.write(summary)
    return EXIT_OK


def sweep_rows(s, angles, observable="p"):
    """(relative angle, analytic, empirical, stderr) for each relative angle.

    Polarizer II is set to polarizer I plus the relative angle; the analytic
    column is the engine's exact distribution for that setting.
    """
    rows = []
    for k, delta in enumerate(angles):
        b = s.orientation_a + delta
        sk = replace(s, orientation_b=b, target_orientation=b, seed=engine.mix64(s.seed ^ (k + 1)))
        exact = engine.exact_distribution(sk)
        analytic_table = stats.CoincidenceTable.expected(
            [exact[pair] for pair in pol.OUTCOME_PAIRS], 1.0
        )
        table = stats.table_from_counts(engine.outcome_counts(sk))
        if observable == "p":
            analytic = analytic_table.n_tt
            empirical = table.probabilities[0]
            err = table.stderr[0]
        else:
            analytic = stats.correlation(analytic_table)
            empirical = stats.correlation(table)
            err = stats.correlation_stderr(table)
        rows.append((delta, analytic, empirical, err))
    return rows


def cmd_sweep(args):
    if args.grid is not None:
        if args.grid < 1:
            raise UsageError("--grid must be at least 1")
        n = args.grid
        angles = [0.0] if n == 1 else [k * (math.pi / 2) / (n - 1) for k in range(n)]
    elif args.angles:
        angles = args.angles
    else:
        angles = [k * math.pi / 36 for k in range(19)]
    s = load_scenario(args.scenario_file)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("relative_angle_rad", f"analytic_{args.observable}", f"empirical_{args.observable}", "stderr"))
    for row in sweep_rows(s, angles, args.observable):
        w.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue())
    return EXIT_OK


def frames_report(s, betas):
    beta_c = engine.frame_critical_velocity(s)
    timeline = build_timeline(s, s.path_choices()[0])
    return {
        "critical_velocity": beta_c,
        "path": timeline.path.value,
        "frames": [engine.frame_report(timeline, b).to_dict() for b in betas],
    }


def cmd_frames(args):
    s = load_scenario(args.scenario_file)
    beta_c = engine.frame_critical_velocity(s)
    if args.auto_critical:
        betas = [beta_c - 0.1, beta_c + 0.1]
    elif args.beta:
        betas = args.beta
    else:
        betas = [0.0, beta_c]
    for b in betas:
        if not abs(b) < 1.0:
            raise UsageError(f"beta {b!r} is not below the speed of light")
    _emit(_dump(frames_report(s, betas)))
    return EXIT_OK


def cmd_chsh(args):
    angles = tuple(args.angles)
    if args.trials is not None:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        s = Scenario(photon1_distance=1.0, photon2_direct_distance=1.0,
                     deviation_mode=DeviationMode.NONE, trials=args.trials)
        result = stats.empirical_chsh(s, angles)
    else:
        result = stats.chsh(pol.bell_state(), *angles)
    _emit(_dump(result.to_dict()))
    return EXIT_OK


def cmd_validate(args):
    try:
        s = parse_scenario(_read(args.scenario_file))
    except ScenarioSyntaxError as exc:
        print(f"error: syntax: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EprSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    diags = validate(s)
    for d in diags:
        sys.stdout.write(f"{d}\n")
    return EXIT_USAGE if any(d.severity == "error" for d in diags) else EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "frames": cmd_frames,
    "chsh": cmd_chsh,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"eprsim: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, EprSimError) as exc:
        print(f"eprsim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
