"""Command-line front end.

Commands::

    overturn-sim simulate [--config FILE] [--scenario slope|flat]
                          [--out-csv FILE] [--out-json FILE]
    overturn-sim sweep    [--config FILE] --speeds A:B:S --gradients A:B:S
                          [--out-csv FILE] [--workers N]
    overturn-sim plotdata RUN_CSV OUT_DIR

Exit codes: 0 completed run (or successful sweep / plotdata), 10 rollover,
1 any error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

from overturn_sim.config import ConfigError, config_to_dict, load_config
from overturn_sim.sim import CHANNELS, TerminalStatus, run, sweep
from overturn_sim.terrain import Scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ROLLOVER = 10

CSV_HEADER = ("t",) + CHANNELS
SWEEP_HEADER = ("speed", "gradient_deg", "status", "t_liftoff", "t_offroad", "t_rollover")

log = logging.getLogger("overturn_sim")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors share the generic error code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _fmt(v: float) -> str:
    return repr(float(v))


def _open_out(path):
    if path is None or path == "-":
        return open(sys.stdout.fileno(), "w", newline="", closefd=False, encoding="utf-8")
    return open(path, "w", newline="", encoding="utf-8")


def write_run_csv(out, fh) -> None:
    """One row per step, shortest round-trip float text."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    cols = [out.t] + [out.channels[name] for name in CHANNELS]
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])


def run_summary(out) -> dict:
    return {
        "scenario": out.config.scenario.value,
        "terminal_status": out.status.value,
        "events": [{"kind": e.kind.value, "t": e.t} for e in out.events],
        "message": out.message,
        "config": config_to_dict(out.config),
    }


def parse_range(text: str, name: str) -> list[float]:
    """Inclusive ``start:stop:step`` range."""
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"{name} must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise CliError(f"{name} must contain three numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in (start, stop, step)):
        raise CliError(f"{name} values must be finite")
    if step <= 0:
        raise CliError(f"{name} step must be > 0, got {step:g}")
    if stop < start:
        raise CliError(f"{name} is empty: stop {stop:g} < start {start:g}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    cfg = dataclasses.replace(cfg, scenario=Scenario(args.scenario))
    out = run(cfg)
    if args.out_csv:
        with _open_out(args.out_csv) as fh:
            write_run_csv(out, fh)
    summary = run_summary(out)
    if args.out_json:
        with _open_out(args.out_json) as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    events = ", ".join(f"{e['kind']}@{e['t']:.3f}s" for e in summary["events"]) or "none"
    print(f"{cfg.scenario.value}: {out.status.value} (events: {events})", file=sys.stderr)
    if out.status is TerminalStatus.ROLLED_OVER:
        return EXIT_ROLLOVER
    if out.status is TerminalStatus.ABORTED:
        print(f"error: {out.message}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_sweep(args) -> int:
    speeds = parse_range(args.speeds, "--speeds")
    gradients_deg = parse_range(args.gradients, "--gradients")
    if any(v <= 0 for v in speeds):
        raise CliError("--speeds must be positive")
    if any(not 0 <= g < 90 for g in gradients_deg):
        raise CliError("--gradients must lie in [0, 90) deg")
    base = load_config(args.config)
    smap = sweep(base, speeds, [math.radians(g) for g in gradients_deg], workers=args.workers)

    def opt(v):
        return "" if v is None else _fmt(v)

    with _open_out(args.out_csv) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for i, row in enumerate(smap.cells):
            for j, cell in enumerate(row):
                w.writerow([_fmt(speeds[i]), _fmt(gradients_deg[j]), cell.status,
                            opt(cell.t_liftoff), opt(cell.t_offroad), opt(cell.t_rollover)])
    errors = [c for c in smap if c.status == "Error"]
    for c in errors:
        print(f"cell speed={c.speed:g} gradient={math.degrees(c.gradient):g}: {c.message}",
              file=sys.stderr)
    return EXIT_OK


_PLOT_FILES = {
    "fig6a.dat": (("t", "fz_front_total", "fy_front"),
                  "front-axle vertical force and cornering force (N) against time (s)"),
    "fig6b.dat": (("t", "elev_front", "steer"),
                  "road elevation under the front axle (m) and steering angle (rad)"),
    "traj.dat": (("x", "y"), "CG trajectory in the world frame (m)"),
}


def cmd_plotdata(args) -> int:
    try:
        with open(args.run_csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(f"cannot read {args.run_csv!r}: {exc.strerror}") from None
    if not rows:
        raise CliError(f"{args.run_csv!r} is empty")
    header, data = rows[0], rows[1:]
    if not data:
        raise CliError(f"{args.run_csv!r} has no data rows")
    need = ("t", "fz_fl", "fz_fr", "fy_front", "elev_front", "steer", "x", "y")
    for name in need:
        if name not in header:
            raise CliError(f"{args.run_csv!r} is missing column '{name}'")
    idx = {name: header.index(name) for name in need}
    try:
        cols = {name: [float(r[i]) for r in data] for name, i in idx.items()}
    except (ValueError, IndexError):
        raise CliError(f"{args.run_csv!r} has malformed rows") from None
    cols["fz_front_total"] = [a + b for a, b in zip(cols["fz_fl"], cols["fz_fr"])]

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for fname, (names, title) in _PLOT_FILES.items():
        with open(out_dir / fname, "w", encoding="utf-8") as fh:
            fh.write(f"# {title}\n")
            fh.write("# " + " ".join(names) + "\n")
            for row in zip(*(cols[n] for n in names)):
                fh.write(" ".join(_fmt(v) for v in row) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="overturn-sim",
                     description="Tractor passage-slope overturning simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("--config", help="INI or JSON configuration file")
    p.add_argument("--scenario", choices=[s.value for s in Scenario], default="slope")
    p.add_argument("--out-csv", help="time-series CSV ('-' for stdout)")
    p.add_argument("--out-json", help="run summary JSON ('-' for stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="speed x gradient stability map")
    p.add_argument("--config", help="INI or JSON configuration file")
    p.add_argument("--speeds", required=True, help="m/s, start:stop:step (inclusive)")
    p.add_argument("--gradients", required=True,
                   help="deg, start:stop:step (inclusive); 0 selects the flat road")
    p.add_argument("--out-csv", help="output CSV (default stdout)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default $OVERTURN_SIM_THREADS or CPU count)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plotdata", help="gnuplot-ready files from a run CSV")
    p.add_argument("run_csv")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
