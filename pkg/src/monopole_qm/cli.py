"""Command line interface.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical or
degeneracy error.  All numbers are written as shortest round-trip decimals,
so identical input produces byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

from . import effpot, oracle
from .config import ConfigError, RunConfig, load_config
from .core import MOMENT_NAMES, VARIABLES, jacobiator
from .dynamics import IntegratorConfig, Trajectory, evolve
from .errors import MonopoleError, NotLinearError, NumericalError
from .stationary import SaturationMode, residual, saturate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

EVOLVE_COLUMNS = ("t",) + VARIABLES + MOMENT_NAMES + Trajectory.MONITORS
STATIONARY_COLUMNS = VARIABLES + MOMENT_NAMES + ("residual",)
ORACLE_TOLERANCE = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x) -> str:
    return repr(float(x))


def _csv_line(values) -> str:
    return ",".join(v if isinstance(v, str) else fmt(v) for v in values) + "\n"


def _json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


@contextmanager
def _sink(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _output(args, cfg: RunConfig):
    fmt_ = args.format or cfg.output_format
    path = args.output if args.output is not None else cfg.output_path
    return fmt_, path


# -- subcommands --------------------------------------------------------------


def cmd_stationary(args, cfg: RunConfig) -> int:
    if cfg.mean is None:
        raise ConfigError("stationary needs an initial_state.mean section")
    state = saturate(cfg.mean, cfg.params, args.mode, cfg.transverse)
    res = residual(state, cfg.params)
    out_format, path = _output(args, cfg)
    with _sink(path) as fh:
        if out_format == "csv":
            fh.write(_csv_line(STATIONARY_COLUMNS))
            fh.write(_csv_line(list(state.mean) + list(state.moments) + [res]))
        else:
            fh.write(_json({
                "mode": SaturationMode(args.mode).value,
                "mean": dict(zip(VARIABLES, map(float, state.mean))),
                "moments": dict(zip(MOMENT_NAMES, map(float, state.moments))),
                "residual": res,
            }))
    return EXIT_OK


def _trajectory_rows(traj: Trajectory, stride: int):
    n = len(traj)
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    for i in idx:
        yield [traj.times[i], *traj.values[i], *traj.monitors[i]]


def cmd_evolve(args, cfg: RunConfig) -> int:
    if cfg.integrator is None:
        raise ConfigError("evolve needs an integrator section")
    initial = cfg.initial_state()
    aborted = None
    try:
        traj = evolve(initial, cfg.params, cfg.integrator)
    except NumericalError as exc:
        traj, aborted = exc.trajectory, exc
    out_format, path = _output(args, cfg)
    with _sink(path) as fh:
        if out_format == "csv":
            fh.write(_csv_line(EVOLVE_COLUMNS))
            for row in _trajectory_rows(traj, cfg.stride):
                fh.write(_csv_line(row))
            if aborted is not None:
                fh.write(f"# ABORTED t={fmt(aborted.t)}\n")
        else:
            doc = {"columns": list(EVOLVE_COLUMNS),
                   "rows": [list(map(float, r)) for r in _trajectory_rows(traj, cfg.stride)]}
            if aborted is not None:
                doc["aborted_t"] = float(aborted.t)
            fh.write(_json(doc))
        fh.flush()
    if aborted is not None:
        print(f"error: {aborted}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_veff(args, cfg: RunConfig) -> int:
    if not args.z_min < args.z_max:
        raise UsageError("--z-min must be smaller than --z-max")
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    report = effpot.veff_report(cfg.params, args.mode, args.z_min, args.z_max, args.n)
    out_format, path = _output(args, cfg)
    with _sink(path) as fh:
        if out_format == "csv":
            fh.write("z,veff\n")
            for z, v in report.samples:
                fh.write(_csv_line((z, v)))
            fh.write("# " + json.dumps(report.summary(), separators=(",", ":")) + "\n")
        else:
            fh.write(_json({
                "samples": {"z": report.samples[:, 0].tolist(), "veff": report.samples[:, 1].tolist()},
                "report": report.summary(),
            }))
    return EXIT_OK


def cmd_oracle_check(args, cfg: RunConfig) -> int:
    try:
        oracle.build_linear_system(cfg.params)
    except NotLinearError as exc:
        raise ConfigError(f"oracle-check needs a constant_z field: {exc}") from None
    integ = cfg.integrator or IntegratorConfig(10.0)
    initial = cfg.initial_state()
    traj = evolve(initial, cfg.params, integ)
    reference = oracle.propagate(initial, cfg.params, traj.times)
    err = oracle.max_relative_error(traj.values, reference)
    passed = err < ORACLE_TOLERANCE
    out_format, path = _output(args, cfg)
    with _sink(path) as fh:
        if out_format == "csv":
            fh.write("max_relative_error,tolerance,result\n")
            fh.write(_csv_line((err, ORACLE_TOLERANCE, "PASS" if passed else "FAIL")))
        else:
            fh.write(_json({"max_relative_error": err, "tolerance": ORACLE_TOLERANCE,
                            "passed": passed}))
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_jacobiator(args, cfg: RunConfig) -> int:
    value = jacobiator(cfg.params)
    out_format, path = _output(args, cfg)
    with _sink(path) as fh:
        if out_format == "csv":
            fh.write("%.17g\n" % value)
        else:
            fh.write(_json({"jacobiator": value}))
    return EXIT_OK


COMMANDS = {
    "stationary": cmd_stationary,
    "evolve": cmd_evolve,
    "veff": cmd_veff,
    "oracle-check": cmd_oracle_check,
    "jacobiator": cmd_jacobiator,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--output", help="output file (default: config output.path or stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    parser = _Parser(prog="monopole-qm",
                     description="Semiclassical moment dynamics in a magnetic monopole density.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    modes = [m.value for m in SaturationMode]

    p = sub.add_parser("stationary", parents=[common], help="saturated stationary moments")
    p.add_argument("--mode", choices=modes, default="corrected")
    sub.add_parser("evolve", parents=[common], help="integrate means and moments")
    p = sub.add_parser("veff", parents=[common], help="effective potential scan and report")
    p.add_argument("--z-min", type=float, default=-1.0)
    p.add_argument("--z-max", type=float, default=1.0)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--mode", choices=modes, default="corrected")
    sub.add_parser("oracle-check", parents=[common], help="compare evolve with exact propagation")
    sub.add_parser("jacobiator", parents=[common], help="print -e hbar^2 div B")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MonopoleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
