"""Command-line front end: densities, wave functions, tail curves, prolate
solutions, interval designs and the acceptance suites, written as CSV or JSON."""
import argparse
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from config import (
    CLI_COVERAGE_TRIALS,
    CSV_FLOAT_FORMAT,
    DEFAULT_GRID_POINTS,
    DEFAULT_RULE,
    DEFAULT_SEED,
    JSON_INDENT,
    configure_logging,
)
from errors import InvalidArgumentError, PhaseEstimationError
from interval import coverage_report, design
from numerics import make_grid
from spectral import solve_prolate
from tails import min_tail_curve, tail_curve
from verify import DEFAULT_TOLERANCES, SUITES, run_suites
from wavefn import BUILTIN_KINDS, builtin, density_frame

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
DESIGN_CURVES = ("dirichlet:1", "bump_g3", "prolate:2", "prolate:10")
DEFAULT_F_SPECS = {
    "density": ("constant",),
    "tails": DESIGN_CURVES,
    "wavefn": DESIGN_CURVES,
}


# =========================================================
# RUN CONFIG
# =========================================================
@dataclass(frozen=True)
class FSpec:
    kind: str
    m: int = 1
    R: Optional[float] = None
    c: float = 0.0
    base: str = "constant"

    def build(self, grid):
        if self.kind == "modulated":
            base = FSpec(self.base, m=self.m, R=self.R).build(grid)
            return builtin("modulated", grid, base=base, c=self.c)
        return builtin(self.kind, grid, m=self.m, R=self.R)


@dataclass(frozen=True)
class RunConfig:
    command: str
    f_specs: Tuple[FSpec, ...] = ()
    grid_points: int = DEFAULT_GRID_POINTS
    output_path: Optional[str] = None
    format: str = "csv"
    seed: int = DEFAULT_SEED
    tolerances: Mapping[str, float] = field(default_factory=dict)
    y_min: Optional[float] = None
    y_max: Optional[float] = None
    steps: Optional[int] = None
    y_values: Optional[Tuple[float, ...]] = None
    beta: Optional[float] = None
    n: Optional[int] = None
    trials: int = CLI_COVERAGE_TRIALS
    suite: str = "all"


def parse_f_spec(text, m=None, R=None, c=None, base=None):
    """'name' with flag parameters, or the compact 'name:param' form."""
    name, _, param = str(text).partition(":")
    name = name.strip()
    if name not in BUILTIN_KINDS:
        raise InvalidArgumentError(f"unknown wave function {name!r}; choose from {BUILTIN_KINDS}")
    try:
        if name == "dirichlet":
            m_value = int(param) if param else (1 if m is None else int(m))
            return FSpec(name, m=m_value)
        if name == "prolate":
            R_value = float(param) if param else R
            if R_value is None:
                raise InvalidArgumentError("prolate needs --R or the form prolate:R")
            return FSpec(name, R=float(R_value))
        if name == "modulated":
            c_value = float(param) if param else (0.0 if c is None else float(c))
            return FSpec(name, m=1 if m is None else int(m), R=R, c=c_value, base=base or "constant")
    except ValueError as exc:
        raise InvalidArgumentError(f"bad parameter in {text!r}: {exc}") from exc
    return FSpec(name)


def _parse_tolerances(items):
    tolerances = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or key not in DEFAULT_TOLERANCES:
            raise InvalidArgumentError(f"--tol expects NAME=VALUE with NAME in {sorted(DEFAULT_TOLERANCES)}")
        try:
            tolerances[key] = float(value)
        except ValueError as exc:
            raise InvalidArgumentError(f"--tol {item!r}: {exc}") from exc
    return tolerances


def build_run_config(args):
    specs = ()
    if args.command == "prolate":
        R = args.R if args.R is not None else 2.0
        specs = (FSpec("prolate", R=float(R)),)
    elif args.command in DEFAULT_F_SPECS:
        texts = args.f or list(DEFAULT_F_SPECS[args.command])
        specs = tuple(parse_f_spec(t, args.m, args.R, args.c, args.base) for t in texts)
    y_values = None
    if getattr(args, "y_values", None):
        try:
            y_values = tuple(float(v) for v in args.y_values.split(","))
        except ValueError as exc:
            raise InvalidArgumentError(f"--y-values: {exc}") from exc
    return RunConfig(
        command=args.command,
        f_specs=specs,
        grid_points=args.grid_points,
        output_path=args.out,
        format=args.format or ("json" if args.command in ("prolate", "design-interval", "verify") else "csv"),
        seed=args.seed,
        tolerances=_parse_tolerances(getattr(args, "tol", None)),
        y_min=getattr(args, "y_min", None),
        y_max=getattr(args, "y_max", None),
        steps=getattr(args, "steps", None),
        y_values=y_values,
        beta=getattr(args, "beta", None),
        n=getattr(args, "n", None),
        trials=getattr(args, "trials", CLI_COVERAGE_TRIALS),
        suite=getattr(args, "suite", "all"),
    )


# =========================================================
# OUTPUT
# =========================================================
def _frame_text(frame):
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def _json_text(payload):
    return json.dumps(payload, indent=JSON_INDENT, sort_keys=True) + "\n"


def emit(cfg, frame=None, payload=None):
    if cfg.format == "csv":
        if frame is None:
            raise InvalidArgumentError(f"{cfg.command} has no CSV form; use --format json")
        text = _frame_text(frame)
    else:
        text = _json_text(payload if payload is not None else frame.to_dict(orient="list"))
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
        logger.info("wrote %s", cfg.output_path)
    else:
        sys.stdout.write(text)


# =========================================================
# COMMANDS
# =========================================================
def _grid(cfg):
    return make_grid(DEFAULT_RULE, cfg.grid_points)


def cmd_density(cfg):
    """(y, density) rows; an f_label column is added when several --f are given."""
    grid = _grid(cfg)
    y_max = 10.0 if cfg.y_max is None else cfg.y_max
    y_min = -y_max if cfg.y_min is None else cfg.y_min
    steps = 201 if cfg.steps is None else cfg.steps
    if steps < 2 or not y_min < y_max:
        raise InvalidArgumentError("density needs --steps >= 2 and y-min < y-max")
    y = np.linspace(y_min, y_max, steps)
    curves = []
    for spec in cfg.f_specs:
        f = spec.build(grid)
        curves.append((f.label, density_frame(f, y)))
    if len(curves) == 1:
        label, frame = curves[0]
        emit(cfg, frame, {"f_label": label, "y": frame["y"].tolist(), "density": frame["density"].tolist()})
        return 0
    frame = pd.concat([part.assign(f_label=label) for label, part in curves], ignore_index=True)
    frame = frame[["f_label", "y", "density"]]
    emit(cfg, frame, {"curves": [
        {"f_label": label, "y": part["y"].tolist(), "density": part["density"].tolist()}
        for label, part in curves
    ]})
    return 0


def cmd_wavefn(cfg):
    """Wave-function samples (f_label, x, re, im): grid nodes, or --steps points on [-1, 1]."""
    grid = _grid(cfg)
    if cfg.steps is not None and cfg.steps < 2:
        raise InvalidArgumentError("wavefn needs --steps >= 2")
    functions = [spec.build(grid) for spec in cfg.f_specs]
    frames = []
    for f in functions:
        if cfg.steps is None:
            x, values = f.grid.nodes, f.values
        else:
            x = np.linspace(-1.0, 1.0, cfg.steps)
            values = f.evaluate(x)
        frames.append(pd.DataFrame({"f_label": f.label, "x": x, "re": values.real, "im": values.imag}))
    frame = pd.concat(frames, ignore_index=True)
    payloads = [f.to_json() for f in functions]
    emit(cfg, frame, payloads[0] if len(payloads) == 1 else {"functions": payloads})
    return 0


def _tail_ladder(cfg):
    if cfg.y_values:
        return np.asarray(cfg.y_values, dtype=float)
    y_max = 12.0 if cfg.y_max is None else cfg.y_max
    steps = 24 if cfg.steps is None else cfg.steps
    y_min = y_max / steps if cfg.y_min is None else cfg.y_min
    if steps < 1 or not 0 < y_min <= y_max:
        raise InvalidArgumentError("tails needs 0 < y-min <= y-max and --steps >= 1")
    return np.linspace(y_min, y_max, steps)


def cmd_tails(cfg):
    grid = _grid(cfg)
    ladder = _tail_ladder(cfg)
    frames = []
    for spec in cfg.f_specs:
        f = spec.build(grid)
        frames.append(tail_curve(f, ladder).to_frame())
    frames.append(min_tail_curve(ladder).to_frame())
    frame = pd.concat(frames, ignore_index=True)
    emit(cfg, frame, {"rows": frame.to_dict(orient="records")})
    return 0


def cmd_prolate(cfg):
    solution = solve_prolate(cfg.f_specs[0].R, _grid(cfg))
    frame = pd.DataFrame({"x": solution.psi.grid.nodes, "psi": solution.psi.values.real})
    emit(cfg, frame, solution.to_json())
    return 0


def cmd_design_interval(cfg):
    if cfg.beta is None or cfg.n is None:
        raise InvalidArgumentError("design-interval needs --beta and --n")
    d = design(cfg.beta, cfg.n, _grid(cfg))
    report = coverage_report(d, 0.0, cfg.trials, cfg.seed)
    payload = d.to_json()
    payload["coverage"] = {"trials": report.trials, "coverage": report.coverage, "stderr": report.stderr}
    emit(cfg, report.to_frame(), payload)
    return 0


def cmd_verify(cfg):
    reports = run_suites(cfg.suite, cfg.grid_points, cfg.seed, cfg.tolerances)
    passed = all(r.passed for r in reports)
    rows = [
        {"suite": r.suite, "check": c.name, "measured": c.measured, "expected": c.expected, "passed": c.passed}
        for r in reports for c in r.checks
    ]
    emit(cfg, pd.DataFrame(rows), {"passed": passed, "suites": [r.to_json() for r in reports]})
    for r in reports:
        for c in r.checks:
            if not c.passed:
                logger.error("check failed: [%s] %s measured=%s expected=%s", r.suite, c.name, c.measured, c.expected)
    return 0 if passed else 1


HANDLERS = {
    "density": cmd_density,
    "wavefn": cmd_wavefn,
    "tails": cmd_tails,
    "prolate": cmd_prolate,
    "design-interval": cmd_design_interval,
    "verify": cmd_verify,
}


# =========================================================
# PARSER
# =========================================================
def create_cli_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS,
                        help="Gauss-Legendre nodes on [-1, 1].")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed for Monte Carlo steps.")
    common.add_argument("--format", choices=FORMATS, default=None, help="Output format.")
    common.add_argument("--out", default=None, help="Output path; stdout when omitted.")
    common.add_argument("--verbosity", choices=["debug", "info", "warning", "error"], default="warning",
                        help="Logging level (logs go to stderr).")

    wave = argparse.ArgumentParser(add_help=False)
    wave.add_argument("--m", type=int, default=None, help="Dirichlet mode number.")
    wave.add_argument("--R", type=float, default=None, help="Prolate band half-width.")
    wave.add_argument("--c", type=float, default=None, help="Modulation frequency.")
    wave.add_argument("--base", default=None, help="Base function of a modulated wave function.")

    ladder = argparse.ArgumentParser(add_help=False)
    ladder.add_argument("--y-min", type=float, default=None)
    ladder.add_argument("--y-max", type=float, default=None)
    ladder.add_argument("--steps", type=int, default=None)

    parser = argparse.ArgumentParser(
        description="Fourier-analytic phase estimation toolkit.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", parents=[common, wave, ladder], help="Limiting density rows (y, density).")
    p.add_argument("--f", action="append", default=None, help="Repeatable wave function: name or name:param.")

    p = sub.add_parser("wavefn", parents=[common, wave], help="Wave-function samples (f_label, x, re, im).")
    p.add_argument("--f", action="append", default=None, help="Repeatable; defaults to the four design curves.")
    p.add_argument("--steps", type=int, default=None, help="Uniform points on [-1, 1]; grid nodes when omitted.")

    p = sub.add_parser("tails", parents=[common, wave, ladder], help="Tail curves plus the minimum-tail curve.")
    p.add_argument("--f", action="append", default=None, help="Repeatable; defaults to the four design curves.")
    p.add_argument("--y-values", default=None, help="Comma-separated ladder overriding --y-min/--y-max/--steps.")

    p = sub.add_parser("prolate", parents=[common, wave], help="Prolate solution at band half-width --R.")

    p = sub.add_parser("design-interval", parents=[common], help="Interval design and its coverage.")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=CLI_COVERAGE_TRIALS)

    p = sub.add_parser("verify", parents=[common], help="Run acceptance suites.")
    p.add_argument("suite", nargs="?", default="all", choices=SUITES + ("all",))
    p.add_argument("--tol", action="append", default=None, help="Override a check tolerance, NAME=VALUE.")
    return parser


def main(argv=None):
    parser = create_cli_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbosity)

    for name in ("f", "m", "R", "c", "base"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        cfg = build_run_config(args)
        logger.info("running %s with grid %d", cfg.command, cfg.grid_points)
        return HANDLERS[cfg.command](cfg)
    except PhaseEstimationError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("cannot write output: %s", exc)
        return 1
    except Exception as exc:
        logger.critical("unexpected error: %s", exc, exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
