"""
Command line front end.

    needles exact    --n 5 --lambda 1/3 --mu 1/4 --alpha pi/10
    needles sweep    --n 5 --lambda 1/3 --mu 1/4 --alpha-grid 0:pi/5:21
    needles simulate --n 5 --lambda 1/3 --mu 1/4 --alpha pi/10 --trials 1e7 --seed 1 --workers 4
    needles limit    --lambda 1/3 --mu 1/4 --n-list 5,9,15,25 --alpha-list pi/10
    needles verify   --scope pM-n3

Exit codes: 0 ok, 1 usage, 2 invalid input, 3 verification failure, 4 quadrature failure.
"""

import argparse
import json
import logging
import math
import os
import re
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from needles import __version__
from needles.common_properties import DISTANCE_GRID, DISTANCE_GRID_RANGE, Tolerances
from needles.distributions import (
    LimitParams,
    StepDistribution,
    cdf_finite,
    cdf_limit,
    convolution_vector,
    limit_config,
    sup_distance,
)
from needles.errors import ConfigurationError, OracleConvergenceError, OutOfRangeError, VerificationError
from needles.exact import expectation, p_exact, perturbed_coefficient, probe_monotonicity
from needles.geometry import ThrowConfig
from needles.montecarlo import CI_METHODS, SimConfig, SimulatorType, expectation_check, simulate, z_scores
from needles.verification import SCOPES, require_passed, resolve_pm_n3, run_verification, verify_pm_n3

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_VERIFICATION = 3
EXIT_ORACLE = 4

FLOAT_FORMAT = "%.17g"

BACKENDS = {
    "python": SimulatorType.PYTHON,
    "numba": SimulatorType.NUMBA,
    "numba-parallel": SimulatorType.NUMBA_PARALLEL,
}

ANGLE_PATTERN = re.compile(r"^(?P<sign>[-+]?)(?P<num>\d+)?\*?pi(?:/(?P<den>\d+))?$")


class UsageError(Exception):
    pass


class NeedlesArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_angle(text: str) -> float:
    """Radians from ``pi``, ``pi/10``, ``3pi/20``, ``3*pi/20``, ``-pi/4`` or a plain float."""

    cleaned = text.replace(" ", "").lower()
    match = ANGLE_PATTERN.match(cleaned)
    if match:
        numerator = int(match.group("num") or 1)
        denominator = int(match.group("den") or 1)
        value = math.pi * numerator / denominator
        return -value if match.group("sign") == "-" else value
    try:
        return float(cleaned)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse angle '{text}'")


def parse_ratio(text: str) -> float:
    """A float or a fraction such as ``1/3``."""

    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"cannot parse number '{text}'")


def parse_count(text: str) -> int:
    """An exact integer; scientific notation such as ``1e7`` is accepted when it names one."""

    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"cannot parse count '{text}'")
    if value.denominator != 1:
        raise argparse.ArgumentTypeError(f"count must be an integer, got '{text}'")
    return int(value)


def parse_angle_grid(text: str) -> List[float]:
    """``start:stop:count`` (inclusive) or a comma separated list of angles."""

    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"angle grid must read start:stop:count, got '{text}'")
        start, stop = parse_angle(parts[0]), parse_angle(parts[1])
        count = parse_count(parts[2])
        if count < 1:
            raise argparse.ArgumentTypeError("angle grid needs at least one point")
        if count == 1:
            return [start]
        return [start + (stop - start) * j / (count - 1) for j in range(count)]
    return [parse_angle(item) for item in text.split(",") if item.strip()]


def parse_int_list(text: str) -> List[int]:
    return [parse_count(item) for item in text.split(",") if item.strip()]


def add_geometry_arguments(parser: argparse.ArgumentParser, alpha: bool = True) -> None:
    parser.add_argument("--n", type=parse_count, required=True, help="number of needles")
    parser.add_argument("--ell", type=parse_ratio, default=1.0, help="needle length")
    parser.add_argument("--a", type=parse_ratio, help="spacing of family R_a")
    parser.add_argument("--b", type=parse_ratio, help="spacing of family R_b")
    parser.add_argument("--lambda", dest="lam", type=parse_ratio, help="ell/a, alternative to --a")
    parser.add_argument("--mu", type=parse_ratio, help="ell/b, alternative to --b")
    if alpha:
        parser.add_argument("--alpha", type=parse_angle, default=math.pi / 2, help="lattice angle, e.g. pi/10")


def add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", type=Path, help="output file, stdout when omitted")


def build_parser() -> NeedlesArgumentParser:
    parser = NeedlesArgumentParser(prog="needles", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="-v for info, -vv for debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    exact = commands.add_parser("exact", help="exact probabilities p(i) and F(i/n)")
    add_geometry_arguments(exact)
    add_output_arguments(exact)
    exact.set_defaults(handler=cmd_exact)

    sweep = commands.add_parser("sweep", help="p(i, alpha) over an angle grid next to p*(i)")
    add_geometry_arguments(sweep, alpha=False)
    sweep.add_argument("--alpha-grid", type=parse_angle_grid, help="start:stop:count or a list, default 0:pi/n:21")
    sweep.add_argument("--i-select", type=parse_int_list, help="comma separated intersection numbers")
    sweep.add_argument("--probe", action="store_true", help="add the monotonicity probe table")
    add_output_arguments(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    sim = commands.add_parser("simulate", help="Monte Carlo estimate of p(i) and the joint histogram")
    add_geometry_arguments(sim)
    sim.add_argument("--trials", type=parse_count, default=10**6)
    sim.add_argument("--seed", type=parse_count, default=0)
    sim.add_argument("--workers", type=parse_count, default=1)
    sim.add_argument("--backend", choices=sorted(BACKENDS), default="numba")
    sim.add_argument("--ci", choices=CI_METHODS, default="normal")
    add_output_arguments(sim)
    sim.set_defaults(handler=cmd_simulate)

    limit = commands.add_parser("limit", help="finite-n distribution functions against the limit law")
    limit.add_argument("--lambda", dest="lam", type=parse_ratio, required=True)
    limit.add_argument("--mu", type=parse_ratio, default=0.0)
    limit.add_argument("--n-list", type=parse_int_list, default=[5, 9, 15, 25])
    limit.add_argument("--alpha-list", type=parse_angle_grid, default=[math.pi / 10])
    limit.add_argument("--grid", type=parse_count, default=DISTANCE_GRID)
    add_output_arguments(limit)
    limit.set_defaults(handler=cmd_limit)

    verify = commands.add_parser("verify", help="compare closed forms with their oracles")
    verify.add_argument("--scope", choices=SCOPES, default="all")
    verify.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
    verify.add_argument("--perturb", action="append", default=[], help=argparse.SUPPRESS)
    add_output_arguments(verify)
    verify.set_defaults(handler=cmd_verify)

    return parser


def throw_config(args, alpha: Optional[float] = None) -> ThrowConfig:
    if (args.a is None) == (args.lam is None) or (args.b is None) == (args.mu is None):
        raise UsageError("give exactly one of --a/--lambda and one of --b/--mu")
    ell = args.ell
    a = args.a if args.a is not None else (ell / args.lam if args.lam else math.inf)
    b = args.b if args.b is not None else (ell / args.mu if args.mu else math.inf)
    alpha = getattr(args, "alpha", math.pi / 2) if alpha is None else alpha
    return ThrowConfig.from_ratios(args.n, ell / a, ell / b, alpha, ell)


def _report_check(text: str, passed: bool) -> None:
    print(f"{text}: {'ok' if passed else 'FAILED'}", file=sys.stderr)


def cmd_exact(args) -> Tuple[pd.DataFrame, Dict, Dict]:
    config = throw_config(args)
    p = p_exact(config, args.alpha)
    step = cdf_finite(config, args.alpha, p)
    table = pd.DataFrame({"i": np.arange(len(p)), "p": p.p, "F": step.cumulative})

    tolerances = Tolerances()
    checks = dict(total=p.total(), mean=p.mean(), expectation=expectation(config))
    checks["passed"] = bool(
        abs(checks["total"] - 1.0) <= tolerances.identity
        and abs(checks["mean"] - checks["expectation"]) <= tolerances.expectation
    )
    _report_check(
        f"sum p = {checks['total']:.17g}, sum i p = {checks['mean']:.17g} (expected {checks['expectation']:.17g})",
        checks["passed"],
    )
    return table, {}, checks


def cmd_sweep(args) -> Tuple[pd.DataFrame, Dict, Dict]:
    config = throw_config(args, math.pi / 2)
    n = config.star.n
    alphas = args.alpha_grid or parse_angle_grid(f"0:pi/{n}:21")
    reference = convolution_vector(config).p
    selected = args.i_select if args.i_select is not None else range(len(reference))

    rows = []
    for alpha in alphas:
        p = p_exact(config, alpha).p
        for i in selected:
            if not 0 <= i < len(p):
                raise OutOfRangeError(f"i must lie in 0..{len(p) - 1}, got {i}")
            rows.append(dict(alpha=alpha, i=i, p=p[i], p_star=reference[i]))
    table = pd.DataFrame(rows, columns=["alpha", "i", "p", "p_star"])

    extras = {}
    if args.probe:
        extras["probe"] = probe_monotonicity(config)
        logger.info("monotonicity probe\n%s", extras["probe"].to_string(index=False))
    return table, extras, {}


def cmd_simulate(args) -> Tuple[pd.DataFrame, Dict, Dict]:
    config = throw_config(args)
    sim = SimConfig(config, trials=args.trials, seed=args.seed, workers=args.workers, ci_method=args.ci)
    result = simulate(sim, BACKENDS[args.backend], verbose=args.verbose > 0)

    table = pd.DataFrame(
        {
            "i": np.arange(len(result.p_hat)),
            "p_hat": result.p_hat.p,
            "ci_half_width": result.ci_half_width,
            "p_exact": np.nan,
            "z": np.nan,
        }
    )
    if config.star.is_odd and config.star.n >= 3:
        exact = p_exact(config)
        table["p_exact"] = exact.p
        table["z"] = z_scores(result, exact)

    k, m = np.indices(result.counts.shape)
    joint = pd.DataFrame({"k": k.ravel(), "m": m.ravel(), "count": result.counts.ravel()})

    checks = expectation_check(result, config)
    _report_check(
        f"mean count {checks['mean']:.6g}, expected {checks['expected']:.6g}, z = {checks['z']:.3g}", checks["passed"]
    )
    return table, {"joint": joint}, checks


def cmd_limit(args) -> Tuple[pd.DataFrame, Dict, Dict]:
    params = LimitParams(args.lam, args.mu)
    xs = np.unique(np.concatenate([np.linspace(*DISTANCE_GRID_RANGE, args.grid), [0.0, 0.5, 1.0]]))
    limit_values = cdf_limit(params, xs)

    frames = []
    distances = []
    for n in args.n_list:
        for alpha in args.alpha_list:
            step: StepDistribution = cdf_finite(limit_config(params, n, alpha), alpha)
            distance = sup_distance(step, params, args.grid)
            distances.append(dict(n=n, alpha=alpha, sup_distance=distance))
            frames.append(
                pd.DataFrame(
                    {
                        "n": n,
                        "alpha": alpha,
                        "xi": xs,
                        "F_n_alpha": step(xs),
                        "F": limit_values,
                        "sup_distance": distance,
                    }
                )
            )
    table = pd.concat(frames, ignore_index=True)
    return table, {"distances": pd.DataFrame(distances, columns=["n", "alpha", "sup_distance"])}, {}


def cmd_verify(args) -> Tuple[pd.DataFrame, Dict, Dict]:
    try:
        tolerances = Tolerances().with_overrides(args.tol)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc))

    shifts = []
    for item in args.perturb:
        name, _, value = item.partition("=")
        try:
            shifts.append((int(name.strip().lstrip("f")), float(value)))
        except ValueError:
            raise UsageError(f"--perturb expects fJ=DELTA, got '{item}'")

    report, resolution = _run_perturbed(args.scope, tolerances, shifts)
    extras = {}
    if resolution is not None:
        extras["pm_n3"] = resolution
        endorsed = ", ".join(sorted(set(resolution.endorsed)))
        print(
            f"p(M) for n=3: the quadrature oracle endorses the '{endorsed}' formula "
            f"(residual ratio >= {resolution.ratio.min():.3g})",
            file=sys.stderr,
        )
    checks = dict(cases=len(report), failed=int((~report.passed).sum()))
    return report, extras, checks


def _run_perturbed(scope, tolerances, shifts):
    if not shifts:
        if scope != "pM-n3":
            return run_verification(scope, tolerances), None
        resolution = resolve_pm_n3(tolerances)
        return verify_pm_n3(tolerances, resolution), resolution
    j, delta = shifts[0]
    with perturbed_coefficient(j, delta):
        return _run_perturbed(scope, tolerances, shifts[1:])


def source_timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch else datetime.now(timezone.utc)
    return moment.isoformat()


def run_manifest(args, checks: Dict) -> Dict:
    parameters = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in sorted(vars(args).items())
        if key not in ("handler", "verbose")
    }
    return dict(
        command=args.command,
        parameters=parameters,
        seed=parameters.get("seed"),
        tool_version=__version__,
        timestamp=source_timestamp(),
        checks=checks,
    )


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _table_payload(table: pd.DataFrame) -> Dict:
    return dict(columns=list(table.columns), rows=table.to_numpy(dtype=object).tolist())


def write_output(table: pd.DataFrame, extras: Dict, manifest: Dict, fmt: str, out: Optional[Path]) -> None:
    if fmt == "json":
        payload = dict(manifest=manifest, **_table_payload(table))
        if extras:
            payload["tables"] = {name: _table_payload(extra) for name, extra in extras.items()}
        text = json.dumps(payload, default=_json_default, indent=1) + "\n"
        if out is None:
            sys.stdout.write(text)
        else:
            out.write_text(text, encoding="utf-8")
        return

    if out is None:
        table.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return
    table.to_csv(out, index=False, float_format=FLOAT_FORMAT, encoding="utf-8", lineterminator="\n")
    for name, extra in extras.items():
        extra.to_csv(
            out.with_name(f"{out.name}.{name}.csv"),
            index=False,
            float_format=FLOAT_FORMAT,
            encoding="utf-8",
            lineterminator="\n",
        )
    Path(f"{out}.manifest.json").write_text(
        json.dumps(manifest, default=_json_default, indent=1) + "\n", encoding="utf-8"
    )


def report_error(exc: Exception, exit_code: int) -> int:
    print(json.dumps(dict(error=type(exc).__name__, message=str(exc), exit_code=exit_code)), file=sys.stderr)
    return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s", stream=sys.stderr)

    try:
        table, extras, checks = args.handler(args)
        write_output(table, extras, run_manifest(args, checks), args.format, args.out)
        if args.command == "verify":
            require_passed(table)
    except UsageError as exc:
        return report_error(exc, EXIT_USAGE)
    except (ConfigurationError, OutOfRangeError) as exc:
        return report_error(exc, EXIT_VALIDATION)
    except VerificationError as exc:
        return report_error(exc, EXIT_VERIFICATION)
    except OracleConvergenceError as exc:
        return report_error(exc, EXIT_ORACLE)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
