"""
Oracle comparisons run by ``needles verify``.

Each check returns a report with one row per compared case:
scope, case, residual, tolerance, passed.
"""

import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from needles.breadth import breadth, breadth_oracle_table, width
from needles.common_properties import Tolerances
from needles.errors import VerificationError
from needles.exact import joint_matrix, joint_matrix_oracle, pm_n3_candidates
from needles.geometry import StarSpec, ThrowConfig, max_intersections

logger = logging.getLogger(__name__)

SCOPES = ("all", "breadth", "joint", "pM-n3")
REPORT_COLUMNS = ["scope", "case", "residual", "tolerance", "passed"]

BREADTH_NS = (3, 9, 15)
BREADTH_POINTS = 50
JOINT_NS = (3, 5, 7, 9)
RATIO_PAIRS = ((0.1, 0.1), (1 / 3, 1 / 4), (0.45, 0.05))
N3_ALPHAS = tuple(math.pi / 6 * f for f in (0.0, 0.25, 0.5, 0.75, 1.0))
ENDORSEMENT_RATIO = 1e3
DEFAULT_N3_VARIANT = "theorem"


def joint_alphas(n: int) -> Tuple[float, float, float]:
    return (math.pi / (8 * n), math.pi / (4 * n), math.pi / (2 * n))


def _row(scope, case, residual, tolerance):
    return dict(
        scope=scope, case=case, residual=float(residual), tolerance=float(tolerance), passed=residual <= tolerance
    )


def verify_breadth(
    tolerances: Tolerances = Tolerances(),
    ns: Iterable[int] = BREADTH_NS,
    points: int = BREADTH_POINTS,
) -> pd.DataFrame:
    """Closed-form breadths against the offset sweep, plus the partition identity."""

    rows = []
    resolution = tolerances.breadth_resolution
    for n in ns:
        star = StarSpec(n)
        spacing = 2.0 * star.ell
        sweep_tol = 2.0 * spacing / resolution
        for phi in np.linspace(0.0, 2.0 * math.pi, points, endpoint=False):
            measured = breadth_oracle_table(star, phi, resolution, spacing)
            closed = [breadth(star, k, phi) for k in range(1, max_intersections(star) + 1)]
            worst = max(abs(c - measured[k]) for k, c in enumerate(closed, start=1))
            rows.append(_row("breadth", f"n={n} phi={phi:.6f} oracle", worst, sweep_tol))
            partition = abs(sum(closed) - width(star, phi))
            rows.append(_row("breadth", f"n={n} phi={phi:.6f} partition", partition, tolerances.identity))
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def verify_joint(
    tolerances: Tolerances = Tolerances(),
    ns: Iterable[int] = JOINT_NS,
    pairs: Sequence[Tuple[float, float]] = RATIO_PAIRS,
) -> pd.DataFrame:
    """Closed-form joint matrices against adaptive quadrature, entry by entry."""

    rows = []
    for n in ns:
        for lam, mu in pairs:
            for alpha in joint_alphas(n):
                config = ThrowConfig.from_ratios(n, lam, mu, alpha)
                closed = joint_matrix(config, alpha).entries
                oracle = joint_matrix_oracle(config, alpha, tolerances.quadrature).entries
                case = f"n={n} lambda={lam:.6g} mu={mu:.6g} alpha={alpha:.6f}"
                rows.append(_row("joint", case, np.max(np.abs(closed - oracle)), tolerances.oracle))
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def resolve_pm_n3(
    tolerances: Tolerances = Tolerances(),
    pairs: Sequence[Tuple[float, float]] = RATIO_PAIRS,
    alphas: Iterable[float] = N3_ALPHAS,
) -> pd.DataFrame:
    """Residuals of both candidate p(M) formulas for n = 3 against the quadrature oracle."""

    rows = []
    for lam, mu in pairs:
        for alpha in alphas:
            config = ThrowConfig.from_ratios(3, lam, mu, math.pi / 2)
            truth = joint_matrix_oracle(config, alpha, tolerances.quadrature).diagonal_sums()[2]
            candidates = pm_n3_candidates(config, alpha)
            residuals = {variant: abs(value - truth) for variant, value in candidates.items()}
            endorsed = min(residuals, key=residuals.get)
            other = max(residuals, key=residuals.get)
            ratio = residuals[other] / max(residuals[endorsed], np.finfo(float).tiny)
            rows.append(
                dict(
                    lam=lam,
                    mu=mu,
                    alpha=alpha,
                    oracle=truth,
                    theorem=candidates["theorem"],
                    proof=candidates["proof"],
                    residual_theorem=residuals["theorem"],
                    residual_proof=residuals["proof"],
                    ratio=ratio,
                    endorsed=endorsed,
                )
            )
    return pd.DataFrame(rows)


def verify_pm_n3(tolerances: Tolerances = Tolerances(), resolution: Optional[pd.DataFrame] = None) -> pd.DataFrame:
    if resolution is None:
        resolution = resolve_pm_n3(tolerances)
    rows = []
    for record in resolution.itertuples():
        case = f"lambda={record.lam:.6g} mu={record.mu:.6g} alpha={record.alpha:.6f} endorses {record.endorsed}"
        residual = getattr(record, f"residual_{DEFAULT_N3_VARIANT}")
        row = _row("pM-n3", case, residual, tolerances.oracle)
        row["passed"] = row["passed"] and record.endorsed == DEFAULT_N3_VARIANT and record.ratio > ENDORSEMENT_RATIO
        rows.append(row)

    endorsed = set(resolution.endorsed)
    logger.info(
        "p(M) for n=3: oracle endorses %s, smallest residual ratio %.3g",
        ", ".join(sorted(endorsed)),
        resolution.ratio.min(),
    )
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def run_verification(scope: str = "all", tolerances: Tolerances = Tolerances()) -> pd.DataFrame:
    if scope not in SCOPES:
        raise ValueError(f"Unsupported verification scope: {scope}")

    checks = {"breadth": verify_breadth, "joint": verify_joint, "pM-n3": verify_pm_n3}
    selected = list(checks) if scope == "all" else [scope]

    reports = []
    for name in selected:
        report = checks[name](tolerances)
        logger.info("%s: %d of %d cases passed", name, int(report.passed.sum()), len(report))
        reports.append(report)
    return pd.concat(reports, ignore_index=True)


def require_passed(report: pd.DataFrame) -> None:
    failures = report[~report.passed]
    if len(failures):
        raise VerificationError(f"{len(failures)} of {len(report)} verification cases failed", failures)
