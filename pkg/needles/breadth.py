"""
Width and breadth functions of an odd star relative to one line family.

For a rotation phi (measured from the family normal) the width w(phi) is the
extent of the star along the normal, and the breadth s(k, phi) is the measure of
centre offsets, taken modulo the spacing, for which the star crosses exactly k
lines. Both are pi/n-periodic; the closed forms are written on
I1 = [0, pi/2n), I2 = [pi/2n, pi/n) and, for shifted arguments, I3 = [pi/n, 3pi/2n).
"""

import logging
import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from needles.common_properties import ANGLE_SNAP, MIN_BREADTH_RESOLUTION, QUICK_BREADTH_RESOLUTION
from needles.errors import OutOfRangeError, UnsupportedNeedleCountError
from needles.geometry import StarSpec, max_intersections

logger = logging.getLogger(__name__)


class Interval(Enum):
    I1 = 1
    I2 = 2
    I3 = 3


def _require_odd(star: StarSpec) -> None:
    if star.n % 2 == 0 or star.n < 3:
        raise UnsupportedNeedleCountError(star.n)


def reduce_phi(star: StarSpec, phi: float) -> float:
    """phi modulo pi/n, in [0, pi/n)."""

    period = math.pi / star.n
    reduced = phi - math.floor(phi / period) * period
    if reduced >= period or reduced < 0.0:
        reduced = 0.0
    return reduced


def resolve_interval(star: StarSpec, phi: float) -> Tuple[Interval, float]:
    reduced = reduce_phi(star, phi)
    interval = Interval.I1 if reduced < math.pi / (2 * star.n) else Interval.I2
    return interval, reduced


def _branch_argument(star: StarSpec, phi: float, interval: Optional[Interval]) -> Tuple[Interval, float]:
    """Resolve or check the interval tag and return the argument the branch formula is evaluated at."""

    beta = math.pi / (2 * star.n)
    if interval is None:
        return resolve_interval(star, phi)

    if interval is Interval.I3:
        if not 2 * beta - ANGLE_SNAP <= phi < 3 * beta + ANGLE_SNAP:
            raise OutOfRangeError(f"phi={phi} does not lie in I3 = [pi/n, 3pi/2n) for n={star.n}")
        return interval, phi

    resolved, reduced = resolve_interval(star, phi)
    if resolved is not interval:
        raise OutOfRangeError(f"phi={phi} reduces to {reduced}, which lies in {resolved.name}, not {interval.name}")
    return interval, reduced


def width(star: StarSpec, phi: float, interval: Optional[Interval] = None) -> float:
    """Extent of the star perpendicular to the family at rotation phi."""

    _require_odd(star)
    beta = math.pi / (2 * star.n)
    interval, arg = _branch_argument(star, phi, interval)

    if interval is Interval.I3:
        return 2.0 * star.ell * math.cos(beta) * math.cos(arg - 3 * beta)
    return 2.0 * star.ell * math.cos(beta) * math.cos(arg - beta)


def breadth(star: StarSpec, k: int, phi: float, interval: Optional[Interval] = None) -> float:
    """Measure of centre offsets giving exactly k crossings, 1 <= k <= M."""

    _require_odd(star)
    M = max_intersections(star)
    if not 1 <= k <= M:
        raise OutOfRangeError(f"k must lie in 1..{M} for n={star.n}, got {k}")

    n, ell = star.n, star.ell
    beta = math.pi / (2 * n)
    interval, arg = _branch_argument(star, phi, interval)

    if k <= M - 2:
        centre = 3 * beta if interval is Interval.I3 else beta
        return 4.0 * ell * math.sin(k * math.pi / n) * math.sin(beta) * math.cos(arg - centre)

    if k == M - 1:
        if interval is Interval.I1:
            return ell * (2.0 * math.cos(beta) * math.sin(arg) - math.sin(arg - 3 * beta))
        if interval is Interval.I2:
            return ell * (-2.0 * math.cos(beta) * math.sin(arg - 2 * beta) + math.sin(arg + beta))
        return ell * (2.0 * math.cos(beta) * math.sin(arg - 2 * beta) - math.sin(arg - 5 * beta))

    if interval is Interval.I1:
        return -ell * math.sin(arg - beta)
    if interval is Interval.I2:
        return ell * math.sin(arg - beta)
    return -ell * math.sin(arg - 3 * beta)


def stripe_probability(star: StarSpec, k: int, phi: float, ratio: float, interval: Optional[Interval] = None) -> float:
    """Probability of exactly k crossings with a family of ratio ell/spacing, given phi."""

    if k == 0:
        return 1.0 - ratio * width(star, phi, interval) / star.ell
    return ratio * breadth(star, k, phi, interval) / star.ell


def breadth_oracle_table(
    star: StarSpec,
    phi: float,
    resolution: int = QUICK_BREADTH_RESOLUTION,
    spacing: Optional[float] = None,
) -> NDArray:
    """Measure of offsets in [0, spacing) giving 0, 1, ..., n crossings.

    The centre sits at the offsets (i + 1/2) * spacing / resolution above a line.
    Needle tips are projected onto the family normal and the crossings are read
    off from the sorted projections, one line below and one above the centre.
    """

    if resolution < MIN_BREADTH_RESOLUTION:
        raise OutOfRangeError(f"resolution must be at least {MIN_BREADTH_RESOLUTION}, got {resolution}")
    if spacing is None:
        spacing = 2.0 * star.ell
    if spacing <= 0:
        raise OutOfRangeError(f"spacing must be positive, got {spacing}")

    projections = np.sort(star.ell * np.cos(phi + 2.0 * np.pi * np.arange(star.n) / star.n))
    step = spacing / resolution
    offsets = (np.arange(resolution) + 0.5) * step

    above = star.n - np.searchsorted(projections, spacing - offsets, side="left")
    below = np.searchsorted(projections, -offsets, side="left")
    hits = np.bincount(above + below, minlength=star.n + 1)

    logger.debug("breadth oracle n=%d phi=%.6g: hit histogram %s", star.n, phi, hits)
    return hits[: star.n + 1] * step


def breadth_oracle(
    star: StarSpec,
    k: int,
    phi: float,
    resolution: int = QUICK_BREADTH_RESOLUTION,
    spacing: Optional[float] = None,
) -> float:
    if k < 0:
        raise OutOfRangeError(f"k must be non-negative, got {k}")
    if k > max_intersections(star):
        return 0.0
    return float(breadth_oracle_table(star, phi, resolution, spacing)[k])
