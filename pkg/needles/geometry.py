"""
Star, lattice and throw definitions and exact intersection counting.

Frame convention: the lattice family R_a consists of the lines
``x*sin(alpha) - y*cos(alpha) = j*a`` and R_b of the lines ``y = j*b``. The unit
normal of R_a points at the world angle ``alpha - pi/2``; the rotation ``phi`` of a
pose is measured from that normal, so needle j points at the world angle
``phi + 2*pi*j/n + alpha - pi/2``.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from needles.errors import (
    AdmissibilityError,
    AngleRangeError,
    NeedleCountError,
    NeedleLengthError,
    NonPositiveSpacingError,
)

logger = logging.getLogger(__name__)

ADMISSIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class StarSpec:
    n: int  # number of needles
    ell: float = 1.0  # needle length, same unit as the lattice spacings

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise NeedleCountError(f"The star needs an integer number of needles n >= 2, got {self.n}")
        if not self.ell > 0 or not math.isfinite(self.ell):
            raise NeedleLengthError(f"The needle length must be positive and finite, got {self.ell}")

    @property
    def max_intersections(self) -> int:
        return max_intersections(self)

    @property
    def is_odd(self) -> bool:
        return self.n % 2 == 1


@dataclass(frozen=True)
class LatticeSpec:
    a: float  # spacing of family R_a, may be math.inf when that family is absent
    b: float  # spacing of family R_b
    alpha: float = math.pi / 2  # angle between the two families

    def __post_init__(self):
        for name in ("a", "b"):
            value = getattr(self, name)
            if not value > 0:
                raise NonPositiveSpacingError(f"Lattice spacing {name} must be positive, got {value}")
        if not 0 < self.alpha <= math.pi / 2:
            raise AngleRangeError(f"The lattice angle must lie in (0, pi/2], got {self.alpha}")


@dataclass(frozen=True)
class ThrowConfig:
    star: StarSpec
    lattice: LatticeSpec

    def __post_init__(self):
        validate(self)

    @property
    def lam(self) -> float:
        """lambda = ell / a"""
        return self.star.ell / self.lattice.a

    @property
    def mu(self) -> float:
        """mu = ell / b"""
        return self.star.ell / self.lattice.b

    @property
    def n(self) -> int:
        return self.star.n

    @classmethod
    def from_ratios(cls, n: int, lam: float, mu: float, alpha: float = math.pi / 2, ell: float = 1.0):
        """Build a config from the dimensionless ratios; a zero ratio removes its family."""

        a = ell / lam if lam != 0 else math.inf
        b = ell / mu if mu != 0 else math.inf
        return cls(StarSpec(n, ell), LatticeSpec(a, b, alpha))

    def with_alpha(self, alpha: float) -> "ThrowConfig":
        return ThrowConfig(self.star, LatticeSpec(self.lattice.a, self.lattice.b, alpha))


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    phi: float


@dataclass(frozen=True)
class IntersectionCount:
    k: int  # crossings with R_a
    m: int  # crossings with R_b

    @property
    def total(self) -> int:
        return self.k + self.m


class FrameConstants(NamedTuple):
    sin_alpha: float
    cos_alpha: float
    cot_alpha: float
    csc_alpha: float
    normal_angle: float  # world angle of the R_a normal


def frame_constants(lattice: LatticeSpec) -> FrameConstants:
    sin_alpha = math.sin(lattice.alpha)
    cos_alpha = math.cos(lattice.alpha)
    return FrameConstants(
        sin_alpha=sin_alpha,
        cos_alpha=cos_alpha,
        cot_alpha=cos_alpha / sin_alpha,
        csc_alpha=1.0 / sin_alpha,
        normal_angle=lattice.alpha - math.pi / 2,
    )


def max_intersections(star: StarSpec) -> int:
    """Largest number of lines of one family the star can cross."""

    if star.n % 2 == 0:
        return star.n // 2
    return (star.n + 1) // 2


def admissibility_margin(config: ThrowConfig) -> float:
    n = config.star.n
    return 1.0 - 2.0 * max(config.lam, config.mu) * math.sin(math.pi / n * (n // 2))


def validate(config: ThrowConfig) -> None:
    """Raise the matching ConfigurationError unless the throw is admissible."""

    # StarSpec and LatticeSpec validate themselves, re-checked here for objects built around __init__
    StarSpec.__post_init__(config.star)
    LatticeSpec.__post_init__(config.lattice)

    margin = admissibility_margin(config)
    if margin < -ADMISSIBILITY_SLACK:
        raise AdmissibilityError(
            f"2*max(lambda, mu)*sin(pi/n*floor(n/2)) = {1.0 - margin:.6g} exceeds 1 "
            f"(n={config.star.n}, lambda={config.lam:.6g}, mu={config.mu:.6g})"
        )


def needle_directions(star: StarSpec, phi: float) -> NDArray:
    """Directions phi + 2*pi*j/n of the n needles, reduced to [0, 2*pi)."""

    angles = phi + 2.0 * np.pi * np.arange(star.n) / star.n
    return np.mod(angles, 2.0 * np.pi)


def cell_spacing(spacing: float) -> float:
    """Spacing used to place the centre; an absent family (infinite spacing) samples a unit cell."""

    return spacing if math.isfinite(spacing) else 1.0


def pose_from_uniforms(config: ThrowConfig, u) -> Pose:
    """Map three uniforms from [0, 1) onto a uniformly thrown pose.

    y is drawn first because the x range of the skewed cell depends on it. An
    absent family never crosses the star, so its coordinate only needs some range.
    """

    frame = frame_constants(config.lattice)
    a, b = cell_spacing(config.lattice.a), cell_spacing(config.lattice.b)
    y = b * u[0]
    x = y * frame.cot_alpha + a * frame.csc_alpha * u[1]
    phi = 2.0 * math.pi * u[2]
    return Pose(float(x), float(y), float(phi))


def sample_pose(config: ThrowConfig, rng_stream: np.random.Generator) -> Pose:
    return pose_from_uniforms(config, rng_stream.random(3))


def _crossings(d0: float, d1: float, spacing: float) -> int:
    # endpoint-on-line ties count whenever the floors differ
    return abs(math.floor(d1 / spacing) - math.floor(d0 / spacing))


def count_intersections(config: ThrowConfig, pose: Pose) -> IntersectionCount:
    """Count (needle, line) incidences of the posed star with both families."""

    frame = frame_constants(config.lattice)
    star, lattice = config.star, config.lattice

    d_a0 = pose.x * frame.sin_alpha - pose.y * frame.cos_alpha
    k = 0
    m = 0
    for j in range(star.n):
        theta = pose.phi + 2.0 * math.pi * j / star.n + frame.normal_angle
        x1 = pose.x + star.ell * math.cos(theta)
        y1 = pose.y + star.ell * math.sin(theta)
        if math.isfinite(lattice.a):
            k += _crossings(d_a0, x1 * frame.sin_alpha - y1 * frame.cos_alpha, lattice.a)
        if math.isfinite(lattice.b):
            m += _crossings(pose.y, y1, lattice.b)

    return IntersectionCount(k, m)
