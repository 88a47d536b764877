from dataclasses import dataclass, fields, replace
from typing import Iterable

# two-sided 99% normal quantile used for simulation confidence intervals
Z_99 = 2.576

# simulated mean count may sit this many standard errors from the exact expectation
EXPECTATION_SIGMAS = 4.0

IDENTITY_TOL = 1e-12  # normalisation, periodicity, symmetry, diagonal sums
ORACLE_TOL = 1e-8  # closed forms against the quadrature oracle
EXPECTATION_TOL = 1e-10
CONVOLUTION_TOL = 1e-6  # limit law against the Stieltjes convolution
QUADRATURE_TOL = 1e-12
NEGATIVE_SLACK = 1e-12  # probabilities may dip this far below zero

# offset sweep resolution of the breadth oracle
BREADTH_RESOLUTION = 10**6
QUICK_BREADTH_RESOLUTION = 10**4
MIN_BREADTH_RESOLUTION = 10**4

# trials per independently seeded random block
BLOCK_SIZE = 2**16

# sup-distance grid
DISTANCE_GRID = 10**4
MIN_DISTANCE_GRID = 10**3
DISTANCE_GRID_RANGE = (-0.1, 1.1)

# midpoint grid of the cell-area check of the limit law
GEOMETRIC_RESOLUTION = 2000

# snapping distance for alpha reduction at multiples of pi/(2n)
ANGLE_SNAP = 1e-12


@dataclass(frozen=True)
class Tolerances:
    identity: float = IDENTITY_TOL
    oracle: float = ORACLE_TOL
    expectation: float = EXPECTATION_TOL
    convolution: float = CONVOLUTION_TOL
    quadrature: float = QUADRATURE_TOL
    breadth_resolution: int = BREADTH_RESOLUTION

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def with_overrides(self, overrides: Iterable[str]) -> "Tolerances":
        """Apply ``NAME=VALUE`` strings, e.g. ``["oracle=1e-9"]``."""

        changes = {}
        for item in overrides:
            name, sep, value = item.partition("=")
            name = name.strip().replace("-", "_")
            if not sep or name not in self.names():
                raise KeyError(f"Unknown tolerance override '{item}', expected one of {self.names()}")
            if name == "breadth_resolution":
                changes[name] = int(float(value))
            else:
                changes[name] = float(value)
        return replace(self, **changes)
