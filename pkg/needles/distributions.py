"""
Distribution functions of the relative number of intersections X = (k + m)/n.

Finite-n laws are right-continuous step functions; the n -> infinity law is the
convolution of the two single-family limits and no longer depends on the angle.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import IntegrationWarning, quad

from needles.common_properties import (
    CONVOLUTION_TOL,
    DISTANCE_GRID,
    DISTANCE_GRID_RANGE,
    GEOMETRIC_RESOLUTION,
    MIN_DISTANCE_GRID,
)
from needles.errors import LimitParameterError, OracleConvergenceError, OutOfRangeError
from needles.exact import ProbabilityVector, p_exact
from needles.geometry import LatticeSpec, ThrowConfig

logger = logging.getLogger(__name__)


class Family(Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True, eq=False)
class StepDistribution:
    jump_points: NDArray  # i/n, i = 0 .. 2M
    cumulative: NDArray  # F at each jump point, last value 1
    heights: NDArray  # the probability vector the steps were built from

    @classmethod
    def from_probabilities(cls, p: Union[ProbabilityVector, ArrayLike], n: int) -> "StepDistribution":
        heights = np.asarray(p.p if isinstance(p, ProbabilityVector) else p, dtype=float)
        cumulative = np.minimum(np.cumsum(heights), 1.0)
        cumulative[-1] = 1.0
        return cls(jump_points=np.arange(len(heights)) / n, cumulative=cumulative, heights=heights)

    def __call__(self, xi):
        index = np.searchsorted(self.jump_points, xi, side="right") - 1
        values = np.where(index >= 0, self.cumulative[np.maximum(index, 0)], 0.0)
        return float(values) if np.ndim(values) == 0 else values

    def left_limit(self, xi):
        index = np.searchsorted(self.jump_points, xi, side="left") - 1
        values = np.where(index >= 0, self.cumulative[np.maximum(index, 0)], 0.0)
        return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class LimitParams:
    lam: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.lam > 0 or not self.mu >= 0:
            raise LimitParameterError(f"The limit law needs lambda > 0 and mu >= 0, got {self.lam}, {self.mu}")
        if 2 * max(self.lam, self.mu) > 1:
            raise LimitParameterError(f"2*max(lambda, mu) must not exceed 1, got {2 * max(self.lam, self.mu)}")

    def ratio(self, which: Family) -> float:
        return self.lam if which is Family.A else self.mu


def cdf_finite(config: ThrowConfig, alpha: Optional[float] = None, probabilities=None) -> StepDistribution:
    """F_{n,alpha}; pass ``probabilities`` (e.g. simulated p-hat) to skip the closed forms, even n included."""

    if probabilities is None:
        probabilities = p_exact(config, alpha)
    return StepDistribution.from_probabilities(probabilities, config.star.n)


def marginal_vector(config: ThrowConfig, alpha: Optional[float], family: Family) -> ProbabilityVector:
    """Single-family law on 0 .. 2M (entries above M vanish)."""

    lattice = config.lattice
    alpha = lattice.alpha if alpha is None else alpha
    if family is Family.A:
        single = LatticeSpec(lattice.a, math.inf, lattice.alpha)
    else:
        single = LatticeSpec(math.inf, lattice.b, lattice.alpha)
    return p_exact(ThrowConfig(config.star, single), alpha)


def convolution_vector(config: ThrowConfig, alpha: Optional[float] = None) -> ProbabilityVector:
    """Law of the total count if the two families were hit independently."""

    p_lam = marginal_vector(config, alpha, Family.A).p
    p_mu = marginal_vector(config, alpha, Family.B).p
    return ProbabilityVector(np.convolve(p_lam, p_mu)[: len(p_lam)])


def _as_output(values, xi):
    return float(values) if np.ndim(xi) == 0 else values


def cdf_limit_marginal(params: LimitParams, which: Family, xi):
    """F_lambda (or F_mu): 0, then 1 - 2*ratio*cos(pi*xi) on [0, 1/2), then 1."""

    ratio = params.ratio(which)
    x = np.asarray(xi, dtype=float)
    values = np.select(
        [x < 0, x < 0.5],
        [0.0, 1.0 - 2.0 * ratio * np.cos(np.pi * x)],
        default=1.0,
    )
    return _as_output(values, xi)


def cdf_limit(params: LimitParams, xi):
    """Limit distribution of the relative number of intersections."""

    lam, mu = params.lam, params.mu
    x = np.asarray(xi, dtype=float)
    lower = 1.0 - 2.0 * (lam + mu) * np.cos(np.pi * x) - 2.0 * lam * mu * (
        np.pi * x * np.sin(np.pi * x) - 2.0 * np.cos(np.pi * x)
    )
    upper = 1.0 - 2.0 * lam * mu * np.pi * (1.0 - x) * np.sin(np.pi * x)
    values = np.select([x < 0, x < 0.5, x < 1], [0.0, lower, upper], default=1.0)
    return _as_output(values, xi)


def limit_expectation(params: LimitParams) -> float:
    return 2.0 * (params.lam + params.mu) / math.pi


def cdf_limit_convolution(params: LimitParams, xi: float, tol: float = CONVOLUTION_TOL) -> float:
    """F(xi) as the Stieltjes integral of F_lambda(xi - eta) dF_mu(eta).

    dF_mu is an atom of mass 1 - 2*mu at 0 plus the density 2*pi*mu*sin(pi*eta)
    on (0, 1/2); the atom is added explicitly and the density part integrated.
    """

    atom = (1.0 - 2.0 * params.mu) * cdf_limit_marginal(params, Family.A, xi)
    if params.mu == 0:
        return atom

    def integrand(eta):
        return cdf_limit_marginal(params, Family.A, xi - eta) * 2.0 * np.pi * params.mu * math.sin(np.pi * eta)

    # F_lambda(xi - eta) jumps at eta = xi and has a kink at eta = xi - 1/2
    edges = sorted({0.0, 0.5} | {p for p in (xi - 0.5, xi) if 0.0 < p < 0.5})
    density_part = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                value, error = quad(integrand, lo, hi, epsabs=tol * 1e-3, epsrel=0.0, limit=200)
            except IntegrationWarning as exc:
                raise OracleConvergenceError(f"convolution quadrature failed at xi={xi}: {exc}") from exc
        density_part += value
    return atom + density_part


def cdf_limit_geometric(params: LimitParams, xi, resolution: int = GEOMETRIC_RESOLUTION):
    """Area fraction of the cell whose limiting relative count is at most xi.

    A centre at normalised distances s_a, s_b (uniform on [0, 1/2]) from the nearest
    line of each family sees a fraction arccos(min(s/ratio, 1))/pi of the needle
    directions cross that family once n is large.
    """

    s = (np.arange(resolution) + 0.5) / (2 * resolution)

    def hit_fraction(ratio):
        if ratio == 0:
            return np.zeros_like(s)
        return np.arccos(np.minimum(s / ratio, 1.0)) / np.pi

    relative = hit_fraction(params.lam)[:, None] + hit_fraction(params.mu)[None, :]
    relative = np.sort(relative, axis=None)
    counts = np.searchsorted(relative, np.asarray(xi, dtype=float), side="right")
    return _as_output(counts / relative.size, xi)


def _require_grid(grid: int) -> None:
    if grid < MIN_DISTANCE_GRID:
        raise OutOfRangeError(f"grid must hold at least {MIN_DISTANCE_GRID} points, got {grid}")


def sup_distance(finite: StepDistribution, params: LimitParams, grid: int = DISTANCE_GRID) -> float:
    """sup |F_{n,alpha} - F| over a grid plus both one-sided values at every jump."""

    _require_grid(grid)
    xs = np.linspace(*DISTANCE_GRID_RANGE, grid)
    on_grid = np.max(np.abs(finite(xs) - cdf_limit(params, xs)))

    jumps = finite.jump_points
    right = np.abs(finite(jumps) - cdf_limit(params, jumps))
    left = np.abs(finite.left_limit(jumps) - cdf_limit(params, np.nextafter(jumps, -np.inf)))
    return float(max(on_grid, right.max(), left.max()))


def alpha_spread(config: ThrowConfig, alphas: Iterable[float], grid: int = DISTANCE_GRID) -> float:
    """Largest sup-norm between F_{n,alpha} for any two of the given angles."""

    _require_grid(grid)
    steps = [cdf_finite(config, alpha) for alpha in alphas]
    xs = np.linspace(*DISTANCE_GRID_RANGE, grid)
    samples = np.concatenate([xs, steps[0].jump_points])
    values = np.array([step(samples) for step in steps])
    return float(np.max(values.max(axis=0) - values.min(axis=0)))


def limit_config(params: LimitParams, n: int, alpha: float, ell: float = 1.0) -> ThrowConfig:
    return ThrowConfig.from_ratios(n, params.lam, params.mu, alpha, ell)
