"""
Monte Carlo simulation of the random throw, for any n >= 2.

>>> sim = SimConfig(ThrowConfig.from_ratios(5, 1 / 3, 1 / 4, math.pi / 10), trials=10**6, seed=7)
>>> result = simulate(sim)  # doctest: +SKIP
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum, auto
from typing import Dict

import numpy as np
from numpy.typing import NDArray
from scipy.stats import beta

from needles.common.generic_throw_simulator import GenericThrowSimulator
from needles.common_properties import BLOCK_SIZE, EXPECTATION_SIGMAS, Z_99
from needles.distributions import StepDistribution
from needles.errors import ConfigurationError
from needles.exact import JointMatrix, ProbabilityVector, expectation, reduce_alpha
from needles.geometry import StarSpec, ThrowConfig
from needles.numba_files.throw_simulation_numba import NumbaThrowSimulator
from needles.parallel.throw_simulation_numba_parallel import NumbaParallelThrowSimulator
from needles.python.throw_simulation import PythonThrowSimulator

logger = logging.getLogger(__name__)

CI_METHODS = ("normal", "clopper-pearson")


class SimulatorType(Enum):
    PYTHON = auto()
    NUMBA = auto()
    NUMBA_PARALLEL = auto()


@dataclass(frozen=True)
class SimConfig:
    throw_config: ThrowConfig
    trials: int
    seed: int = 0
    workers: int = 1
    block_size: int = BLOCK_SIZE
    ci_method: str = "normal"

    def __post_init__(self):
        if self.ci_method not in CI_METHODS:
            raise ConfigurationError(f"ci_method must be one of {CI_METHODS}, got '{self.ci_method}'")


@dataclass(frozen=True, eq=False)
class SimResult:
    counts: NDArray  # counts[k, m], (M+1) x (M+1)
    p_hat: ProbabilityVector
    ci_half_width: NDArray  # 99% half-widths of p_hat
    trials: int
    seed: int
    workers: int
    n: int

    @property
    def joint_frequencies(self) -> NDArray:
        return self.counts / self.trials


def get_simulator(sim: SimConfig, type: SimulatorType, verbose: bool = False) -> GenericThrowSimulator:
    arguments = dict(
        config=sim.throw_config,
        trials=sim.trials,
        seed=sim.seed,
        workers=sim.workers,
        block_size=sim.block_size,
        verbose=verbose,
    )
    if type == SimulatorType.PYTHON:
        return PythonThrowSimulator(**arguments)
    elif type == SimulatorType.NUMBA:
        return NumbaThrowSimulator(**arguments)
    elif type == SimulatorType.NUMBA_PARALLEL:
        return NumbaParallelThrowSimulator(**arguments)
    else:
        raise ValueError(f"Unsupported simulator type: {type}")


def confidence_half_widths(successes: NDArray, trials: int, method: str = "normal") -> NDArray:
    successes = np.asarray(successes, dtype=float)
    p_hat = successes / trials
    if method == "normal":
        return Z_99 * np.sqrt(p_hat * (1.0 - p_hat) / trials)
    if method == "clopper-pearson":
        tail = (1.0 - 0.99) / 2
        lower = np.where(successes > 0, beta.ppf(tail, successes, trials - successes + 1), 0.0)
        upper = np.where(successes < trials, beta.ppf(1 - tail, successes + 1, trials - successes), 1.0)
        return np.maximum(p_hat - lower, upper - p_hat)
    raise ConfigurationError(f"ci_method must be one of {CI_METHODS}, got '{method}'")


def diagonal_counts(counts: NDArray) -> NDArray:
    M = counts.shape[0] - 1
    flipped = np.fliplr(counts)
    return np.array([np.trace(flipped, offset=M - i) for i in range(2 * M + 1)], dtype=np.int64)


def simulate(sim: SimConfig, type: SimulatorType = SimulatorType.NUMBA, verbose: bool = False) -> SimResult:
    counts = get_simulator(sim, type, verbose).calculate()
    totals = diagonal_counts(counts)
    p_hat = ProbabilityVector(totals / sim.trials)
    result = SimResult(
        counts=counts,
        p_hat=p_hat,
        ci_half_width=confidence_half_widths(totals, sim.trials, sim.ci_method),
        trials=sim.trials,
        seed=sim.seed,
        workers=sim.workers,
        n=sim.throw_config.star.n,
    )
    logger.info("simulated %d throws, mean count %.6g", sim.trials, p_hat.mean())
    return result


def simulate_joint(sim: SimConfig, type: SimulatorType = SimulatorType.NUMBA, verbose: bool = False) -> JointMatrix:
    counts = get_simulator(sim, type, verbose).calculate()
    config = sim.throw_config
    alpha_eff = reduce_alpha(config.star, config.lattice.alpha).alpha_eff
    return JointMatrix(entries=counts / sim.trials, config=config, alpha_eff=alpha_eff)


def empirical_cdf(result: SimResult, star: StarSpec) -> StepDistribution:
    return StepDistribution.from_probabilities(result.p_hat, star.n)


def z_scores(result: SimResult, exact: ProbabilityVector) -> NDArray:
    """(p_hat - p) / binomial sigma; 0 where both are degenerate and equal."""

    p = np.asarray(exact.p, dtype=float)
    sigma = np.sqrt(p * (1.0 - p) / result.trials)
    difference = result.p_hat.p - p
    return np.divide(
        difference,
        sigma,
        out=np.where(difference == 0, 0.0, np.inf),
        where=sigma > 0,
    )


def expectation_check(result: SimResult, config: ThrowConfig, sigmas: float = EXPECTATION_SIGMAS) -> Dict[str, float]:
    """Compare the simulated mean count with 2n(lambda + mu)/pi; passed when |z| <= sigmas."""

    i = np.arange(len(result.p_hat))
    mean = float(np.dot(i, result.p_hat.p))
    variance = float(np.dot(i**2, result.p_hat.p)) - mean**2
    sigma = math.sqrt(max(variance, 0.0) / result.trials)
    expected = expectation(config)
    z = (mean - expected) / sigma if sigma > 0 else (0.0 if mean == expected else math.inf)
    return dict(mean=mean, expected=expected, sigma=sigma, z=z, passed=bool(abs(z) <= sigmas))
