"""
Exact intersection probabilities of an odd star thrown onto a two-family lattice.

All closed forms are evaluated at an effective angle in [0, pi/2n]; any other
lattice angle is folded into that range by ``reduce_alpha`` (pi/n-periodicity
and the mirror symmetry about pi/2n).
"""

import logging
import math
import warnings
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy.integrate import IntegrationWarning, quad

from needles.breadth import Interval, reduce_phi, stripe_probability
from needles.common_properties import ANGLE_SNAP, QUADRATURE_TOL
from needles.errors import OracleConvergenceError, OutOfRangeError, UnsupportedNeedleCountError
from needles.geometry import StarSpec, ThrowConfig, max_intersections

logger = logging.getLogger(__name__)

N3_VARIANTS = ("theorem", "proof")

# additive shifts of f_j, only set through perturbed_coefficient
_perturbations: Dict[int, float] = {}


@contextmanager
def perturbed_coefficient(j: int, delta: float):
    """Temporarily shift f_j by delta (mutation check of the verification runs)."""

    if j not in range(10):
        raise OutOfRangeError(f"coefficient index must lie in 0..9, got {j}")
    previous = _perturbations.get(j)
    _perturbations[j] = delta
    try:
        yield
    finally:
        if previous is None:
            del _perturbations[j]
        else:
            _perturbations[j] = previous


@dataclass(frozen=True)
class AlphaReduced:
    alpha_raw: float
    alpha_eff: float  # in [0, pi/2n]
    delta: float  # floor(n*alpha/pi) * pi/n
    mirrored: bool  # alpha_eff = pi/n - (alpha_raw - delta)


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    p: NDArray  # p[i] = P(exactly i intersections)

    def __len__(self):
        return len(self.p)

    def __getitem__(self, i):
        return self.p[i]

    def __iter__(self):
        return iter(self.p)

    def total(self) -> float:
        return float(np.sum(self.p))

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.p)), self.p))


@dataclass(frozen=True, eq=False)
class JointMatrix:
    entries: NDArray  # entries[k, m] = P(E_{k,m})
    config: ThrowConfig
    alpha_eff: float

    @property
    def M(self) -> int:
        return self.entries.shape[0] - 1

    def total(self) -> float:
        return float(np.sum(self.entries))

    def diagonal_sums(self) -> ProbabilityVector:
        """p(i) = sum over k + m = i of P(E_{k,m})."""

        M = self.M
        flipped = np.fliplr(self.entries)
        return ProbabilityVector(np.array([np.trace(flipped, offset=M - i) for i in range(2 * M + 1)]))


def _require_odd(star: StarSpec) -> None:
    if star.n % 2 == 0 or star.n < 3:
        raise UnsupportedNeedleCountError(star.n)


def _check_alpha_eff(star: StarSpec, alpha_eff: float) -> None:
    if not -ANGLE_SNAP <= alpha_eff <= math.pi / (2 * star.n) + ANGLE_SNAP:
        raise OutOfRangeError(f"effective angle must lie in [0, pi/2n] for n={star.n}, got {alpha_eff}")


def g(x: float, alpha_eff: float) -> float:
    return math.sin(x) + alpha_eff * math.cos(x)


def h(x: float, alpha_eff: float) -> float:
    return math.sin(x) - alpha_eff * math.cos(x)


def _coefficients(n: int, a: float) -> List[float]:
    """f_0 .. f_9 at the effective angle a."""

    x = math.pi / n
    beta = x / 2
    cos_a = math.cos(a)

    base = x * cos_a + g(x - a, a) + h(a, a)
    shifted = 2 * x * math.cos(beta) * cos_a + g(3 * beta - a, a) - g(beta - a, a) + h(beta + a, a)

    f = [
        2 * base * math.cos(beta) ** 2,
        base * math.sin(x),
        shifted * math.sin(x),
        g(beta - a, a) * math.sin(x),
        base * math.sin(beta) ** 2,
        shifted * math.sin(beta) ** 2,
        g(beta - a, a) * math.sin(beta) ** 2,
        x * (3 - 2 * math.cos(2 * x)) * cos_a
        - g(3 * x - a, a)
        + 3 * g(2 * x - a, a)
        - g(x - a, a)
        + 7 * h(a, a)
        - h(x + a, a)
        - h(2 * x + a, a),
        -x * cos_a - g(2 * x - a, a) + 2 * g(x - a, a) - 4 * h(a, a) + h(x + a, a),
        x * cos_a - g(x - a, a) + 3 * h(a, a),
    ]
    for j, delta in _perturbations.items():
        f[j] += delta
    return f


def f_coeff(j: int, alpha_eff: float, star: StarSpec) -> float:
    _require_odd(star)
    if j not in range(10):
        raise OutOfRangeError(f"coefficient index must lie in 0..9, got {j}")
    _check_alpha_eff(star, alpha_eff)
    return _coefficients(star.n, alpha_eff)[j]


def reduce_alpha(star: StarSpec, alpha: float) -> AlphaReduced:
    """Fold alpha into [0, pi/2n] using periodicity and mirror symmetry."""

    period = math.pi / star.n
    beta = period / 2

    steps = alpha / period
    on_multiple = abs(steps - round(steps)) <= ANGLE_SNAP * max(1.0, abs(steps))
    steps = round(steps) if on_multiple else math.floor(steps)
    delta = steps * period
    rest = 0.0 if on_multiple else alpha - delta

    mirrored = rest > beta + ANGLE_SNAP
    alpha_eff = period - rest if mirrored else min(rest, beta)
    alpha_eff = min(max(alpha_eff, 0.0), beta)

    logger.debug("alpha=%.17g reduced to %.17g (delta=%.17g, mirrored=%s)", alpha, alpha_eff, delta, mirrored)
    return AlphaReduced(alpha_raw=alpha, alpha_eff=alpha_eff, delta=delta, mirrored=mirrored)


def _joint_entries(n: int, lam: float, mu: float, a: float) -> NDArray:
    M = (n + 1) // 2
    c = n / math.pi
    x = math.pi / n
    beta = x / 2
    lm = lam * mu
    f = _coefficients(n, a)
    s = [math.sin(k * x) for k in range(M + 1)]

    P = np.zeros((M + 1, M + 1))
    P[0, 0] = 1 - (2 * c * (lam + mu) * math.sin(x) - c * lm * f[0])

    for k in range(1, M - 1):
        P[0, k] = 8 * c * mu * math.sin(beta) ** 2 * s[k] - 2 * c * lm * s[k] * f[1]
        P[k, 0] = 8 * c * lam * math.sin(beta) ** 2 * s[k] - 2 * c * lm * s[k] * f[1]

    near_edge = math.cos(beta) - math.cos(3 * math.pi / (4 * n)) ** 2
    P[0, M - 1] = 4 * c * mu * near_edge - c * lm * f[2]
    P[M - 1, 0] = 4 * c * lam * near_edge - c * lm * f[2]

    edge = math.sin(math.pi / (4 * n)) ** 2
    P[0, M] = 4 * c * mu * edge - c * lm * f[3]
    P[M, 0] = 4 * c * lam * edge - c * lm * f[3]

    for k in range(1, M - 1):
        for m in range(1, M - 1):
            P[k, m] = 8 * c * lm * s[k] * s[m] * f[4]
        P[k, M - 1] = P[M - 1, k] = 4 * c * lm * s[k] * f[5]
        P[k, M] = P[M, k] = 4 * c * lm * s[k] * f[6]

    P[M - 1, M - 1] = c * lm / 2 * f[7]
    P[M - 1, M] = P[M, M - 1] = c * lm / 2 * f[8]
    P[M, M] = c * lm / 2 * f[9]
    return P


def joint_matrix(config: ThrowConfig, alpha_eff: float) -> JointMatrix:
    """P(E_{k,m}) for 0 <= k, m <= M at an effective angle in [0, pi/2n]."""

    _require_odd(config.star)
    _check_alpha_eff(config.star, alpha_eff)
    entries = _joint_entries(config.star.n, config.lam, config.mu, alpha_eff)
    return JointMatrix(entries=entries, config=config, alpha_eff=alpha_eff)


def joint_matrix_at(config: ThrowConfig, alpha: Optional[float] = None) -> JointMatrix:
    """Joint matrix at an arbitrary angle.

    A mirrored reduction swaps the roles of the families:
    P_{pi/n - a}(E_{k,m})(lambda, mu) = P_a(E_{m,k})(mu, lambda).
    """

    _require_odd(config.star)
    alpha = config.lattice.alpha if alpha is None else alpha
    reduced = reduce_alpha(config.star, alpha)
    n = config.star.n
    if reduced.mirrored:
        entries = _joint_entries(n, config.mu, config.lam, reduced.alpha_eff).T.copy()
    else:
        entries = _joint_entries(n, config.lam, config.mu, reduced.alpha_eff)
    return JointMatrix(entries=entries, config=config, alpha_eff=reduced.alpha_eff)


def _integrate(integrand, lo: float, hi: float, tol: float):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, error = quad(integrand, lo, hi, epsabs=tol, epsrel=0.0, limit=200)
        except IntegrationWarning as exc:
            raise OracleConvergenceError(f"quad did not converge on [{lo:.17g}, {hi:.17g}]: {exc}") from exc
    if error > tol:
        raise OracleConvergenceError(f"quad error estimate {error:.3g} exceeds {tol:.3g} on [{lo:.17g}, {hi:.17g}]")
    return value, error


def joint_matrix_oracle(config: ThrowConfig, alpha: float, quadrature_tol: float = QUADRATURE_TOL) -> JointMatrix:
    """Joint matrix by adaptive quadrature of P(E_{k,m} | phi) over [0, pi/n).

    The integrand is the product of the per-family stripe probabilities at phi and
    phi + alpha, split wherever either argument crosses a multiple of pi/2n.
    """

    star = config.star
    _require_odd(star)
    n = star.n
    M = max_intersections(star)
    period = math.pi / n
    beta = period / 2
    shift = reduce_phi(star, alpha)

    breaks = {0.0, beta, period}
    for j in range(1, 4):
        point = j * beta - shift
        if 0.0 < point < period:
            breaks.add(point)
    edges = sorted(breaks)
    pieces = [(lo, hi) for lo, hi in zip(edges[:-1], edges[1:]) if hi - lo > 0.0]
    piece_tol = quadrature_tol * period / len(pieces)

    def family_b(m, psi):
        if period <= psi < 3 * beta:
            return stripe_probability(star, m, psi, config.mu, Interval.I3)
        return stripe_probability(star, m, psi, config.mu)

    entries = np.zeros((M + 1, M + 1))
    for k in range(M + 1):
        for m in range(M + 1):

            def integrand(phi, k=k, m=m):
                return stripe_probability(star, k, phi, config.lam) * family_b(m, phi + shift)

            total = 0.0
            for lo, hi in pieces:
                value, _ = _integrate(integrand, lo, hi, piece_tol)
                total += value
            entries[k, m] = total / period

    logger.debug("quadrature oracle n=%d alpha=%.17g over %d pieces", n, alpha, len(pieces))
    alpha_eff = reduce_alpha(star, alpha).alpha_eff
    return JointMatrix(entries=entries, config=config, alpha_eff=alpha_eff)


def _p_theorem(n: int, lam: float, mu: float, a: float, n3_variant: str = "theorem") -> NDArray:
    M = (n + 1) // 2
    c = n / math.pi
    x = math.pi / n
    beta = x / 2
    lin = lam + mu
    lm = lam * mu
    f = _coefficients(n, a)

    def folded_sum(i):
        # 2 * sum_{k=1}^{i-1} sin(k pi/n) sin((i-k) pi/n)
        return math.sin(i * x) / math.tan(x) - i * math.cos(i * x)

    p = np.zeros(2 * M + 1)
    p[0] = 1 - (2 * c * lin * math.sin(x) - c * lm * f[0])

    for i in range(1, M - 1):
        p[i] = 8 * c * lin * math.sin(beta) ** 2 * math.sin(i * x) - 4 * c * lm * (
            f[1] * math.sin(i * x) - f[4] * folded_sum(i)
        )

    p[M - 1] = 4 * c * lin * (math.cos(beta) - math.cos(3 * math.pi / (4 * n)) ** 2) - 2 * c * lm * (
        f[2] - 2 * f[4] * folded_sum(M - 1)
    )

    edge = 4 * c * lin * math.sin(math.pi / (4 * n)) ** 2
    if n == 3:
        if n3_variant == "theorem":
            p[M] = edge - c * lm / 2 * (4 * f[3] - f[7])
        elif n3_variant == "proof":
            p[M] = edge - 2 * c * lm * f[3] + c * lm / 2 * f[7] * math.sin(x)
        else:
            raise OutOfRangeError(f"n3_variant must be one of {N3_VARIANTS}, got '{n3_variant}'")
    else:
        inner = (n - 5) * math.sin(beta) + 2 / math.sin(x) * math.cos(5 * beta)
        p[M] = edge - 2 * c * lm * (f[3] - 4 * f[5] * math.sin(x) - f[4] * inner)

        for i in range(M + 1, 2 * M - 2):
            span = 2 * M - i - 3
            p[i] = (
                4
                * c
                * lm
                * (
                    2 * f[6] * math.sin((i - M) * x)
                    + 2 * f[5] * math.sin((i + 1 - M) * x)
                    - f[4] * (span * math.cos(i * x) - math.sin(span * x) / math.sin(x))
                )
            )

        p[2 * M - 2] = c * lm / 2 * (16 * f[6] * math.cos(3 * beta) + f[7])

    p[2 * M - 1] = c * lm * f[8]
    p[2 * M] = c * lm / 2 * f[9]
    return p


def p_exact(config: ThrowConfig, alpha: Optional[float] = None, n3_variant: str = "theorem") -> ProbabilityVector:
    """Probabilities of exactly i = 0 .. 2M intersections.

    ``alpha`` defaults to the lattice angle of ``config``; any real angle is
    accepted and reduced.
    """

    _require_odd(config.star)
    alpha = config.lattice.alpha if alpha is None else alpha
    reduced = reduce_alpha(config.star, alpha)
    p = _p_theorem(config.star.n, config.lam, config.mu, reduced.alpha_eff, n3_variant)
    return ProbabilityVector(p)


def p_at_least_one(config: ThrowConfig, alpha: Optional[float] = None) -> float:
    _require_odd(config.star)
    alpha = config.lattice.alpha if alpha is None else alpha
    n = config.star.n
    a = reduce_alpha(config.star, alpha).alpha_eff
    return 2 * n * (config.lam + config.mu) / math.pi * math.sin(math.pi / n) - n * config.lam * config.mu / math.pi * (
        _coefficients(n, a)[0]
    )


def expectation(config: ThrowConfig) -> float:
    """Mean number of intersections, 2n(lambda + mu)/pi for every n and alpha."""

    return 2 * config.star.n * (config.lam + config.mu) / math.pi


def pm_n3_candidates(config: ThrowConfig, alpha: Optional[float] = None) -> Dict[str, float]:
    """Both candidate values of p(M) for the three-needle star."""

    if config.star.n != 3:
        raise OutOfRangeError(f"the p(M) candidates concern n=3, got n={config.star.n}")
    alpha = config.lattice.alpha if alpha is None else alpha
    a = reduce_alpha(config.star, alpha).alpha_eff
    M = max_intersections(config.star)
    return {variant: float(_p_theorem(3, config.lam, config.mu, a, variant)[M]) for variant in N3_VARIANTS}


def conjectured_direction(i: int, M: int) -> str:
    if i == 0:
        return "decreasing"
    if 1 <= i <= M - 1 or i == 2 * M - 1:
        return "increasing"
    return "decreasing"


def probe_monotonicity(config: ThrowConfig, points: int = 64) -> pd.DataFrame:
    """Observed direction of p(i, .) on (0, pi/2n) next to the conjectured one.

    Only i = 0 is a proved statement; the other rows are exploratory.
    """

    _require_odd(config.star)
    n = config.star.n
    M = max_intersections(config.star)
    grid = np.linspace(0.0, math.pi / (2 * n), points + 2)[1:-1]
    values = np.array([_p_theorem(n, config.lam, config.mu, a) for a in grid])
    slopes = np.diff(values, axis=0)

    rows = []
    for i in range(2 * M + 1):
        if np.all(slopes[:, i] > 0):
            observed = "increasing"
        elif np.all(slopes[:, i] < 0):
            observed = "decreasing"
        else:
            observed = "mixed"
        conjectured = conjectured_direction(i, M)
        rows.append(
            dict(
                i=i,
                conjectured=conjectured,
                observed=observed,
                holds=conjectured == observed,
                proved=i == 0,
            )
        )
    return pd.DataFrame(rows, columns=["i", "conjectured", "observed", "holds", "proved"])
