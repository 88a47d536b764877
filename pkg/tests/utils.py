import math

import numpy as np

from needles.geometry import ThrowConfig


def config_from_row(row, alpha=None):
    """ThrowConfig for one row of a parameter matrix; alpha defaults to the row's fraction of pi/2n."""

    lam, mu = row.lam_mu
    if alpha is None:
        alpha = row.alpha_fraction * math.pi / (2 * row.n)
    return ThrowConfig.from_ratios(int(row.n), lam, mu, alpha)


def binomial_bound(p, trials, sigmas=4.0, floor=0.0):
    p = np.asarray(p, dtype=float)
    return np.maximum(sigmas * np.sqrt(p * (1.0 - p) / trials), floor)
