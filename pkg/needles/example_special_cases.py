"""
Special case n = 5: the probabilities p(i) are bilinear in lambda and mu,

    p(i) = delta_i0 + A_i (lambda + mu) + sign_i c_i lambda mu,

so evaluating them at (lambda, mu) and at (lambda, 0) recovers A_i and c_i.
The table is written to special_cases_n5.csv.
"""

import itertools
import math

import numpy as np
import pandas as pd

from needles.exact import p_exact
from needles.geometry import ThrowConfig

N = 5
# p(0), p(3), p(4), p(5), p(6) carry +c_i lambda mu, p(1) and p(2) carry -c_i lambda mu
SIGNS = np.array([1, -1, -1, 1, 1, 1, 1])

# set parameters
data_dict = dict(
    alpha=[0.0, math.pi / 10],
    lam=[0.1],
    mu=[0.05],
)


def special_case_coefficients(alpha: float, lam: float, mu: float) -> pd.DataFrame:
    both = p_exact(ThrowConfig.from_ratios(N, lam, mu, math.pi / 2), alpha).p
    single = p_exact(ThrowConfig.from_ratios(N, lam, 0.0, math.pi / 2), alpha).p

    unit = np.zeros(len(both))
    unit[0] = 1.0
    linear = (single - unit) / lam
    c = SIGNS * (both - unit - linear * (lam + mu)) / (lam * mu)
    return pd.DataFrame(dict(alpha=alpha, i=np.arange(len(both)), linear=linear, c=c))


if __name__ == "__main__":
    data_df = pd.DataFrame.from_records(data=itertools.product(*data_dict.values()), columns=data_dict.keys())

    result_df = pd.DataFrame()
    for idx, data in data_df.iterrows():
        temp_df = special_case_coefficients(data.alpha, data.lam, data.mu)
        result_df = pd.concat([result_df, temp_df], ignore_index=True)

    print(result_df)
    result_df.to_csv("special_cases_n5.csv", index=False, float_format="%.17g")
