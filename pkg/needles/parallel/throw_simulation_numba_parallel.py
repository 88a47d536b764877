from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from numba import njit, prange
from numpy.typing import NDArray

from needles.common.generic_throw_simulator import GenericThrowSimulator
from needles.numba_files.throw_simulation_numba import crossing_counts


@njit(parallel=True)
def count_block_kernel_parallel(uniforms, n, ell, a, b, sin_alpha, cos_alpha, cot_alpha, csc_alpha, normal_angle):
    trials = uniforms.shape[0]
    k_counts = np.empty(trials, dtype=np.int64)
    m_counts = np.empty(trials, dtype=np.int64)
    for t in prange(trials):
        k, m = crossing_counts(uniforms[t], n, ell, a, b, sin_alpha, cos_alpha, cot_alpha, csc_alpha, normal_angle)
        k_counts[t] = k
        m_counts[t] = m

    histogram = np.zeros((n + 1, n + 1), dtype=np.int64)
    for t in range(trials):
        histogram[k_counts[t], m_counts[t]] += 1
    return histogram


@dataclass
class NumbaParallelThrowSimulator(GenericThrowSimulator):
    # numba's parallel kernels must not be launched from several Python threads at once
    concurrent_chunks: ClassVar[bool] = False

    def count_block(self, uniforms: NDArray) -> NDArray:
        return count_block_kernel_parallel(uniforms, *self.kernel_arguments)
