import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.typing import NDArray

from needles.common.generic_throw_simulator import GenericThrowSimulator


@njit(nogil=True)
def crossing_counts(u_row, n, ell, a, b, sin_alpha, cos_alpha, cot_alpha, csc_alpha, normal_angle):
    a_cell = a if math.isfinite(a) else 1.0
    b_cell = b if math.isfinite(b) else 1.0
    y = b_cell * u_row[0]
    x = y * cot_alpha + a_cell * csc_alpha * u_row[1]
    phi = 2.0 * math.pi * u_row[2]

    d_a0 = x * sin_alpha - y * cos_alpha
    floor_a0 = math.floor(d_a0 / a)
    floor_b0 = math.floor(y / b)

    k = 0
    m = 0
    for j in range(n):
        theta = phi + 2.0 * math.pi * j / n + normal_angle
        x1 = x + ell * math.cos(theta)
        y1 = y + ell * math.sin(theta)
        k += abs(math.floor((x1 * sin_alpha - y1 * cos_alpha) / a) - floor_a0)
        m += abs(math.floor(y1 / b) - floor_b0)
    return k, m


@njit(nogil=True)
def count_block_kernel(uniforms, n, ell, a, b, sin_alpha, cos_alpha, cot_alpha, csc_alpha, normal_angle):
    histogram = np.zeros((n + 1, n + 1), dtype=np.int64)
    for t in range(uniforms.shape[0]):
        k, m = crossing_counts(uniforms[t], n, ell, a, b, sin_alpha, cos_alpha, cot_alpha, csc_alpha, normal_angle)
        histogram[k, m] += 1
    return histogram


@dataclass
class NumbaThrowSimulator(GenericThrowSimulator):
    def count_block(self, uniforms: NDArray) -> NDArray:
        return count_block_kernel(uniforms, *self.kernel_arguments)
