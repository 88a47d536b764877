from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from needles.common.generic_throw_simulator import GenericThrowSimulator
from needles.geometry import count_intersections, pose_from_uniforms


@dataclass
class PythonThrowSimulator(GenericThrowSimulator):
    """Reference backend: one pose at a time through the geometry module."""

    def count_block(self, uniforms: NDArray) -> NDArray:
        n = self.config.star.n
        histogram = np.zeros((n + 1, n + 1), dtype=np.int64)
        for row in uniforms:
            count = count_intersections(self.config, pose_from_uniforms(self.config, row))
            histogram[count.k, count.m] += 1
        return histogram
