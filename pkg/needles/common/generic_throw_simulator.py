import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import ClassVar, List

import numpy as np
from numpy.typing import NDArray

from needles.common_properties import BLOCK_SIZE
from needles.errors import ConfigurationError
from needles.geometry import ThrowConfig, frame_constants, max_intersections

logger = logging.getLogger(__name__)


def block_stream(seed: int, block_index: int) -> np.random.Generator:
    """Counter-based stream owned by one block of trials."""

    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block_index,))))


@dataclass
class GenericThrowSimulator(ABC):
    """Throws the star ``trials`` times and histograms the (k, m) crossing counts.

    Trials are cut into blocks of ``block_size``; block b draws its uniforms from
    its own stream seeded with (seed, b). Worker w handles a contiguous run of
    blocks and the per-worker histograms are summed in block order, so the result
    depends on (seed, trials, block_size) only.
    """

    config: ThrowConfig
    trials: int
    seed: int = 0
    workers: int = 1
    block_size: int = BLOCK_SIZE
    verbose: bool = False

    # kernels that parallelise internally run the worker chunks one after another
    concurrent_chunks: ClassVar[bool] = True

    @property
    def max_intersections(self) -> int:
        return max_intersections(self.config.star)

    @property
    def n_blocks(self) -> int:
        return math.ceil(self.trials / self.block_size)

    @property
    def blocks_per_worker(self) -> int:
        return math.ceil(self.n_blocks / self.workers)

    @property
    def kernel_arguments(self) -> tuple:
        """Scalar arguments shared by the compiled kernels."""

        frame = frame_constants(self.config.lattice)
        star, lattice = self.config.star, self.config.lattice
        return (
            star.n,
            star.ell,
            lattice.a,
            lattice.b,
            frame.sin_alpha,
            frame.cos_alpha,
            frame.cot_alpha,
            frame.csc_alpha,
            frame.normal_angle,
        )

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError(f"trials must be at least 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be at least 1, got {self.workers}")
        if self.block_size < 1:
            raise ConfigurationError(f"block_size must be at least 1, got {self.block_size}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def block_uniforms(self, block_index: int) -> NDArray:
        size = min(self.block_size, self.trials - block_index * self.block_size)
        return block_stream(self.seed, block_index).random((size, 3))

    @abstractmethod
    def count_block(self, uniforms: NDArray) -> NDArray:
        """(n+1) x (n+1) int64 histogram of (k, m) over the poses encoded by ``uniforms``."""

    def run_chunk(self, block_indices: List[int]) -> NDArray:
        histogram = np.zeros((self.config.star.n + 1, self.config.star.n + 1), dtype=np.int64)
        for block_index in block_indices:
            histogram += self.count_block(self.block_uniforms(block_index))
        return histogram

    def chunks(self) -> List[List[int]]:
        blocks = list(range(self.n_blocks))
        step = self.blocks_per_worker
        return [blocks[start : start + step] for start in range(0, len(blocks), step)]

    def calculate(self) -> NDArray:
        """Merged (M+1) x (M+1) histogram of crossing counts."""

        chunks = self.chunks()
        if self.verbose:
            logger.info(
                "Throwing n=%d star %d times: %d blocks of %d on %d workers (seed %d)",
                self.config.star.n,
                self.trials,
                self.n_blocks,
                self.block_size,
                len(chunks),
                self.seed,
            )

        if self.concurrent_chunks and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                partial = list(pool.map(self.run_chunk, chunks))
        else:
            partial = [self.run_chunk(chunk) for chunk in chunks]

        histogram = np.zeros_like(partial[0])
        for part in partial:
            histogram += part

        M = self.max_intersections
        if histogram[M + 1 :, :].any() or histogram[:, M + 1 :].any():
            raise RuntimeError(f"crossing count above M={M} recorded, the lattice is not admissible for this star")
        return histogram[: M + 1, : M + 1]
