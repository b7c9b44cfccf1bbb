"""Counter-based random streams.

Every Monte Carlo sample draws from its own Philox generator keyed by
``(seed, tag, sample index)``.  Draws for frequency ``n`` always sit at the
same offset in that stream, so a sample does not depend on batch size,
chunking, worker count or on how many higher frequencies are requested.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_INDEX_BITS = 40


@dataclass(frozen=True)
class Stream:
    """A family of independent per-sample generators.

    ``tag`` separates streams used for different purposes under one seed
    (e.g. the density estimator and an independent ball-mass estimator).
    """

    seed: int
    tag: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not 0 <= self.tag < (1 << (64 - _INDEX_BITS)):
            raise ValueError(f"tag out of range: {self.tag}")

    def generator(self, index: int) -> np.random.Generator:
        if not 0 <= index < (1 << _INDEX_BITS):
            raise ValueError(f"sample index out of range: {index}")
        key = [self.seed, (self.tag << _INDEX_BITS) | index]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, tag: int) -> "Stream":
        return Stream(self.seed, tag)

    def complex_normals(self, start: int, count: int, nfreq: int) -> np.ndarray:
        """Complex standard normals ``g`` with E|g|^2 = 1, shape (count, nfreq).

        Row ``i`` belongs to sample ``start + i``; column ``k`` to frequency
        ``k + 1``.
        """
        out = np.empty((count, nfreq), dtype=np.complex128)
        scale = np.sqrt(0.5)
        for i in range(count):
            z = self.generator(start + i).standard_normal(2 * nfreq)
            out[i].real = z[0::2]
            out[i].imag = z[1::2]
        out *= scale
        return out
