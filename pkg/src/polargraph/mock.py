"""Synthetic frame sources with known error rates, for testing searches and races."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import RngStream
from .polar import CodeDesign


@dataclass(frozen=True)
class BernoulliSource:
    """Independent frame errors with probability ``fer(design)``."""

    fer: Callable[[CodeDesign], float]
    seed: int = 0
    batch_size: int = 4096
    tag: str = "mock-bernoulli"
    ebn0_db: float = 0.0

    def error_flags(self, design: CodeDesign, batch_index: int) -> np.ndarray:
        p = float(self.fer(design))
        gen = RngStream(self.seed, design.stable_hash, (batch_index,)).generator
        return gen.random(self.batch_size) < p


@dataclass(frozen=True)
class PeriodicSource:
    """Deterministic errors: frame ``t`` fails iff ``(t + 1) % period(design) == 0``.

    A period of ``None`` or ``0`` means the design never fails.
    """

    period: Callable[[CodeDesign], int | None]
    batch_size: int = 4096
    tag: str = "mock-periodic"
    ebn0_db: float = 0.0

    def error_flags(self, design: CodeDesign, batch_index: int) -> np.ndarray:
        m = self.period(design)
        if not m:
            return np.zeros(self.batch_size, dtype=bool)
        t = np.arange(batch_index * self.batch_size, (batch_index + 1) * self.batch_size)
        return (t + 1) % int(m) == 0
