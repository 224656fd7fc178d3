"""Bark-scale mapping and the symmetric auditory spreading potential."""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from app.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MIN_FRAME_LENGTH = 8


@dataclass(frozen=True)
class BinGrid:
    """Center frequencies of the bins 1..N/2-1 (DC and Nyquist excluded)."""

    fs: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.fs) or self.fs <= 0:
            raise DomainError(f"sampling rate must be positive, got {self.fs}")
        if self.n < MIN_FRAME_LENGTH or self.n % 2:
            raise DomainError(f"frame length must be even and >= {MIN_FRAME_LENGTH}, got {self.n}")

    @property
    def order(self) -> int:
        return self.n // 2 - 1

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(1, self.order + 1) * (self.fs / self.n)


def hz_to_bark(f: ArrayLike) -> ArrayLike:
    values = np.asarray(f, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DomainError("frequency must be finite")
    if np.any(values < 0):
        raise DomainError(f"frequency must be >= 0 Hz, got min {values.min()}")
    bark = 13.0 * np.arctan(0.00076 * values) + 3.5 * np.arctan((values / 7500.0) ** 2)
    return float(bark) if bark.ndim == 0 else bark


def spreading_db(b_from: ArrayLike, b_to: ArrayLike) -> ArrayLike:
    """Schroeder spreading level (dB) from one Bark position to another.

    Decays faster toward lower frequencies than toward higher ones.
    """
    src = np.asarray(b_from, dtype=np.float64)
    dst = np.asarray(b_to, dtype=np.float64)
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
        raise DomainError("bark values must be finite")
    d = dst - src + 0.474
    level = 15.81 + 7.5 * d - 17.5 * np.sqrt(1.0 + d * d)
    return float(level) if level.ndim == 0 else level


def db_to_power(level_db: ArrayLike) -> ArrayLike:
    return np.power(10.0, np.asarray(level_db, dtype=np.float64) / 10.0)


def build_spreading_matrix(grid: BinGrid) -> np.ndarray:
    barks = hz_to_bark(grid.freqs)
    spread = db_to_power(spreading_db(barks[:, None], barks[None, :]))
    potential = 0.5 * (spread + spread.T)
    potential.setflags(write=False)

    logger.debug(
        f"Spreading matrix: order={grid.order}, fs={grid.fs}, "
        f"bark range=[{barks[0]:.3f}, {barks[-1]:.3f}], diag={potential[0, 0]:.5f}"
    )
    return potential
