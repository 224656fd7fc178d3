import logging
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from cachetools import LRUCache

from app.config import get_settings
from app.errors import DimensionError, DomainError, NumericalError, SymmetryViolationError
from app.models.schemas import Domain, PeakRegion, PropagatorConfig, SignConvention
from app.services.auditory_model import BinGrid, build_spreading_matrix
from app.services.propagator import (
    build_hamiltonian,
    build_laplacian,
    spreading_metric,
    time_one_map,
    unitarity_residual,
)

logger = logging.getLogger(__name__)

settings = get_settings()

UNITARY_TOL = 1e-10
SYMMETRY_ERROR_RATIO = 1e-6
PEAK_DYNAMIC_RANGE_DB = 20.0


@dataclass(frozen=True)
class Spectrum:
    bins: np.ndarray
    domain: Domain

    @property
    def n(self) -> int:
        return self.bins.shape[0]


@dataclass(frozen=True)
class TransformPlan:
    n: int
    fs: float
    cfg: PropagatorConfig
    potential: np.ndarray = field(repr=False)
    tw: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)

    @property
    def sign(self) -> SignConvention:
        return self.cfg.sign

    @property
    def order(self) -> int:
        return self.n // 2 - 1

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "fs": self.fs,
            "sigma1": self.cfg.sigma1,
            "sigma2": self.cfg.sigma2,
            "sign": self.cfg.sign.value,
            "order": self.order,
        }


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def as_frame(samples, n: Optional[int] = None) -> np.ndarray:
    frame = np.asarray(samples, dtype=np.float64)
    if frame.ndim != 1:
        raise DimensionError(f"frame must be one-dimensional, got shape {frame.shape}")
    if frame.shape[0] % 2:
        raise DomainError(f"frame length must be even, got {frame.shape[0]}")
    if n is not None and frame.shape[0] != n:
        raise DimensionError(f"frame length {frame.shape[0]} does not match plan length {n}")
    if not np.all(np.isfinite(frame)):
        raise DomainError("frame contains non-finite samples")
    return frame


def dft_matrix(n: int, sign: float = -1.0) -> np.ndarray:
    k = np.arange(n)
    # Reduce the index product mod n before scaling to keep the phases exact for large n.
    return np.exp(sign * 2j * np.pi * (np.outer(k, k) % n) / n)


def direct_dft(frame: np.ndarray) -> np.ndarray:
    return dft_matrix(frame.shape[0]) @ frame.astype(np.complex128)


def dft(frame) -> Spectrum:
    samples = as_frame(frame)
    n = samples.shape[0]
    if is_power_of_two(n):
        bins = np.fft.fft(samples)
    else:
        bins = direct_dft(samples)
    return Spectrum(bins=bins, domain=Domain.DFT)


def _inverse_bins(bins: np.ndarray) -> np.ndarray:
    n = bins.shape[0]
    if is_power_of_two(n):
        return np.fft.ifft(bins)
    return (dft_matrix(n, sign=1.0) @ bins) / n


def idft(spec: Spectrum) -> np.ndarray:
    bins = np.asarray(spec.bins, dtype=np.complex128)
    if bins.ndim != 1 or bins.shape[0] % 2:
        raise DomainError(f"spectrum length must be even, got {bins.shape}")
    values = _inverse_bins(bins)
    total = float(np.linalg.norm(values))
    residue = float(np.linalg.norm(values.imag))
    if total > 0.0 and residue > SYMMETRY_ERROR_RATIO * total:
        raise SymmetryViolationError(
            "spectrum is not Hermitian-symmetric",
            {"imag_residue": residue, "norm": total, "domain": spec.domain.value},
        )
    if residue > 0.0:
        logger.debug(f"Discarded imaginary residue {residue:.3e} (norm {total:.3e})")
    return values.real.copy()


def assemble_x(tw: np.ndarray, n: int) -> np.ndarray:
    order = n // 2 - 1
    if n % 2 or tw.shape != (order, order):
        raise DimensionError(f"T_w of shape {tw.shape} does not fit frame length {n}")
    half = n // 2
    x = np.zeros((n, n), dtype=np.complex128)
    x[0, 0] = 1.0
    x[1:half, 1:half] = tw
    x[half, half] = 1.0
    # J conj(T_w) J on the mirrored bins keeps conjugate-symmetric spectra conjugate-symmetric.
    x[half + 1:, half + 1:] = np.flip(np.conj(tw))
    return x


def build_plan(n: int, fs: float, cfg: PropagatorConfig) -> TransformPlan:
    grid = BinGrid(fs=fs, n=n)
    potential = build_spreading_matrix(grid)
    hamiltonian = build_hamiltonian(cfg, build_laplacian(grid.order), potential)
    tw = time_one_map(hamiltonian, cfg.sign)
    x = assemble_x(tw, n)

    residual = unitarity_residual(x)
    if residual > UNITARY_TOL:
        raise NumericalError("assembled X is not unitary", {"residual": residual, "n": n})

    for matrix in (tw, x):
        matrix.setflags(write=False)

    logger.info(
        f"Built ODAT plan: n={n}, fs={fs}, sigma1={cfg.sigma1}, sigma2={cfg.sigma2}, "
        f"sign={cfg.sign.value}, unitarity residual={residual:.2e}"
    )
    return TransformPlan(n=n, fs=fs, cfg=cfg, potential=potential, tw=tw, x=x)


class PlanStore:
    """Builds transform plans on demand and keeps the most recently used ones."""

    def __init__(self, maxsize: int):
        self.cache = LRUCache(maxsize=maxsize)
        self._lock = threading.Lock()

    @staticmethod
    def cache_key(n: int, fs: float, cfg: PropagatorConfig) -> tuple:
        return (n, float(fs), cfg.sigma1, cfg.sigma2, cfg.sign.value)

    def get(self, n: int, fs: float, cfg: PropagatorConfig) -> TransformPlan:
        key = self.cache_key(n, fs, cfg)
        with self._lock:
            if key in self.cache:
                logger.debug(f"Returning cached plan for {key}")
                return self.cache[key]
            plan = build_plan(n, fs, cfg)
            self.cache[key] = plan
            return plan

    def clear(self) -> None:
        with self._lock:
            self.cache.clear()

    def __contains__(self, key: tuple) -> bool:
        return key in self.cache

    def __len__(self) -> int:
        return len(self.cache)


def forward(frame, plan: TransformPlan) -> Spectrum:
    samples = as_frame(frame, plan.n)
    return Spectrum(bins=plan.x @ dft(samples).bins, domain=Domain.ODAT)


def inverse(spec: Spectrum, plan: TransformPlan) -> np.ndarray:
    if spec.n != plan.n:
        raise DimensionError(f"spectrum length {spec.n} does not match plan length {plan.n}")
    bins = plan.x.conj().T @ spec.bins
    return idft(Spectrum(bins=bins, domain=Domain.DFT))


def transform(frame, plan: TransformPlan, domain: Domain) -> Spectrum:
    if domain is Domain.ODAT:
        return forward(frame, plan)
    return dft(as_frame(frame, plan.n))


def reconstruct(spec: Spectrum, plan: TransformPlan) -> np.ndarray:
    if spec.domain is Domain.ODAT:
        return inverse(spec, plan)
    if spec.n != plan.n:
        raise DimensionError(f"spectrum length {spec.n} does not match plan length {plan.n}")
    return idft(spec)


def compute_kernel(plan: TransformPlan, l: int, m: int) -> complex:
    n = plan.n
    if not (0 <= l < n and 0 <= m < n):
        raise DomainError(f"kernel indices must lie in [0, {n}), got l={l}, m={m}")
    phases = np.exp(2j * np.pi * ((l * np.arange(n)) % n) / n)
    return complex(np.sum(plan.x[m, :] * phases))


def plan_info(plan: TransformPlan) -> dict:
    info = plan.metadata()
    info.update(
        unitarity_residual_tw=unitarity_residual(plan.tw),
        unitarity_residual_x=unitarity_residual(plan.x),
        spreading_metric=spreading_metric(plan.tw),
    )
    return info


def magnitude_db(spec: Spectrum) -> np.ndarray:
    magnitude = np.abs(spec.bins)
    return 20.0 * np.log10(np.maximum(magnitude, np.finfo(np.float64).tiny))


def peak_regions(spec: Spectrum, fs: float, dynamic_range_db: float = PEAK_DYNAMIC_RANGE_DB) -> list[PeakRegion]:
    """Local maxima of the positive-frequency half within dynamic_range_db of the top peak."""
    n = spec.n
    half = n // 2
    levels = magnitude_db(spec)[1:half]
    top = float(np.max(levels))
    regions = []
    for i, level in enumerate(levels):
        left = levels[i - 1] if i > 0 else -np.inf
        right = levels[i + 1] if i + 1 < levels.shape[0] else -np.inf
        if level < left or level < right or level < top - dynamic_range_db:
            continue
        if i > 0 and level == left:
            continue
        floor = level - dynamic_range_db
        lo = i
        while lo > 0 and levels[lo - 1] >= floor:
            lo -= 1
        hi = i
        while hi + 1 < levels.shape[0] and levels[hi + 1] >= floor:
            hi += 1
        regions.append(
            PeakRegion(
                bin=i + 1,
                freq_hz=(i + 1) * fs / n,
                level_db=float(level),
                width_bins=hi - lo + 1,
            )
        )
    return regions


def nearest_peak(regions: list[PeakRegion], freq_hz: float) -> PeakRegion:
    return min(regions, key=lambda r: abs(r.freq_hz - freq_hz))


def upward_spread(spec: Spectrum, fs: float) -> float:
    """Energy-weighted centroid (Hz) of the positive-frequency half."""
    n = spec.n
    half = n // 2
    energy = np.abs(spec.bins[1:half]) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    freqs = np.arange(1, half) * fs / n
    return float(np.sum(freqs * energy) / total)


plan_store = PlanStore(maxsize=settings.plan_cache_size)
