import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import Optional, Sequence

import numpy as np

from app.errors import DimensionError, DomainError
from app.models.schemas import (
    DenoiseReport,
    Domain,
    NoiseSpec,
    SweepSummaryRow,
    ThresholdSource,
)
from app.services.odat_transform import (
    Spectrum,
    TransformPlan,
    as_frame,
    dft,
    reconstruct,
    transform,
)

logger = logging.getLogger(__name__)

GENERATOR_NAME = "numpy.random.PCG64(SeedSequence([seed, stream])).standard_normal"


def noise_generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def energy(frame: np.ndarray) -> float:
    return float(np.dot(frame, frame))


def add_noise(clean, spec: NoiseSpec) -> np.ndarray:
    signal = as_frame(clean)
    clean_energy = energy(signal)
    if clean_energy == 0.0:
        raise DomainError("cannot set an SNR against a zero-energy frame")

    noise = noise_generator(spec.seed, spec.stream).standard_normal(signal.shape[0])
    # Scale against the realized noise norm so the SNR is exact, not expected.
    scale = math.sqrt(clean_energy / (energy(noise) * 10.0 ** (spec.target_snr_db / 10.0)))
    return signal + scale * noise


def compute_threshold(noisy) -> float:
    bins = dft(noisy).bins
    return float(np.mean(np.abs(bins)))


def threshold_spectrum(spec: Spectrum, tau: float) -> Spectrum:
    if tau < 0 or not math.isfinite(tau):
        raise DomainError(f"threshold must be a finite value >= 0, got {tau}")
    keep = np.abs(spec.bins) >= tau
    return Spectrum(bins=np.where(keep, spec.bins, 0.0 + 0.0j), domain=spec.domain)


def _denoise_frame(
    noisy: np.ndarray,
    plan: TransformPlan,
    branch: Domain,
    threshold_source: ThresholdSource,
) -> tuple[np.ndarray, int, float]:
    spec = transform(noisy, plan, branch)
    if branch is Domain.ODAT and threshold_source is ThresholdSource.ODAT:
        tau = float(np.mean(np.abs(spec.bins)))
    else:
        tau = compute_threshold(noisy)
    kept = threshold_spectrum(spec, tau)
    bins_kept = int(np.count_nonzero(np.abs(spec.bins) >= tau))
    return reconstruct(kept, plan), bins_kept, tau


def denoise(
    noisy,
    plan: TransformPlan,
    branch: Domain,
    threshold_source: ThresholdSource = ThresholdSource.DFT,
) -> np.ndarray:
    frame = as_frame(noisy, plan.n)
    denoised, _, _ = _denoise_frame(frame, plan, branch, threshold_source)
    return denoised


def denoise_segment(
    noisy,
    plan: TransformPlan,
    branch: Domain,
    threshold_source: ThresholdSource = ThresholdSource.DFT,
) -> tuple[np.ndarray, int, float]:
    """Denoise consecutive non-overlapping plan-length frames, one threshold per frame.

    Returns the concatenated output, total bins kept and the mean frame threshold.
    """
    segment = as_frame(noisy)
    if segment.shape[0] % plan.n:
        raise DimensionError(f"segment length {segment.shape[0]} is not a multiple of plan length {plan.n}")
    outputs, kept_total, thresholds = [], 0, []
    for frame in segment.reshape(-1, plan.n):
        denoised, kept, tau = _denoise_frame(frame, plan, branch, threshold_source)
        outputs.append(denoised)
        kept_total += kept
        thresholds.append(tau)
    return np.concatenate(outputs), kept_total, float(np.mean(thresholds))


def snr_db(reference, estimate) -> float:
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.shape != est.shape:
        raise DimensionError(f"reference {ref.shape} and estimate {est.shape} differ in length")
    ref_energy = energy(ref)
    if ref_energy == 0.0:
        raise DomainError("SNR is undefined for a zero-energy reference")
    err_energy = energy(ref - est)
    if err_energy == 0.0:
        return math.inf
    return 10.0 * math.log10(ref_energy / err_energy)


def _sweep_cell(
    clean: np.ndarray,
    plan: TransformPlan,
    level_index: int,
    target: float,
    seed: int,
    threshold_source: ThresholdSource,
    signal: str,
    branches: Sequence[Domain],
) -> DenoiseReport:
    noisy = add_noise(clean, NoiseSpec(target_snr_db=target, seed=seed, stream=level_index))
    fields, thresholds = {}, {}
    for branch in branches:
        out, kept, tau = denoise_segment(noisy, plan, branch, threshold_source)
        fields[f"output_snr_db_{branch.value}"] = snr_db(clean, out)
        fields[f"bins_kept_{branch.value}"] = kept
        thresholds[branch] = tau
    report = DenoiseReport(
        signal=signal,
        target_snr_db=target,
        input_snr_db=snr_db(clean, noisy),
        threshold_value=thresholds.get(Domain.DFT, thresholds.get(Domain.ODAT)),
        seed=seed,
        generator=GENERATOR_NAME,
        threshold_source=threshold_source,
        **fields,
    )
    logger.debug(
        f"Sweep cell {signal} snr={target:+.1f}dB seed={seed}: "
        f"dft={report.output_snr_db_dft}dB odat={report.output_snr_db_odat}dB"
    )
    return report


def sweep(
    clean,
    plan: TransformPlan,
    snrs: Sequence[float],
    seeds: Sequence[int],
    threshold_source: ThresholdSource = ThresholdSource.DFT,
    workers: int = 1,
    signal: str = "signal",
    branches: Sequence[Domain] = (Domain.DFT, Domain.ODAT),
) -> list[DenoiseReport]:
    if not snrs or not seeds:
        raise DomainError("sweep needs at least one SNR level and one seed")
    if not branches:
        raise DomainError("sweep needs at least one branch")
    segment = as_frame(clean)
    cells = list(product(enumerate(snrs), seeds))

    def run_cell(cell) -> DenoiseReport:
        (level_index, target), seed = cell
        return _sweep_cell(segment, plan, level_index, float(target), seed, threshold_source, signal, branches)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run_cell, cells))
    else:
        reports = [run_cell(cell) for cell in cells]

    names = "+".join(b.value for b in branches)
    logger.info(f"Sweep '{signal}' [{names}]: {len(snrs)} levels x {len(seeds)} seeds = {len(reports)} cells")
    return reports


def _finite_stats(values: list[Optional[float]]) -> tuple[Optional[float], Optional[float]]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    finite = [v for v in present if math.isfinite(v)]
    if not finite:
        return math.nan, math.nan
    return float(np.mean(finite)), float(np.std(finite))


def summarize(reports: Sequence[DenoiseReport]) -> list[SweepSummaryRow]:
    """Per (signal, level) means; infinite SNR sentinels are left out of the averages."""
    groups: dict[tuple[str, float], list[DenoiseReport]] = {}
    for report in reports:
        groups.setdefault((report.signal, report.target_snr_db), []).append(report)

    rows = []
    for (signal, target), cell_reports in groups.items():
        mean_in, _ = _finite_stats([r.input_snr_db for r in cell_reports])
        mean_dft, std_dft = _finite_stats([r.output_snr_db_dft for r in cell_reports])
        mean_odat, std_odat = _finite_stats([r.output_snr_db_odat for r in cell_reports])
        rows.append(
            SweepSummaryRow(
                signal=signal,
                target_snr_db=target,
                cells=len(cell_reports),
                mean_input_snr_db=mean_in,
                mean_output_snr_db_dft=mean_dft,
                std_output_snr_db_dft=std_dft,
                mean_output_snr_db_odat=mean_odat,
                std_output_snr_db_odat=std_odat,
            )
        )
    return rows


def mean_output_gap(rows: Sequence[SweepSummaryRow], max_snr_db: Optional[float] = None) -> dict[float, float]:
    """ODAT minus DFT mean output SNR per level, optionally only for levels <= max_snr_db.

    Levels where either branch was not run are left out.
    """
    return {
        row.target_snr_db: row.mean_output_snr_db_odat - row.mean_output_snr_db_dft
        for row in rows
        if (max_snr_db is None or row.target_snr_db <= max_snr_db)
        and row.mean_output_snr_db_odat is not None
        and row.mean_output_snr_db_dft is not None
    }
