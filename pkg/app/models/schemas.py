import math
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Domain(str, Enum):
    DFT = "dft"
    ODAT = "odat"


class BranchSelection(str, Enum):
    DFT = "dft"
    ODAT = "odat"
    BOTH = "both"

    def domains(self) -> list[Domain]:
        if self is BranchSelection.BOTH:
            return [Domain.DFT, Domain.ODAT]
        return [Domain(self.value)]


class SignConvention(str, Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def factor(self) -> float:
        return 1.0 if self is SignConvention.PLUS else -1.0


class ThresholdSource(str, Enum):
    DFT = "dft"
    ODAT = "odat"


class SegmentPolicy(str, Enum):
    SPLIT = "split"
    SINGLE = "single"


class SignalKind(str, Enum):
    TWO_TONE = "two_tone"
    HARMONIC = "harmonic"
    NOISE_BURST = "noise_burst"
    WAV_SLICE = "wav_slice"
    CSV_SLICE = "csv_slice"


class PropagatorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma1: float = Field(default=0.6, ge=0.0, description="Laplacian weight")
    sigma2: float = Field(default=0.04, ge=0.0, description="Auditory potential weight")
    sign: SignConvention = SignConvention.PLUS

    @field_validator("sigma1", "sigma2")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("sigma must be finite")
        return value


class NoiseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    target_snr_db: float
    seed: int = Field(default=0, ge=0, lt=2**64)
    stream: int = Field(default=0, ge=0, description="Sub-stream index, e.g. the SNR level of a sweep cell")

    @field_validator("target_snr_db")
    @classmethod
    def _finite_target(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("target_snr_db must be finite")
        return value


class DenoiseReport(BaseModel):
    signal: str
    target_snr_db: float
    input_snr_db: float
    output_snr_db_odat: Optional[float] = None
    output_snr_db_dft: Optional[float] = None
    threshold_value: float = Field(ge=0.0)
    bins_kept_odat: Optional[int] = Field(default=None, ge=0)
    bins_kept_dft: Optional[int] = Field(default=None, ge=0)
    seed: int
    generator: str
    threshold_source: ThresholdSource = ThresholdSource.DFT


class SweepSummaryRow(BaseModel):
    signal: str
    target_snr_db: float
    cells: int
    mean_input_snr_db: float
    mean_output_snr_db_dft: Optional[float] = None
    std_output_snr_db_dft: Optional[float] = None
    mean_output_snr_db_odat: Optional[float] = None
    std_output_snr_db_odat: Optional[float] = None


class PeakRegion(BaseModel):
    bin: int
    freq_hz: float
    level_db: float
    width_bins: int


class SignalRecipe(BaseModel):
    kind: SignalKind = SignalKind.TWO_TONE
    fs: float = Field(default=16000.0, gt=0.0)
    n: int = Field(default=256, ge=8)
    tone_freqs: list[float] = Field(default_factory=lambda: [3000.0, 4300.0])
    tone_amps: list[float] = Field(default_factory=lambda: [1.0, 1.0])
    f0: float = Field(default=125.0, gt=0.0)
    partials: int = Field(default=10, ge=1)
    decay: float = Field(default=0.8, ge=0.0)
    burst_alpha: float = Field(default=0.9, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0)
    path: Optional[Path] = None
    offset: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "SignalRecipe":
        if self.n % 2:
            raise ValueError(f"frame length must be even, got {self.n}")
        nyquist = self.fs / 2
        if self.kind is SignalKind.TWO_TONE:
            if len(self.tone_freqs) != len(self.tone_amps):
                raise ValueError("tone_freqs and tone_amps must have equal length")
            if any(f >= nyquist or f < 0 for f in self.tone_freqs):
                raise ValueError(f"tone frequencies must lie in [0, {nyquist}) Hz")
        if self.kind is SignalKind.HARMONIC and self.partials * self.f0 >= nyquist:
            raise ValueError(f"highest partial {self.partials * self.f0} Hz aliases (fs/2 = {nyquist} Hz)")
        if self.kind in (SignalKind.WAV_SLICE, SignalKind.CSV_SLICE) and self.path is None:
            raise ValueError(f"{self.kind.value} recipe requires a path")
        return self


class SweepGrid(BaseModel):
    snr_min_db: float = -12.0
    snr_max_db: float = 12.0
    snr_step_db: float = Field(default=3.0, gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "SweepGrid":
        if self.snr_max_db < self.snr_min_db:
            raise ValueError("snr_max_db must be >= snr_min_db")
        return self

    def levels(self) -> list[float]:
        count = int(math.floor((self.snr_max_db - self.snr_min_db) / self.snr_step_db + 1e-9)) + 1
        return [float(v) for v in self.snr_min_db + self.snr_step_db * np.arange(count)]


class RunConfig(BaseModel):
    recipe: SignalRecipe = Field(default_factory=SignalRecipe)
    sweep_recipe: SignalRecipe = Field(
        default_factory=lambda: SignalRecipe(kind=SignalKind.HARMONIC, n=512)
    )
    propagator: PropagatorConfig = Field(default_factory=PropagatorConfig)
    grid: SweepGrid = Field(default_factory=SweepGrid)
    seeds: list[int] = Field(default_factory=lambda: list(range(20)))
    out_dir: Path = Path("out")
    branch: BranchSelection = BranchSelection.BOTH
    threshold_source: ThresholdSource = ThresholdSource.DFT
    segment_policy: SegmentPolicy = SegmentPolicy.SPLIT
    workers: int = Field(default=1, ge=1)

    @field_validator("seeds")
    @classmethod
    def _nonempty(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("at least one seed is required")
        return value

    def resolved(self) -> dict:
        return self.model_dump(mode="json")


class SpectrumRequest(BaseModel):
    recipe: SignalRecipe = Field(default_factory=SignalRecipe)
    propagator: Optional[PropagatorConfig] = None


class SpectrumResponse(BaseModel):
    status: str = "success"
    n: int
    fs: float
    freqs_hz: list[float]
    dft_db: list[float]
    odat_db: list[float]
    peaks_dft: list[PeakRegion]
    peaks_odat: list[PeakRegion]
    centroid_dft_hz: float
    centroid_odat_hz: float


class DenoiseRequest(BaseModel):
    recipe: SignalRecipe = Field(
        default_factory=lambda: SignalRecipe(kind=SignalKind.HARMONIC, n=512)
    )
    noise: NoiseSpec = Field(default_factory=lambda: NoiseSpec(target_snr_db=0.0))
    propagator: Optional[PropagatorConfig] = None
    threshold_source: ThresholdSource = ThresholdSource.DFT


class PlanInfo(BaseModel):
    n: int
    fs: float
    sigma1: float
    sigma2: float
    sign: SignConvention
    order: int
    unitarity_residual_tw: float
    unitarity_residual_x: float
    spreading_metric: float


class BarkRequest(BaseModel):
    freqs_hz: list[float] = Field(min_length=1, max_length=4096)


class BarkResponse(BaseModel):
    barks: list[float]


class ErrorResponse(BaseModel):
    status: str = "error"
    error: str
    details: Optional[str] = None
