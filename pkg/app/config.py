from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.errors import ConfigError
from app.models.schemas import (
    BranchSelection,
    PropagatorConfig,
    RunConfig,
    SegmentPolicy,
    SignConvention,
    SignalKind,
    SignalRecipe,
    SweepGrid,
    ThresholdSource,
)


class Settings(BaseSettings):
    app_name: str = "Orthogonal Discrete Auditory Transform API"
    version: str = "1.0.0"
    debug: bool = False

    fs: float = 16000.0
    n: int = 256
    sigma1: float = 0.6
    sigma2: float = 0.04
    sign: SignConvention = SignConvention.PLUS

    signal: SignalKind = SignalKind.TWO_TONE
    sweep_signal: SignalKind = SignalKind.HARMONIC
    tone1_hz: float = 3000.0
    tone2_hz: float = 4300.0
    tone1_amp: float = 1.0
    tone2_amp: float = 1.0
    f0_hz: float = 125.0
    partials: int = 10
    decay: float = 0.8
    burst_alpha: float = 0.9
    signal_path: Optional[Path] = None
    signal_offset: int = 0

    snr_min_db: float = -12.0
    snr_max_db: float = 12.0
    snr_step_db: float = 3.0
    seed: int = 0
    n_seeds: int = 20
    segment_length: int = 512
    segment_policy: SegmentPolicy = SegmentPolicy.SPLIT
    threshold_source: ThresholdSource = ThresholdSource.DFT
    branch: BranchSelection = BranchSelection.BOTH
    workers: int = 1

    out_dir: Path = Path("out")

    plan_cache_size: int = 8
    rate_limit: str = "30/minute"
    cors_origins: list[str] = []

    model_config = SettingsConfigDict(
        env_prefix="ODAT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    def propagator(self) -> PropagatorConfig:
        return PropagatorConfig(sigma1=self.sigma1, sigma2=self.sigma2, sign=self.sign)

    def recipe(self, kind: Optional[SignalKind] = None, n: Optional[int] = None) -> SignalRecipe:
        return SignalRecipe(
            kind=kind or self.signal,
            fs=self.fs,
            n=n or self.n,
            tone_freqs=[self.tone1_hz, self.tone2_hz],
            tone_amps=[self.tone1_amp, self.tone2_amp],
            f0=self.f0_hz,
            partials=self.partials,
            decay=self.decay,
            burst_alpha=self.burst_alpha,
            seed=self.seed,
            path=self.signal_path,
            offset=self.signal_offset,
        )

    def run_config(self) -> RunConfig:
        return RunConfig(
            recipe=self.recipe(),
            sweep_recipe=self.recipe(kind=self.sweep_signal, n=self.segment_length),
            propagator=self.propagator(),
            grid=SweepGrid(
                snr_min_db=self.snr_min_db,
                snr_max_db=self.snr_max_db,
                snr_step_db=self.snr_step_db,
            ),
            seeds=list(range(self.seed, self.seed + self.n_seeds)),
            out_dir=self.out_dir,
            branch=self.branch,
            threshold_source=self.threshold_source,
            segment_policy=self.segment_policy,
            workers=self.workers,
        )


@lru_cache()
def get_settings() -> Settings:
    return Settings()


def load_settings(config_path: Optional[Path] = None, **overrides: Any) -> Settings:
    if config_path is not None and not Path(config_path).is_file():
        raise ConfigError(f"config file not found: {config_path}")
    values = {k: v for k, v in overrides.items() if v is not None}
    try:
        if config_path is not None:
            return Settings(_env_file=config_path, **values)
        return Settings(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def build_run_config(settings: Settings) -> RunConfig:
    try:
        return settings.run_config()
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e
