import logging
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.io import wavfile
from scipy.signal import lfilter

from app.errors import CsvParseError, DomainError, ShortSignalError, UnsupportedWavError
from app.models.schemas import SignalKind, SignalRecipe

logger = logging.getLogger(__name__)

PCM16_SCALE = 32768.0


def _check_band(fs: float, freqs: Sequence[float]) -> None:
    if fs <= 0:
        raise DomainError(f"sampling rate must be positive, got {fs}")
    for f in freqs:
        if f < 0 or f >= fs / 2:
            raise DomainError(f"frequency {f} Hz aliases at fs={fs} Hz (must be < {fs / 2})")


def _check_length(n: int) -> None:
    if n <= 0 or n % 2:
        raise DomainError(f"frame length must be a positive even integer, got {n}")


def gen_tones(fs: float, freqs: Sequence[float], amps: Sequence[float], n: int) -> np.ndarray:
    if len(freqs) != len(amps):
        raise DomainError("every tone needs exactly one amplitude")
    _check_length(n)
    _check_band(fs, freqs)
    t = np.arange(n) / fs
    frame = np.zeros(n)
    for f, a in zip(freqs, amps):
        frame += a * np.sin(2.0 * np.pi * f * t)
    return frame


def gen_two_tone(fs: float, f1: float, f2: float, a1: float, a2: float, n: int) -> np.ndarray:
    return gen_tones(fs, [f1, f2], [a1, a2], n)


def gen_harmonic(fs: float, f0: float, partials: int, decay: float, n: int) -> np.ndarray:
    """Vowel surrogate: partials k*f0 with amplitudes decay**(k-1)."""
    if partials < 1:
        raise DomainError(f"need at least one partial, got {partials}")
    if decay < 0:
        raise DomainError(f"decay must be >= 0, got {decay}")
    ks = np.arange(1, partials + 1)
    return gen_tones(fs, list(ks * f0), list(np.power(float(decay), ks - 1)), n)


def gen_noise_burst(fs: float, n: int, seed: int, alpha: float = 0.9) -> np.ndarray:
    """Consonant surrogate: seeded white noise through y[n] = alpha*(y[n-1] + x[n] - x[n-1])."""
    _check_length(n)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"high-pass pole must lie in (0, 1), got {alpha}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x6E6F6973])))
    white = rng.standard_normal(n)
    burst = lfilter([alpha, -alpha], [1.0, -alpha], white)
    peak = float(np.max(np.abs(burst)))
    return burst / peak if peak > 0 else burst


def read_wav_slice(path: Path, offset: int, n: int, fs: Optional[float] = None) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except ValueError as e:
        raise UnsupportedWavError(f"unreadable RIFF/WAV file: {e}", path) from e

    if data.dtype != np.int16:
        raise UnsupportedWavError(f"only 16-bit PCM is supported, got {data.dtype}", path)
    if data.ndim != 1:
        raise UnsupportedWavError(f"only mono files are supported, got {data.shape[1]} channels", path)
    if offset + n > data.shape[0]:
        raise ShortSignalError(
            f"need samples [{offset}, {offset + n}) but file has {data.shape[0]}", path, data.shape[0]
        )
    if fs is not None and rate != fs:
        logger.warning(f"WAV rate {rate} Hz differs from configured fs={fs} Hz: {path}")
    return data[offset:offset + n].astype(np.float64) / PCM16_SCALE


def read_csv_slice(path: Path, offset: int, n: int) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError as e:
                raise CsvParseError(f"non-numeric value {line!r}", path, line_no) from e
    if offset + n > len(values):
        raise ShortSignalError(f"need samples [{offset}, {offset + n}) but file has {len(values)}", path, len(values))
    return np.asarray(values[offset:offset + n], dtype=np.float64)


def load_signal(recipe: SignalRecipe) -> np.ndarray:
    if recipe.kind is SignalKind.TWO_TONE:
        frame = gen_tones(recipe.fs, recipe.tone_freqs, recipe.tone_amps, recipe.n)
    elif recipe.kind is SignalKind.HARMONIC:
        frame = gen_harmonic(recipe.fs, recipe.f0, recipe.partials, recipe.decay, recipe.n)
    elif recipe.kind is SignalKind.NOISE_BURST:
        frame = gen_noise_burst(recipe.fs, recipe.n, recipe.seed, recipe.burst_alpha)
    elif recipe.kind is SignalKind.WAV_SLICE:
        frame = read_wav_slice(recipe.path, recipe.offset, recipe.n, recipe.fs)
    else:
        frame = read_csv_slice(recipe.path, recipe.offset, recipe.n)

    logger.info(f"Loaded {recipe.kind.value} signal: n={recipe.n}, fs={recipe.fs}")
    return frame


def to_pcm16(frame: np.ndarray) -> np.ndarray:
    scaled = np.round(np.asarray(frame, dtype=np.float64) * PCM16_SCALE)
    return np.clip(scaled, -32768, 32767).astype(np.int16)
