import numpy as np
import pytest
from scipy.io import wavfile

from app.errors import CsvParseError, DomainError, ShortSignalError, UnsupportedWavError
from app.models.schemas import SignalKind, SignalRecipe
from app.services.signals import (
    gen_harmonic,
    gen_noise_burst,
    gen_tones,
    gen_two_tone,
    load_signal,
    read_csv_slice,
    read_wav_slice,
    to_pcm16,
)

FS = 16000.0


class TestGenerators:
    def test_two_tone_spectrum(self):
        frame = gen_two_tone(FS, 3000.0, 5000.0, 1.0, 0.5, 256)
        magnitude = np.abs(np.fft.rfft(frame))
        assert magnitude[48] == pytest.approx(128.0, rel=1e-12)
        assert magnitude[80] == pytest.approx(64.0, rel=1e-12)
        assert np.sum(magnitude > 1e-9) == 2

    def test_aliasing_rejected(self):
        with pytest.raises(DomainError):
            gen_tones(FS, [8000.0], [1.0], 64)

    def test_odd_length_rejected(self):
        with pytest.raises(DomainError):
            gen_tones(FS, [1000.0], [1.0], 63)

    def test_harmonic_partials(self):
        frame = gen_harmonic(FS, 125.0, 10, 0.8, 256)
        magnitude = np.abs(np.fft.rfft(frame))
        partial_bins = 2 * np.arange(1, 11)
        np.testing.assert_allclose(magnitude[partial_bins], 128.0 * 0.8 ** np.arange(10), rtol=1e-10)
        others = np.setdiff1d(np.arange(magnitude.shape[0]), partial_bins)
        assert np.max(magnitude[others]) < 1e-9

    def test_zero_amplitudes(self):
        np.testing.assert_array_equal(gen_two_tone(FS, 3000.0, 4300.0, 0.0, 0.0, 64), np.zeros(64))

    def test_single_partial_and_zero_decay(self):
        tone = gen_tones(FS, [125.0], [1.0], 256)
        np.testing.assert_array_equal(gen_harmonic(FS, 125.0, 1, 0.8, 256), tone)
        np.testing.assert_allclose(gen_harmonic(FS, 125.0, 10, 0.0, 256), tone, atol=1e-15)

    def test_noise_burst_is_seeded_and_highpass(self):
        a = gen_noise_burst(FS, 512, seed=4)
        np.testing.assert_array_equal(a, gen_noise_burst(FS, 512, seed=4))
        assert not np.array_equal(a, gen_noise_burst(FS, 512, seed=5))
        assert np.max(np.abs(a)) == pytest.approx(1.0)
        power = np.abs(np.fft.rfft(a)) ** 2
        assert power[128:].sum() > power[:128].sum()

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_noise_burst_pole_range(self, alpha):
        with pytest.raises(DomainError):
            gen_noise_burst(FS, 64, seed=0, alpha=alpha)


class TestWav:
    def test_pcm16_scaling(self, tmp_path):
        path = tmp_path / "pcm.wav"
        wavfile.write(path, 16000, np.array([-32768, 16384, 0, 32767], dtype=np.int16))
        np.testing.assert_array_equal(read_wav_slice(path, 0, 2), [-1.0, 0.5])
        np.testing.assert_array_equal(read_wav_slice(path, 2, 2), [0.0, 32767 / 32768])

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        wavfile.write(path, 16000, np.zeros((8, 2), dtype=np.int16))
        with pytest.raises(UnsupportedWavError):
            read_wav_slice(path, 0, 4)

    def test_float_rejected(self, tmp_path):
        path = tmp_path / "float.wav"
        wavfile.write(path, 16000, np.zeros(8, dtype=np.float32))
        with pytest.raises(UnsupportedWavError):
            read_wav_slice(path, 0, 4)

    def test_short_file(self, tmp_path):
        path = tmp_path / "short.wav"
        wavfile.write(path, 16000, np.zeros(8, dtype=np.int16))
        with pytest.raises(ShortSignalError) as exc:
            read_wav_slice(path, 4, 8)
        assert exc.value.position == 8
        assert exc.value.exit_code == 3

    def test_not_riff(self, tmp_path):
        path = tmp_path / "garbage.wav"
        path.write_bytes(b"definitely not a wave file")
        with pytest.raises(UnsupportedWavError):
            read_wav_slice(path, 0, 4)

    def test_pcm16_roundtrip(self, tmp_path):
        frame = gen_two_tone(FS, 3000.0, 4300.0, 0.4, 0.4, 64)
        path = tmp_path / "tones.wav"
        wavfile.write(path, 16000, to_pcm16(frame))
        assert np.max(np.abs(read_wav_slice(path, 0, 64) - frame)) <= 1.0 / 32768

    def test_to_pcm16_clips(self):
        np.testing.assert_array_equal(to_pcm16(np.array([2.0, -2.0, 0.5])), [32767, -32768, 16384])


class TestCsv:
    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "frame.csv"
        path.write_text("# header\n0.5\n\n-1.25\n# mid\n3\n")
        np.testing.assert_array_equal(read_csv_slice(path, 0, 3), [0.5, -1.25, 3.0])
        np.testing.assert_array_equal(read_csv_slice(path, 1, 2), [-1.25, 3.0])

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0\n2.0\nabc\n")
        with pytest.raises(CsvParseError) as exc:
            read_csv_slice(path, 0, 2)
        assert exc.value.position == 3
        assert "bad.csv" in str(exc.value)

    def test_short(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("1.0\n2.0\n")
        with pytest.raises(ShortSignalError):
            read_csv_slice(path, 0, 4)


class TestLoadSignal:
    def test_two_tone_recipe(self):
        frame = load_signal(SignalRecipe())
        np.testing.assert_allclose(frame, gen_two_tone(FS, 3000.0, 4300.0, 1.0, 1.0, 256))

    def test_csv_recipe(self, tmp_path):
        path = tmp_path / "frame.csv"
        path.write_text("\n".join(str(v) for v in range(10)))
        frame = load_signal(SignalRecipe(kind=SignalKind.CSV_SLICE, n=8, path=path, offset=2))
        np.testing.assert_array_equal(frame, np.arange(2, 10, dtype=float))

    def test_file_recipe_needs_path(self):
        with pytest.raises(ValueError):
            SignalRecipe(kind=SignalKind.WAV_SLICE)

    def test_aliasing_harmonic_recipe(self):
        with pytest.raises(ValueError):
            SignalRecipe(kind=SignalKind.HARMONIC, f0=1000.0, partials=10)
