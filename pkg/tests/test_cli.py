import json

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.io import wavfile

from app.cli import main
from app.services import artifacts
from tests.helpers import data_rows


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, out_dir, *args):
    return runner.invoke(main, ["--out", str(out_dir), *args])


def test_spectrum_writes_both_branches(runner, tmp_path):
    result = invoke(runner, tmp_path, "spectrum")
    assert result.exit_code == 0, result.output
    for name in ("spectrum_dft.csv", "spectrum_odat.csv"):
        rows = data_rows(tmp_path / name)
        assert rows[0] == "bin_index,freq_hz,re,im,magnitude,log10_magnitude"
        assert len(rows) == 1 + 256
    peaks = json.loads((tmp_path / "spectrum_peaks.json").read_text())
    assert len(peaks["dft"]["peaks"]) == 2
    assert peaks["config"]["propagator"]["sigma1"] == 0.6


def test_spectrum_header_records_config(runner, tmp_path):
    invoke(runner, tmp_path, "--branch", "odat", "spectrum")
    assert not (tmp_path / "spectrum_dft.csv").exists()
    first, second = (tmp_path / "spectrum_odat.csv").read_text().splitlines()[:2]
    assert first.startswith("# config: ")
    assert json.loads(first[len("# config: "):])["recipe"]["n"] == 256
    assert second == "# domain: odat"


def test_denoise_sweep_is_reproducible(runner, tmp_path):
    result = invoke(runner, tmp_path, "denoise-sweep", "--seeds", "2")
    assert result.exit_code == 0, result.output
    reports = json.loads((tmp_path / "denoise_reports.json").read_text())
    assert len(reports) == 9 * 2
    assert {r["seed"] for r in reports} == {0, 1}
    assert len(data_rows(tmp_path / "sweep_summary.csv")) == 1 + 9

    names = ("denoise_reports.json", "denoise_reports.csv", "sweep_summary.csv")
    before = {name: (tmp_path / name).read_bytes() for name in names}
    assert invoke(runner, tmp_path, "denoise-sweep", "--seeds", "2").exit_code == 0
    for name in names:
        assert (tmp_path / name).read_bytes() == before[name]


def test_dump_matrices(runner, tmp_path):
    result = invoke(runner, tmp_path, "dump-matrices")
    assert result.exit_code == 0, result.output
    for name in ("spreading_matrix.csv", "tw_real.csv", "tw_imag.csv"):
        matrix = np.loadtxt(tmp_path / name, delimiter=",")
        assert matrix.shape == (127, 127)
    b = np.loadtxt(tmp_path / "spreading_matrix.csv", delimiter=",")
    np.testing.assert_array_equal(b, b.T)
    sidecar = json.loads((tmp_path / "tw_real.config.json").read_text())
    assert sidecar["plan"]["unitarity_residual_tw"] <= 1e-10


def test_gen_wav(runner, tmp_path):
    result = invoke(runner, tmp_path, "gen", "--signal", "two_tone", "--format", "wav")
    assert result.exit_code == 0, result.output
    rate, data = wavfile.read(tmp_path / "two_tone.wav")
    assert rate == 16000
    assert data.dtype == np.int16
    assert data.shape == (256,)


def test_gen_csv_then_spectrum_from_file(runner, tmp_path):
    assert invoke(runner, tmp_path, "gen", "--signal", "harmonic").exit_code == 0
    config = tmp_path / "run.env"
    config.write_text(f"ODAT_SIGNAL=csv_slice\nODAT_SIGNAL_PATH={tmp_path / 'harmonic.csv'}\n")
    result = invoke(runner, tmp_path, "--config", str(config), "spectrum")
    assert result.exit_code == 0, result.output
    assert len(data_rows(tmp_path / "spectrum_odat.csv")) == 1 + 256


def test_config_file_sets_frame_length(runner, tmp_path):
    config = tmp_path / "run.env"
    config.write_text("ODAT_N=64\n")
    result = invoke(runner, tmp_path, "--config", str(config), "spectrum")
    assert result.exit_code == 0, result.output
    assert len(data_rows(tmp_path / "spectrum_dft.csv")) == 1 + 64


def test_flags_override_config_file(runner, tmp_path):
    config = tmp_path / "run.env"
    config.write_text("ODAT_N=64\n")
    result = invoke(runner, tmp_path, "--config", str(config), "--n", "128", "spectrum")
    assert result.exit_code == 0, result.output
    assert len(data_rows(tmp_path / "spectrum_dft.csv")) == 1 + 128


def test_missing_config_file(runner, tmp_path):
    result = invoke(runner, tmp_path, "--config", str(tmp_path / "nope.env"), "spectrum")
    assert result.exit_code == 2


def test_negative_sigma(runner, tmp_path):
    result = invoke(runner, tmp_path, "--sigma1", "-1", "spectrum")
    assert result.exit_code == 2


def test_short_csv_signal(runner, tmp_path):
    short = tmp_path / "short.csv"
    short.write_text("0.1\n0.2\n")
    config = tmp_path / "run.env"
    config.write_text(f"ODAT_SIGNAL=csv_slice\nODAT_SIGNAL_PATH={short}\n")
    result = invoke(runner, tmp_path, "--config", str(config), "spectrum")
    assert result.exit_code == 3


def test_denoise_sweep_honours_branch(runner, tmp_path):
    result = invoke(runner, tmp_path, "--branch", "dft", "denoise-sweep", "--seeds", "1")
    assert result.exit_code == 0, result.output
    reports = json.loads((tmp_path / "denoise_reports.json").read_text())
    assert len(reports) == 9
    assert all(r["output_snr_db_odat"] is None and r["bins_kept_odat"] is None for r in reports)
    assert all(r["output_snr_db_dft"] is not None for r in reports)
    summary = data_rows(tmp_path / "sweep_summary.csv")
    header = summary[0].split(",")
    first = dict(zip(header, summary[1].split(",")))
    assert first["mean_output_snr_db_odat"] == ""
    assert first["mean_output_snr_db_dft"] != ""


def test_failed_sweep_leaves_no_files(runner, tmp_path, monkeypatch):
    def disk_full(*args, **kwargs):
        raise OSError(28, "No space left on device")

    monkeypatch.setattr(artifacts, "write_csv", disk_full)
    result = invoke(runner, tmp_path, "denoise-sweep", "--seeds", "1")
    assert result.exit_code == 3
    assert list(tmp_path.iterdir()) == []


def test_failed_matrix_dump_keeps_earlier_outputs(runner, tmp_path, monkeypatch):
    assert invoke(runner, tmp_path, "dump-matrices").exit_code == 0
    before = {p.name: p.read_bytes() for p in tmp_path.iterdir()}

    write_matrix_csv = artifacts.write_matrix_csv
    calls = []

    def fail_on_third(path, matrix, config=None):
        calls.append(path)
        if len(calls) == 3:
            raise OSError(28, "No space left on device")
        return write_matrix_csv(path, np.zeros_like(matrix), config)

    monkeypatch.setattr(artifacts, "write_matrix_csv", fail_on_third)
    result = invoke(runner, tmp_path, "dump-matrices")
    assert result.exit_code == 3
    assert {p.name: p.read_bytes() for p in tmp_path.iterdir()} == before


def test_eigensolver_failure_exits_with_numerical_code(runner, tmp_path, monkeypatch):
    def no_convergence(matrix):
        raise np.linalg.LinAlgError("Eigenvalues did not converge")

    monkeypatch.setattr(np.linalg, "eigh", no_convergence)
    result = invoke(runner, tmp_path, "--sigma1", "0.613", "dump-matrices")
    assert result.exit_code == 4
    assert "did not converge" in result.output
    assert list(tmp_path.iterdir()) == []
