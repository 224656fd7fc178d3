"""Command-line harness: spectra, denoising sweeps, matrix dumps and signal generation."""

import functools
import logging
import sys
from pathlib import Path

import click
from pydantic import ValidationError

from app.config import build_run_config, load_settings
from app.errors import ConfigError, OdatError
from app.services.experiments import Artifact, experiment_runner

EXIT_IO_ERROR = 3


def _configure_logging(debug: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def _echo(written: list[Artifact]) -> None:
    for artifact in written:
        click.echo(f"{artifact.path}: {artifact.summary}")


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except OdatError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        except ValidationError as e:
            click.echo(f"error: invalid configuration: {e}", err=True)
            ctx.exit(ConfigError.exit_code)
        except OSError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_IO_ERROR)

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None, help="Flat KEY=VALUE settings file")
@click.option("--fs", type=float, default=None, help="Sampling rate in Hz")
@click.option("--n", "n", type=int, default=None, help="Frame length")
@click.option("--sigma1", type=float, default=None, help="Laplacian weight")
@click.option("--sigma2", type=float, default=None, help="Auditory potential weight")
@click.option("--seed", type=int, default=None, help="First noise seed")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None, help="Output directory")
@click.option("--branch", type=click.Choice(["dft", "odat", "both"]), default=None)
@click.option("--debug", is_flag=True, default=False)
@click.pass_context
def main(ctx, config_path, fs, n, sigma1, sigma2, seed, out_dir, branch, debug):
    """Orthogonal discrete auditory transform experiments."""
    _configure_logging(debug)
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["overrides"] = dict(fs=fs, n=n, sigma1=sigma1, sigma2=sigma2, seed=seed, out_dir=out_dir, branch=branch)


def _run_config(ctx, **extra):
    settings = load_settings(ctx.obj["config_path"], **ctx.obj["overrides"], **extra)
    return build_run_config(settings)


@main.command()
@click.option("--signal", type=click.Choice(["two_tone", "harmonic", "noise_burst", "wav_slice", "csv_slice"]), default=None)
@click.pass_context
@handle_errors
def spectrum(ctx, signal):
    """Write DFT and ODAT spectra of one frame."""
    _echo(experiment_runner.run(_run_config(ctx, signal=signal), ["spectrum"]))


@main.command("denoise-sweep")
@click.option("--signal", type=click.Choice(["harmonic", "noise_burst", "two_tone", "wav_slice", "csv_slice"]), default=None)
@click.option("--seeds", "n_seeds", type=int, default=None, help="Number of seeds per SNR level")
@click.option("--workers", type=int, default=None)
@click.pass_context
@handle_errors
def denoise_sweep(ctx, signal, n_seeds, workers):
    """Threshold-denoise a segment over the SNR grid with both transforms."""
    _echo(experiment_runner.run(_run_config(ctx, sweep_signal=signal, n_seeds=n_seeds, workers=workers), ["denoise-sweep"]))


@main.command("dump-matrices")
@click.pass_context
@handle_errors
def dump_matrices(ctx):
    """Write B and the real/imaginary parts of T_w."""
    _echo(experiment_runner.run(_run_config(ctx), ["dump-matrices"]))


@main.command()
@click.option("--signal", type=click.Choice(["two_tone", "harmonic", "noise_burst"]), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "wav"]), default="csv")
@click.pass_context
@handle_errors
def gen(ctx, signal, fmt):
    """Write a generated frame to CSV or PCM16 WAV."""
    _echo(experiment_runner.gen(_run_config(ctx, signal=signal), fmt))


@main.command()
@click.option("--host", default="0.0.0.0")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Serve the HTTP API."""
    import uvicorn

    uvicorn.run("app.main:app", host=host, port=port)


if __name__ == "__main__":
    main()
