import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from app.errors import ConfigError
from app.models.schemas import Domain, RunConfig, SegmentPolicy, SignalKind, SignalRecipe
from app.services import artifacts
from app.services.denoiser import mean_output_gap, summarize, sweep
from app.services.odat_transform import (
    PlanStore,
    TransformPlan,
    dft,
    forward,
    peak_regions,
    plan_info,
    plan_store,
    upward_spread,
)
from app.services.signals import load_signal

logger = logging.getLogger(__name__)

SURROGATE_NOTES = {
    SignalKind.HARMONIC: "surrogate: harmonic vowel stand-in (partials k*f0, amplitudes decay**(k-1)); fs is a design default",
    SignalKind.NOISE_BURST: "surrogate: consonant stand-in (seeded white noise through a single-pole high-pass); fs is a design default",
    SignalKind.TWO_TONE: "fs is a design default, not taken from the source experiment",
}

REPORT_COLUMNS = (
    "signal",
    "target_snr_db",
    "seed",
    "input_snr_db",
    "output_snr_db_dft",
    "output_snr_db_odat",
    "threshold_value",
    "bins_kept_dft",
    "bins_kept_odat",
    "threshold_source",
    "generator",
)

SUMMARY_COLUMNS = (
    "signal",
    "target_snr_db",
    "cells",
    "mean_input_snr_db",
    "mean_output_snr_db_dft",
    "std_output_snr_db_dft",
    "mean_output_snr_db_odat",
    "std_output_snr_db_odat",
)


@dataclass(frozen=True)
class Artifact:
    path: Path
    summary: str


def _notes(recipe: SignalRecipe) -> list[str]:
    note = SURROGATE_NOTES.get(recipe.kind)
    return [note] if note else []


class ExperimentRunner:
    """Runs the offline experiments; each command publishes all of its files or none."""

    def __init__(self, store: PlanStore):
        self.store = store

    def plan_for(self, config: RunConfig, n: int, fs: float) -> TransformPlan:
        return self.store.get(n, fs, config.propagator)

    def sweep_plan(self, config: RunConfig) -> TransformPlan:
        segment = config.sweep_recipe
        if config.segment_policy is SegmentPolicy.SINGLE:
            return self.plan_for(config, segment.n, segment.fs)
        if segment.n % config.recipe.n:
            raise ConfigError(f"segment length {segment.n} is not a multiple of frame length {config.recipe.n}")
        return self.plan_for(config, config.recipe.n, segment.fs)

    def spectrum(self, config: RunConfig) -> list[Artifact]:
        recipe = config.recipe
        frame = load_signal(recipe)
        plan = self.plan_for(config, recipe.n, recipe.fs)
        resolved = config.resolved()
        notes = _notes(recipe)

        spectra = {Domain.DFT: dft(frame), Domain.ODAT: forward(frame, plan)}
        peaks = {
            domain.value: {
                "peaks": [p.model_dump() for p in peak_regions(spec, recipe.fs)],
                "centroid_hz": upward_spread(spec, recipe.fs),
            }
            for domain, spec in spectra.items()
        }

        written = []
        with artifacts.staged_outputs(config.out_dir) as stage:
            for domain in config.branch.domains():
                name = f"spectrum_{domain.value}.csv"
                artifacts.write_spectrum_csv(stage / name, spectra[domain], recipe.fs, resolved, notes)
                top = max(peaks[domain.value]["peaks"], key=lambda p: p["level_db"])
                written.append(
                    Artifact(
                        config.out_dir / name,
                        f"{domain.value} spectrum, {recipe.n} bins, top peak {top['level_db']:.2f} dB at {top['freq_hz']:.1f} Hz",
                    )
                )

            artifacts.write_json(
                stage / "spectrum_peaks.json", {"config": resolved, "plan": plan.metadata(), "notes": notes, **peaks}
            )
        written.append(
            Artifact(
                config.out_dir / "spectrum_peaks.json",
                f"centroid dft={peaks['dft']['centroid_hz']:.1f} Hz, odat={peaks['odat']['centroid_hz']:.1f} Hz",
            )
        )
        return written

    def denoise_sweep(self, config: RunConfig) -> list[Artifact]:
        recipe = config.sweep_recipe
        clean = load_signal(recipe)
        plan = self.sweep_plan(config)
        levels = config.grid.levels()
        branches = config.branch.domains()

        reports = sweep(
            clean,
            plan,
            levels,
            config.seeds,
            threshold_source=config.threshold_source,
            workers=config.workers,
            signal=recipe.kind.value,
            branches=branches,
        )
        rows = summarize(reports)
        resolved = config.resolved()
        notes = _notes(recipe) + [
            f"plan: {plan.metadata()}",
            f"segment_policy: {config.segment_policy.value}",
            f"branches: {'+'.join(b.value for b in branches)}",
        ]

        with artifacts.staged_outputs(config.out_dir) as stage:
            json_path = stage / "denoise_reports.json"
            artifacts.write_json(json_path, reports)
            artifacts.write_json(artifacts.sidecar_path(json_path), {"config": resolved, "notes": notes})
            artifacts.write_csv(
                stage / "denoise_reports.csv",
                REPORT_COLUMNS,
                ([r.model_dump(mode="json")[c] for c in REPORT_COLUMNS] for r in reports),
                resolved,
                notes,
            )
            artifacts.write_csv(
                stage / "sweep_summary.csv",
                SUMMARY_COLUMNS,
                ([getattr(r, c) for c in SUMMARY_COLUMNS] for r in rows),
                resolved,
                notes,
            )

        gaps = list(mean_output_gap(rows).values())
        gap_text = f"mean odat-dft gap {np.mean(gaps):+.3f} dB" if gaps else f"{branches[0].value} only"
        return [
            Artifact(config.out_dir / "denoise_reports.json", f"{len(reports)} reports ({len(levels)} levels x {len(config.seeds)} seeds)"),
            Artifact(config.out_dir / "denoise_reports.csv", f"{len(reports)} rows"),
            Artifact(config.out_dir / "sweep_summary.csv", f"{len(rows)} levels, {gap_text}"),
        ]

    def dump_matrices(self, config: RunConfig) -> list[Artifact]:
        recipe = config.recipe
        plan = self.plan_for(config, recipe.n, recipe.fs)
        info = plan_info(plan)
        sidecar = {"config": config.resolved(), "plan": info}

        with artifacts.staged_outputs(config.out_dir) as stage:
            artifacts.write_matrix_csv(stage / "spreading_matrix.csv", plan.potential, sidecar)
            artifacts.write_matrix_csv(stage / "tw_real.csv", plan.tw.real, sidecar)
            artifacts.write_matrix_csv(stage / "tw_imag.csv", plan.tw.imag, sidecar)

        order = plan.order
        return [
            Artifact(config.out_dir / "spreading_matrix.csv", f"B {order}x{order}"),
            Artifact(
                config.out_dir / "tw_real.csv",
                f"Re(T_w) {order}x{order}, unitarity residual {info['unitarity_residual_tw']:.2e}",
            ),
            Artifact(
                config.out_dir / "tw_imag.csv",
                f"Im(T_w) {order}x{order}, spreading metric {info['spreading_metric']:.4f}",
            ),
        ]

    def gen(self, config: RunConfig, fmt: str = "csv") -> list[Artifact]:
        recipe = config.recipe
        frame = load_signal(recipe)
        resolved = config.resolved()
        name = f"{recipe.kind.value}.{fmt}"
        with artifacts.staged_outputs(config.out_dir) as stage:
            if fmt == "wav":
                artifacts.write_wav(stage / name, frame, recipe.fs, resolved)
            elif fmt == "csv":
                artifacts.write_frame_csv(stage / name, frame, resolved)
            else:
                raise ConfigError(f"unknown output format: {fmt}")
        return [Artifact(config.out_dir / name, f"{recipe.kind.value} frame, {recipe.n} samples at {recipe.fs} Hz")]

    def run(self, config: RunConfig, commands: Sequence[str]) -> list[Artifact]:
        handlers: dict[str, Callable[[RunConfig], list[Artifact]]] = {
            "spectrum": self.spectrum,
            "denoise-sweep": self.denoise_sweep,
            "dump-matrices": self.dump_matrices,
            "gen": self.gen,
        }
        unknown = [c for c in commands if c not in handlers]
        if unknown:
            raise ConfigError(f"unknown command(s): {', '.join(unknown)}")
        written = []
        for command in commands:
            logger.info(f"Running {command}")
            written.extend(handlers[command](config))
        return written


experiment_runner = ExperimentRunner(plan_store)
