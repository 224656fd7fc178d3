"""Atomic CSV/JSON/WAV artifact writers.

Floats are written with 17 significant digits so identical runs give
byte-identical files.
"""

import csv
import io
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel
from scipy.io import wavfile

from app.services.odat_transform import Spectrum
from app.services.signals import to_pcm16

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MATRIX_FORMAT = "%.16e"


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_atomic(path: Path, data: Union[str, bytes]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info(f"Wrote {path} ({len(payload)} bytes)")
    return path


@contextmanager
def staged_outputs(out_dir: Path) -> Iterator[Path]:
    """Yield a scratch directory whose files land in out_dir only if the block succeeds."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(dir=out_dir, prefix=".stage-"))
    try:
        yield stage
        staged = sorted(stage.iterdir())
        for item in staged:
            os.replace(item, out_dir / item.name)
        logger.info(f"Published {len(staged)} file(s) to {out_dir}")
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def dumps_json(obj: Any) -> str:
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json")
    elif isinstance(obj, (list, tuple)):
        obj = [o.model_dump(mode="json") if isinstance(o, BaseModel) else o for o in obj]
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj: Any) -> Path:
    return write_atomic(path, dumps_json(obj))


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.config.json")


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: Optional[dict] = None,
    notes: Sequence[str] = (),
) -> Path:
    buffer = io.StringIO()
    if config is not None:
        buffer.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    for note in notes:
        buffer.write(f"# {note}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return write_atomic(path, buffer.getvalue())


def write_matrix_csv(path: Path, matrix: np.ndarray, config: Optional[dict] = None) -> Path:
    """Row-major, comma-separated, no header; config goes to a sidecar file."""
    buffer = io.StringIO()
    np.savetxt(buffer, np.asarray(matrix, dtype=np.float64), fmt=MATRIX_FORMAT, delimiter=",")
    written = write_atomic(path, buffer.getvalue())
    if config is not None:
        write_json(sidecar_path(path), config)
    return written


SPECTRUM_COLUMNS = ("bin_index", "freq_hz", "re", "im", "magnitude", "log10_magnitude")


def spectrum_rows(spec: Spectrum, fs: float) -> list[tuple]:
    n = spec.n
    magnitude = np.abs(spec.bins)
    log_mag = np.log10(np.maximum(magnitude, np.finfo(np.float64).tiny))
    return [
        (k, k * fs / n, float(spec.bins[k].real), float(spec.bins[k].imag), float(magnitude[k]), float(log_mag[k]))
        for k in range(n)
    ]


def write_spectrum_csv(path: Path, spec: Spectrum, fs: float, config: Optional[dict] = None, notes: Sequence[str] = ()) -> Path:
    return write_csv(path, SPECTRUM_COLUMNS, spectrum_rows(spec, fs), config, [f"domain: {spec.domain.value}", *notes])


def write_frame_csv(path: Path, frame: np.ndarray, config: Optional[dict] = None) -> Path:
    buffer = io.StringIO()
    if config is not None:
        buffer.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    for value in frame:
        buffer.write(FLOAT_FORMAT % value + "\n")
    return write_atomic(path, buffer.getvalue())


def write_wav(path: Path, frame: np.ndarray, fs: float, config: Optional[dict] = None) -> Path:
    buffer = io.BytesIO()
    wavfile.write(buffer, int(round(fs)), to_pcm16(frame))
    written = write_atomic(path, buffer.getvalue())
    if config is not None:
        write_json(sidecar_path(path), config)
    return written
