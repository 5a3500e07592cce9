"""Raw signal files: little-endian float32 arrays or CSV columns, with a key=value sidecar."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..exceptions import FormatError

__all__ = ["read_raw_signal", "write_raw_signal", "read_sidecar", "sidecar_path"]


def sidecar_path(path) -> Path:
    """``signal.f32`` -> ``signal.f32.cfg``."""
    path = Path(path)
    return path.with_name(path.name + ".cfg")


def read_sidecar(path) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg[key] = value
    return cfg


def read_raw_signal(path, column=0, sample_rate: float | None = None) -> tuple[np.ndarray, float]:
    """Load a raw signal and its sampling rate.

    ``.csv`` files are read as one numeric column (index or header name);
    anything else is read as little-endian float32. The rate comes from
    ``sample_rate`` if given, otherwise from the ``sample_rate`` key of the
    sidecar file next to ``path``.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        samples = _read_csv_column(path, column)
    else:
        raw = path.read_bytes()
        if len(raw) % 4:
            raise FormatError(f"{path}: size {len(raw)} is not a multiple of 4 bytes")
        samples = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if sample_rate is None:
        side = sidecar_path(path)
        if not side.exists():
            raise FormatError(f"{path}: no sample_rate given and sidecar {side.name} not found")
        cfg = read_sidecar(side)
        if "sample_rate" not in cfg:
            raise FormatError(f"{side}: missing sample_rate key")
        try:
            sample_rate = float(cfg["sample_rate"])
        except ValueError as exc:
            raise FormatError(f"{side}: bad sample_rate {cfg['sample_rate']!r}") from exc
    return samples, float(sample_rate)


def _read_csv_column(path: Path, column) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    header = None
    try:
        float(rows[0][0])
    except ValueError:
        header, rows = rows[0], rows[1:]
    if isinstance(column, str):
        if header is None or column not in header:
            raise FormatError(f"{path}: column {column!r} not found")
        column = header.index(column)
    try:
        return np.array([float(row[column]) for row in rows], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: non-numeric or missing value in column {column}") from exc


def write_raw_signal(path, samples, sample_rate: float) -> Path:
    """Write float32 samples and the sidecar holding ``sample_rate``."""
    path = Path(path)
    np.asarray(samples, dtype="<f4").tofile(path)
    sidecar_path(path).write_text(f"sample_rate={float(sample_rate):g}\n", encoding="utf-8")
    return path
