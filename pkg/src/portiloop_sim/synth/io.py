"""Recording files.

Layout (little-endian)::

    magic      6 bytes  b"PLREC\\x00"
    version    uint16
    rate       float64  sample rate in Hz
    subject    int32
    phase      uint8
    n          uint64   number of samples
    samples    n * float32
    scores     n * float32
    binary     ceil(n / 8) bytes, bit-packed, little bit order
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from ..exceptions import FormatError
from .generator import Recording

__all__ = ["save_recording", "load_recording", "export_csv"]

MAGIC = b"PLREC\x00"
VERSION = 1
_HEADER = struct.Struct("<6sHdiBQ")


def save_recording(recording: Recording, path) -> Path:
    path = Path(path)
    n = len(recording)
    header = _HEADER.pack(MAGIC, VERSION, float(recording.sample_rate), int(recording.subject_id),
                          int(recording.phase), n)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(recording.samples, dtype="<f4").tobytes())
        fh.write(np.asarray(recording.scores, dtype="<f4").tobytes())
        fh.write(np.packbits(np.asarray(recording.binary, dtype=bool), bitorder="little").tobytes())
    return path


def load_recording(path) -> Recording:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, rate, subject, phase, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: not a recording file")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    n_bits = (n + 7) // 8
    expected = _HEADER.size + 8 * n + n_bits
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    pos = _HEADER.size
    samples = np.frombuffer(raw, dtype="<f4", count=n, offset=pos).astype(np.float32)
    scores = np.frombuffer(raw, dtype="<f4", count=n, offset=pos + 4 * n).astype(np.float32)
    bits = np.frombuffer(raw, dtype=np.uint8, count=n_bits, offset=pos + 8 * n)
    binary = np.unpackbits(bits, count=n, bitorder="little").astype(bool)
    return Recording(int(subject), int(phase), samples, scores, binary, float(rate))


def export_csv(recording: Recording, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "sample", "score", "binary"])
        fs = recording.sample_rate
        for i, (s, sc, b) in enumerate(zip(recording.samples, recording.scores, recording.binary)):
            writer.writerow([f"{i / fs:.6f}", f"{s:.9g}", f"{sc:.9g}", int(b)])
    return path
