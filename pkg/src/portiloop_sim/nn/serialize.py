"""Weights files.

Layout (little-endian)::

    magic     8 bytes  b"PLWEIGHT"
    version   uint16
    spec_len  uint32
    spec      spec_len bytes of UTF-8 JSON (sorted keys)
    tensors   float32, in declaration order, sizes implied by the spec
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..exceptions import FormatError, ParameterError
from .network import Network, NetworkSpec, _param_shapes, spec_to_json

__all__ = ["save_weights", "load_weights"]

MAGIC = b"PLWEIGHT"
VERSION = 1
_HEADER = struct.Struct("<8sHI")


def save_weights(net: Network, path) -> Path:
    path = Path(path)
    spec_bytes = spec_to_json(net.spec).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(spec_bytes)))
        fh.write(spec_bytes)
        for name, _ in _param_shapes(net.spec):
            fh.write(np.asarray(net.params[name], dtype="<f4").tobytes())
    return path


def load_weights(path, spec: NetworkSpec | None = None, dtype=np.float32) -> Network:
    """Read a weights file; when ``spec`` is given it must equal the stored one."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, spec_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: not a weights file")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    pos = _HEADER.size
    if len(raw) < pos + spec_len:
        raise FormatError(f"{path}: truncated spec")
    try:
        stored = NetworkSpec.from_dict(json.loads(raw[pos:pos + spec_len].decode("utf-8")))
    except (ValueError, TypeError, ParameterError) as exc:
        raise FormatError(f"{path}: invalid spec ({exc})") from exc
    if spec is not None and spec != stored:
        diff = {k: (v, getattr(spec, k)) for k, v in stored.to_dict().items() if getattr(spec, k) != v}
        raise FormatError(f"{path}: spec mismatch (stored vs requested): {diff}")
    pos += spec_len
    shapes = _param_shapes(stored)
    expected = pos + 4 * sum(int(np.prod(s)) for _, s in shapes)
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    params = {}
    for name, shape in shapes:
        count = int(np.prod(shape))
        params[name] = np.frombuffer(raw, dtype="<f4", count=count, offset=pos).reshape(shape).copy()
        pos += 4 * count
    return Network(stored, params, dtype=dtype)
