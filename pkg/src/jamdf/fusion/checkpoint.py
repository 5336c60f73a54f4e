"""Binary weight checkpoints.

Layout (little endian)::

    b"GJMW" | u32 version | u32 meta_len | meta JSON (utf-8) | u32 n_tensors
    per tensor: u16 name_len | name | u8 ndim | u32 * ndim shape | f64 data

The metadata records the model configuration and target scale.
"""
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagicError, TruncatedFileError, UnsupportedVersionError
from .model import FusionRegressor, ModelConfig

MAGIC = b"GJMW"
VERSION = 1


def save_checkpoint(model: FusionRegressor, path, extra=None):
    meta = {"model": model.config.to_dict(), "scale_m": model.scale_m, "extra": extra or {}}
    blob = json.dumps(meta, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<II", VERSION, len(blob)), blob, struct.pack("<I", len(model.params))]
    for name in sorted(model.params):
        arr = np.ascontiguousarray(model.params[name], dtype="<f8")
        nb = name.encode()
        parts.append(struct.pack("<H", len(nb)) + nb + struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n):
        if self.pos + n > len(self.data):
            raise TruncatedFileError(f"{self.path}: truncated at byte {self.pos} (need {n} more)")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path):
    """Returns ``(model, extra_metadata)``."""
    rd = _Reader(Path(path).read_bytes(), path)
    magic = rd.take(4)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version, meta_len = rd.unpack("<II")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: checkpoint version {version} not supported")
    meta = json.loads(rd.take(meta_len).decode())
    (count,) = rd.unpack("<I")
    params = {}
    for _ in range(count):
        (nlen,) = rd.unpack("<H")
        name = rd.take(nlen).decode()
        (ndim,) = rd.unpack("<B")
        shape = rd.unpack(f"<{ndim}I")
        size = int(np.prod(shape)) if ndim else 1
        params[name] = np.frombuffer(rd.take(8 * size), dtype="<f8").reshape(shape).astype(float)
    model = FusionRegressor(ModelConfig(**meta["model"]), params, float(meta["scale_m"]))
    return model, meta.get("extra", {})
