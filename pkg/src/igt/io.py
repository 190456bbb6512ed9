"""Binary tensor container (IGTM) and small JSON helpers.

Layout, little-endian throughout::

    b"IGTM" | version u32 | dtype u8 | ndim u32 | dims u64 * ndim | payload

dtype 0 is float64, dtype 1 is complex128 stored as interleaved (re, im)
float64 pairs.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"IGTM"
VERSION = 1
DTYPE_REAL = 0
DTYPE_COMPLEX = 1


class FormatError(ValueError):
    """Raised when a serialized artifact is malformed."""


def encode_tensor(array) -> bytes:
    array = np.asarray(array)
    if np.iscomplexobj(array):
        code = DTYPE_COMPLEX
        payload = np.ascontiguousarray(array, dtype="<c16").tobytes()
    else:
        code = DTYPE_REAL
        payload = np.ascontiguousarray(array, dtype="<f8").tobytes()
    header = MAGIC + struct.pack("<IBI", VERSION, code, array.ndim)
    header += struct.pack(f"<{array.ndim}Q", *array.shape)
    return header + payload


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < 13 or data[:4] != MAGIC:
        raise FormatError("not an IGTM tensor (bad magic)")
    version, code, ndim = struct.unpack_from("<IBI", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported IGTM version {version}")
    if code not in (DTYPE_REAL, DTYPE_COMPLEX):
        raise FormatError(f"unknown IGTM dtype code {code}")
    offset = 13
    if len(data) < offset + 8 * ndim:
        raise FormatError("truncated IGTM header")
    shape = struct.unpack_from(f"<{ndim}Q", data, offset)
    offset += 8 * ndim
    dtype = np.dtype("<c16") if code == DTYPE_COMPLEX else np.dtype("<f8")
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    expected = count * dtype.itemsize
    if len(data) - offset != expected:
        raise FormatError(
            f"IGTM payload has {len(data) - offset} bytes, expected {expected}")
    out = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    return out.reshape(shape).astype(dtype.newbyteorder("="))


def save_tensor(path, array) -> None:
    Path(path).write_bytes(encode_tensor(array))


def load_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


def dump_json(path, obj) -> None:
    # repr-precision floats round-trip exactly (17 significant digits)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())
