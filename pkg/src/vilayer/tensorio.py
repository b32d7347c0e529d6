"""Tensor and image file I/O.

Tensors are stored in the VLT1 format: one ASCII header line
``VLT1 <ndims> <d1> ... <dn>`` followed by the little-endian float64
payload in row-major order.
"""

import os
import tempfile
from pathlib import Path

import numpy as np

MAGIC = "VLT1"


class FormatError(ValueError):
    """Raised when a file does not follow the expected layout."""


def atomic_write_bytes(path, data: bytes):
    """Write ``data`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def encode_tensor(array) -> bytes:
    array = np.asarray(array, dtype=np.float64)
    dims = " ".join(str(d) for d in array.shape)
    header = f"{MAGIC} {array.ndim}" + (f" {dims}" if dims else "") + "\n"
    payload = np.ascontiguousarray(array, dtype="<f8").tobytes()
    return header.encode("ascii") + payload


def decode_tensor(data: bytes) -> np.ndarray:
    newline = data.find(b"\n")
    if newline < 0:
        raise FormatError("missing VLT1 header line")
    fields = data[:newline].decode("ascii", errors="replace").split()
    if not fields or fields[0] != MAGIC:
        raise FormatError(f"bad magic {fields[:1]!r}, expected {MAGIC!r}")
    try:
        ndims = int(fields[1])
        dims = tuple(int(d) for d in fields[2:])
    except (IndexError, ValueError) as exc:
        raise FormatError("malformed VLT1 header") from exc
    if len(dims) != ndims or any(d < 1 for d in dims):
        raise FormatError(f"header declares {ndims} dims but lists {dims}")
    payload = data[newline + 1:]
    count = int(np.prod(dims, dtype=np.int64))
    if len(payload) != 8 * count:
        raise FormatError(f"payload has {len(payload)} bytes, expected {8 * count}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)


def save_tensor(path, array):
    atomic_write_bytes(path, encode_tensor(array))


def load_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


def save_pgm(path, image, lo=0.0, hi=1.0):
    """Save a 2-D image as 8-bit binary PGM, clipping to ``[lo, hi]``.

    Lossy; meant for visual inspection only.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"PGM needs a 2-D image, got shape {image.shape}")
    scaled = np.clip((image - lo) / (hi - lo), 0.0, 1.0)
    pixels = np.round(scaled * 255).astype(np.uint8)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + pixels.tobytes())
