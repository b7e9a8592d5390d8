"""Bit-packed binary hologram files.

Layout: a 22-byte little-endian header ``<5s B H I I H H c x`` holding the
magic ``b"HBIN1"``, version, header size, width, height, frames, channels and
the bit-order tag ``b"L"``; then one bit plane per (channel, frame), row-major,
least-significant bit first, each row padded to a whole byte.
"""

import os
import struct

import numpy as np

from .._validation import DataError

__all__ = ["MAGIC", "VERSION", "HEADER", "payload_size", "write_hologram", "read_hologram",
           "HologramFormatError"]

MAGIC = b"HBIN1"
VERSION = 1
HEADER = struct.Struct("<5sBHIIHHcx")


class HologramFormatError(DataError):
    pass


def payload_size(width, height, frames, channels):
    return channels * frames * height * ((width + 7) // 8)


def write_hologram(path, frames):
    """Write binary frames of shape ``(C, T, H, W)`` (or ``(T, H, W)``)."""
    q = np.asarray(frames)
    if q.ndim == 2:
        q = q[None, None]
    elif q.ndim == 3:
        q = q[None]
    if q.ndim != 4 or q.size == 0:
        raise DataError(f"frames must have shape (C, T, H, W), got {q.shape}")
    if not np.all((q == 0) | (q == 1)):
        raise DataError("hologram frames must be binary (0 or 1)")
    c, t, h, w = q.shape
    bits = np.packbits(q.astype(np.uint8), axis=-1, bitorder="little")
    header = HEADER.pack(MAGIC, VERSION, HEADER.size, w, h, t, c, b"L")
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(bits).tobytes())
    os.replace(tmp, path)


def read_hologram(path):
    """Read a hologram file into a ``(C, T, H, W)`` uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER.size:
        raise HologramFormatError(f"{path}: file too short for a header")
    magic, version, hsize, w, h, t, c, order = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise HologramFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise HologramFormatError(f"{path}: unsupported version {version}")
    if order != b"L" or hsize != HEADER.size:
        raise HologramFormatError(f"{path}: unsupported bit order {order!r} or header size")
    n = payload_size(w, h, t, c)
    if len(data) - hsize != n:
        raise HologramFormatError(
            f"{path}: payload length {len(data) - hsize} bytes, expected {n}"
        )
    bits = np.frombuffer(data, dtype=np.uint8, offset=hsize).reshape(c, t, h, (w + 7) // 8)
    return np.unpackbits(bits, axis=-1, count=w, bitorder="little")
