"""Portable float maps and PNG export.

Arrays are ``(H, W)`` for single-channel images and ``(3, H, W)`` for color.
PFM data is stored bottom row first, as the format requires.
"""

import numpy as np
from PIL import Image

from .._validation import DataError

__all__ = ["read_pfm", "write_pfm", "read_png", "write_png", "to_display"]


def write_pfm(path, img, little_endian=True):
    a = np.asarray(img, dtype=np.float32)
    if a.ndim == 3 and a.shape[0] == 1:
        a = a[0]
    if a.ndim == 2:
        tag, data = b"Pf", a
    elif a.ndim == 3 and a.shape[0] == 3:
        tag, data = b"PF", np.moveaxis(a, 0, -1)
    else:
        raise DataError(f"PFM holds (H, W) or (3, H, W) images, got {a.shape}")
    h, w = data.shape[:2]
    scale = -1.0 if little_endian else 1.0
    dtype = "<f4" if little_endian else ">f4"
    with open(path, "wb") as fh:
        fh.write(b"%s\n%d %d\n%s\n" % (tag, w, h, repr(scale).encode()))
        fh.write(np.ascontiguousarray(data[::-1], dtype=dtype).tobytes())


def _tokens(fh, n):
    out = []
    while len(out) < n:
        line = fh.readline()
        if not line:
            raise DataError("truncated PFM header")
        line = line.split(b"#", 1)[0]
        out.extend(line.split())
    return out


def read_pfm(path):
    with open(path, "rb") as fh:
        try:
            tag, w, h, scale = _tokens(fh, 4)[:4]
            w, h, scale = int(w), int(h), float(scale)
        except ValueError as exc:
            raise DataError(f"{path}: malformed PFM header ({exc})") from None
        if tag not in (b"PF", b"Pf") or w < 1 or h < 1 or scale == 0:
            raise DataError(f"{path}: malformed PFM header")
        nc = 3 if tag == b"PF" else 1
        dtype = "<f4" if scale < 0 else ">f4"
        raw = fh.read()
    n = w * h * nc
    if len(raw) < 4 * n:
        raise DataError(f"{path}: PFM payload holds {len(raw)} bytes, expected {4 * n}")
    data = np.frombuffer(raw[:4 * n], dtype=dtype).astype(np.float32)
    data = data.reshape((h, w, nc) if nc == 3 else (h, w))[::-1]
    if nc == 3:
        data = np.moveaxis(data, -1, 0)
    return np.ascontiguousarray(data)


def read_png(path):
    """Read an 8- or 16-bit PNG as floats in [0, 1] without any gamma change."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.asarray(im)
    except (OSError, SyntaxError) as exc:
        raise DataError(f"{path}: cannot decode image ({exc})") from None
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        scale = 65535.0
    elif arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16:
        scale = 65535.0
    else:
        raise DataError(f"{path}: unsupported image mode {mode}")
    out = arr.astype(np.float64) / scale
    if out.ndim == 3:
        out = np.moveaxis(out[..., :3], -1, 0)
    return out


def to_display(img, gamma=2.2, peak=None):
    """Normalize linear values to [0, 1] and apply display gamma."""
    a = np.asarray(img, dtype=float)
    peak = a.max() if peak is None else peak
    a = np.clip(a / peak, 0, 1) if peak > 0 else np.zeros_like(a)
    return a ** (1.0 / gamma)


def write_png(path, img, gamma=2.2, bit_depth=8, peak=None):
    """Export for viewing. Gamma encoding happens here and nowhere else."""
    a = to_display(img, gamma, peak) if gamma else np.clip(np.asarray(img, dtype=float), 0, 1)
    if a.ndim == 3:
        a = a[0] if a.shape[0] == 1 else np.moveaxis(a, 0, -1)
    if bit_depth == 8:
        Image.fromarray(np.round(a * 255).astype(np.uint8)).save(path)
    elif bit_depth == 16:
        if a.ndim != 2:
            raise DataError("16-bit export supports single-channel images only")
        Image.fromarray(np.round(a * 65535).astype(np.uint16)).save(path)
    else:
        raise ValueError("bit_depth must be 8 or 16")

