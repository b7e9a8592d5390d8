"""Light-field directories and RGB-D image pairs."""

import os
import re

import numpy as np

from .._validation import DataError
from ..stft import StftOperator
from ..targets import LightField, RgbdTarget
from .images import read_pfm, read_png

__all__ = ["VIEW_PATTERN", "read_image", "load_lightfield", "load_rgbd", "save_lightfield"]

VIEW_PATTERN = re.compile(r"^view_(\d+)_(\d+)\.(pfm|png)$", re.IGNORECASE)


def read_image(path):
    """Read a PFM or PNG file as a float ``(C, H, W)`` array."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pfm":
        img = read_pfm(path).astype(float)
    elif ext == ".png":
        img = read_png(path)
    else:
        raise DataError(f"{path}: unsupported image extension {ext!r}")
    return img[None] if img.ndim == 2 else img


def load_lightfield(dir_path, cfg, window=16, hop=16):
    """Load ``view_{row:02}_{col:02}.{pfm|png}`` files into a LightField.

    Rows index the vertical and columns the horizontal view angle. Angles are
    those of the STFT bins that a ``window``-pixel analysis of the SLM field
    at the reference wavelength samples, so the light field lines up with 4D
    supervision. Float views are scaled to a maximum of 1.
    """
    if not os.path.isdir(dir_path):
        raise DataError(f"light-field directory not found: {dir_path}")
    found = {}
    for name in sorted(os.listdir(dir_path)):
        m = VIEW_PATTERN.match(name)
        if m:
            key = (int(m.group(1)), int(m.group(2)))
            if key in found:
                raise DataError(f"duplicate view {key} in {dir_path}")
            found[key] = os.path.join(dir_path, name)
    if not found:
        raise DataError(f"no view_RR_CC.pfm/png files in {dir_path}")
    nv = max(r for r, _ in found) + 1
    nu = max(c for _, c in found) + 1
    missing = [(r, c) for r in range(nv) for c in range(nu) if (r, c) not in found]
    if missing:
        raise DataError(f"missing light-field view(s) (row, col): {missing}")
    views, shape = [], None
    for r in range(nv):
        row = []
        for c in range(nu):
            img = read_image(found[(r, c)])
            if shape is None:
                shape = img.shape
            elif img.shape != shape:
                raise DataError(
                    f"view ({r}, {c}) has shape {img.shape}, expected {shape}"
                )
            row.append(img)
        views.append(row)
    arr = np.array(views).transpose(2, 0, 1, 3, 4)
    arr = np.clip(arr, 0.0, None)
    if arr.max() > 1.0:
        arr = arr / arr.max()
    lam = cfg.eyebox_wavelength
    op = StftOperator(cfg.shape, cfg.pixel_pitch, lam, (nu, nv), window, hop, cfg.sideband)
    pitch = op.view_pitch if arr.shape[-2:] == op.grid_shape else cfg.pixel_pitch
    return LightField(arr, op.angles_x, op.angles_y, pitch)


def save_lightfield(dir_path, lf, fmt="pfm"):
    from .images import write_pfm, write_png

    os.makedirs(dir_path, exist_ok=True)
    c, nv, nu = lf.views.shape[:3]
    for r in range(nv):
        for col in range(nu):
            img = lf.views[:, r, col]
            path = os.path.join(dir_path, f"view_{r:02d}_{col:02d}.{fmt}")
            if fmt == "pfm":
                write_pfm(path, img[0] if c == 1 else img)
            else:
                write_png(path, img, gamma=None)


def load_rgbd(image_path, depth_path, depth_range):
    """Amplitude image plus a depth image mapped linearly onto ``depth_range`` diopters.

    Depth pixel value 0 maps to ``depth_range[0]`` and full scale to
    ``depth_range[1]``.
    """
    amp = read_image(image_path)
    depth = read_image(depth_path)
    if depth.shape[0] != 1:
        depth = depth.mean(axis=0, keepdims=True)
    d0, d1 = (float(x) for x in depth_range)
    if not d1 >= d0 >= 0:
        raise DataError(f"invalid depth range {depth_range}")
    if amp.max() > 1.0:
        amp = amp / amp.max()
    dmap = d0 + np.clip(depth[0], 0, 1) * (d1 - d0)
    if amp.shape[1:] != dmap.shape:
        raise DataError(f"image {amp.shape[1:]} and depth {dmap.shape} differ in shape")
    return RgbdTarget(np.clip(amp, 0, 1), dmap)
