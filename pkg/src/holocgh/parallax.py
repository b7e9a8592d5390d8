"""Acuity and ocular-parallax threshold models and the parallax detection rate."""

from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np
from skimage.feature import corner_harris, corner_peaks, match_template

from ._validation import DataError, check_positive

__all__ = [
    "ParallaxModel",
    "FeatureMatch",
    "mar",
    "parallax_threshold",
    "parallax_threshold_angle",
    "detect_features",
    "match_features",
    "parallax_detection_rate",
]


@dataclass(frozen=True)
class ParallaxModel:
    """Threshold models plus block-matcher settings.

    Angles are in degrees. The detection threshold angle grows linearly with
    eccentricity from the foveal acuity limit; in diopters it is anchored to
    ``anchor_diopters`` at ``anchor_eccentricity``.
    """

    mar_slope: float = 0.022
    omega0: float = 1.0 / 60.0
    threshold_slope: float = 0.0016
    anchor_eccentricity: float = 15.0
    anchor_diopters: float = 0.36
    deg_per_pixel: float = math.degrees(8.2e-6 / 40e-3)
    patch_size: int = 11
    search_radius: int = 24
    min_correlation: float = 0.8
    min_distance: int = 5
    harris_threshold: float = 0.01

    def __post_init__(self):
        for name in ("mar_slope", "threshold_slope"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        check_positive(self.deg_per_pixel, "deg_per_pixel")
        if self.patch_size < 3 or self.patch_size % 2 == 0:
            raise ValueError("patch_size must be an odd integer >= 3")

    @classmethod
    def for_display(cls, cfg, **kw):
        return cls(deg_per_pixel=math.degrees(cfg.pixel_pitch / cfg.eyepiece_focal_length), **kw)


def mar(e, model=None):
    """Minimum angle of resolution in degrees at eccentricity ``e`` degrees."""
    m = model or ParallaxModel()
    return m.mar_slope * np.asarray(e, dtype=float) + m.omega0


def parallax_threshold_angle(e, model=None):
    m = model or ParallaxModel()
    return m.threshold_slope * np.asarray(e, dtype=float) + m.omega0


def parallax_threshold(e, model=None):
    """Detection threshold in diopters, equal to the anchor at the anchor eccentricity."""
    m = model or ParallaxModel()
    ref = parallax_threshold_angle(m.anchor_eccentricity, m)
    return m.anchor_diopters * parallax_threshold_angle(e, m) / ref


class FeatureMatch(NamedTuple):
    points: np.ndarray  # (N, 2) row, col in the first image
    displacement: np.ndarray  # (N, 2) drow, dcol to the second image
    score: np.ndarray


def _gray(img):
    img = np.asarray(img, dtype=float)
    if img.ndim == 3:
        img = img.mean(axis=0)
    if img.ndim != 2:
        raise DataError(f"expected a 2D image or (C, H, W), got {img.shape}")
    return img


def detect_features(img, model=None):
    m = model or ParallaxModel()
    img = _gray(img)
    border = m.patch_size // 2 + m.search_radius + 1
    if min(img.shape) <= 2 * border:
        return np.empty((0, 2), dtype=int)
    resp = corner_harris(img)
    return corner_peaks(resp, min_distance=m.min_distance, threshold_rel=m.harris_threshold,
                        exclude_border=border)


def _parabola(cm, c0, cp):
    den = cm - 2.0 * c0 + cp
    return 0.0 if den >= 0 else 0.5 * (cm - cp) / den


def match_features(img1, img2, points=None, model=None):
    """Normalized cross-correlation block matching from ``img1`` to ``img2``."""
    m = model or ParallaxModel()
    a, b = _gray(img1), _gray(img2)
    if a.shape != b.shape:
        raise DataError(f"image shapes differ: {a.shape} vs {b.shape}")
    pts = detect_features(a, m) if points is None else np.asarray(points, dtype=int)
    h, r = m.patch_size // 2, m.search_radius
    keep, disp, score = [], [], []
    for y, x in pts:
        patch = a[y - h:y + h + 1, x - h:x + h + 1]
        if np.ptp(patch) == 0:
            continue
        search = b[y - h - r:y + h + r + 1, x - h - r:x + h + r + 1]
        ncc = match_template(search, patch)
        iy, ix = np.unravel_index(np.argmax(ncc), ncc.shape)
        best = ncc[iy, ix]
        if best < m.min_correlation or iy in (0, 2 * r) or ix in (0, 2 * r):
            continue
        dy = iy - r + _parabola(ncc[iy - 1, ix], best, ncc[iy + 1, ix])
        dx = ix - r + _parabola(ncc[iy, ix - 1], best, ncc[iy, ix + 1])
        keep.append((y, x))
        disp.append((dy, dx))
        score.append(best)
    return FeatureMatch(np.array(keep, dtype=int).reshape(-1, 2),
                        np.array(disp, dtype=float).reshape(-1, 2), np.array(score))


def parallax_detection_rate(frames1, frames2, model=None, return_details=False):
    """Fraction of matched features whose displacement reaches the threshold.

    ``frames1`` and ``frames2`` hold one image per focal state. Pairs are
    pooled over all focal states before dividing.
    """
    m = model or ParallaxModel()
    f1 = list(frames1) if not isinstance(frames1, np.ndarray) or frames1.ndim > 2 else [frames1]
    f2 = list(frames2) if not isinstance(frames2, np.ndarray) or frames2.ndim > 2 else [frames2]
    if len(f1) != len(f2) or not f1:
        raise DataError("frame sets must hold the same number (>= 1) of focal states")
    hits = total = 0
    details = []
    for a, b in zip(f1, f2):
        match = match_features(a, b, model=m)
        shape = _gray(a).shape
        center = (np.array(shape) - 1) / 2.0
        ecc = np.linalg.norm(match.points - center, axis=1) * m.deg_per_pixel
        angle = np.linalg.norm(match.displacement, axis=1) * m.deg_per_pixel
        exceed = angle >= parallax_threshold_angle(ecc, m)
        hits += int(exceed.sum())
        total += exceed.size
        details.append((match, exceed))
    if total == 0:
        raise DataError("no matched feature pairs; detection rate undefined")
    rate = hits / total
    return (rate, details) if return_details else rate
