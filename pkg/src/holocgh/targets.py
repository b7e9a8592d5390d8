"""Supervision targets: depth masks, focal stacks and light fields.

Image arrays are channel-first: ``(C, H, W)`` for images, ``(C, K, H, W)`` for
focal stacks and ``(C, V, U, H, W)`` for light fields, where ``V`` indexes the
vertical and ``U`` the horizontal view angle. All target images hold
amplitudes in [0, 1].
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ._validation import DataError, as_channels, check_finite_array, check_positive
from .optics import diopters_to_distance, display_geometry
from .propagation import fourier_shift

__all__ = [
    "MaskSet",
    "RgbdTarget",
    "LightField",
    "FocalStack",
    "closest_distance_masks",
    "disk_kernel",
    "blur_radius_px",
    "focal_stack_from_rgbd",
    "focal_stack_from_lf",
]


@dataclass(frozen=True)
class MaskSet:
    masks: np.ndarray  # (K, H, W) float in {0, 1}
    diopters: np.ndarray  # (K,)

    def __len__(self):
        return self.masks.shape[0]


@dataclass(frozen=True)
class RgbdTarget:
    amplitude: np.ndarray  # (C, H, W)
    depth: np.ndarray  # (H, W) diopters

    def __post_init__(self):
        a = as_channels(check_finite_array(self.amplitude, "amplitude", dtype=float), "amplitude")
        d = check_finite_array(self.depth, "depth", ndim=2, dtype=float)
        if a.shape[1:] != d.shape:
            raise DataError(f"amplitude {a.shape[1:]} and depth {d.shape} differ in shape")
        if a.min(initial=0.0) < 0 or a.max(initial=0.0) > 1:
            raise DataError("amplitude must lie in [0, 1]")
        if d.min() < 0:
            raise DataError("depth must be >= 0 diopters")
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "depth", d)

    def check_range(self, cfg):
        if self.depth.max() > cfg.d_ncp * (1 + 1e-9):
            raise DataError(f"depth exceeds the display range of {cfg.d_ncp:.4g} D")


@dataclass(frozen=True)
class LightField:
    """Orthographic light field.

    ``angles_x`` (length U) and ``angles_y`` (length V) are view directions in
    radians. ``pitch`` is the spatial sample spacing of each view in meters.
    """

    views: np.ndarray
    angles_x: np.ndarray
    angles_y: np.ndarray
    pitch: float
    orthographic: bool = True

    def __post_init__(self):
        v = np.asarray(self.views, dtype=float)
        if v.ndim == 4:
            v = v[None]
        if v.ndim != 5:
            raise DataError(f"views must have shape (C, V, U, H, W), got {v.shape}")
        ax = np.atleast_1d(np.asarray(self.angles_x, dtype=float))
        ay = np.atleast_1d(np.asarray(self.angles_y, dtype=float))
        if ax.shape != (v.shape[2],) or ay.shape != (v.shape[1],):
            raise DataError("angle arrays must match the view grid")
        for name, a in (("angles_x", ax), ("angles_y", ay)):
            if np.any(np.diff(a) <= 0):
                raise DataError(f"{name} must be strictly increasing")
        check_positive(self.pitch, "pitch")
        object.__setattr__(self, "views", v)
        object.__setattr__(self, "angles_x", ax)
        object.__setattr__(self, "angles_y", ay)

    @property
    def n_views(self):
        """``(U, V)``."""
        return self.views.shape[2], self.views.shape[1]

    def check_angles(self, cfg):
        geo = display_geometry(cfg)
        half = min(geo.theta_diff) / 2.0
        for a in (self.angles_x, self.angles_y):
            if np.any(np.abs(a) > half * (1 + 1e-12)):
                raise DataError("view angles exceed the diffraction half angle")


@dataclass(frozen=True)
class FocalStack:
    slices: np.ndarray  # (C, K, H, W)
    diopters: np.ndarray
    provenance: str = "rgbd"

    def __post_init__(self):
        s = np.asarray(self.slices, dtype=float)
        if s.ndim == 3:
            s = s[None]
        d = np.atleast_1d(np.asarray(self.diopters, dtype=float))
        if s.ndim != 4 or s.shape[1] != d.size:
            raise DataError(f"slices {s.shape} do not match {d.size} plane depths")
        # subpixel Fourier shifts ring slightly below zero near sharp edges
        if s.size and s.min() < -0.1 * max(s.max(), 1e-300):
            raise DataError("focal stack slices must be nonnegative")
        object.__setattr__(self, "slices", s)
        object.__setattr__(self, "diopters", d)


def _check_planes(planes):
    p = np.atleast_1d(np.asarray(planes, dtype=float))
    if p.size < 1:
        raise ValueError("need at least one plane")
    if np.any(np.diff(p) < 0):
        raise ValueError("planes must be sorted ascending")
    return p


def closest_distance_masks(depth, planes):
    """Binary masks assigning each pixel to its nearest plane in diopters.

    Ties go to the smaller plane index.
    """
    depth = check_finite_array(depth, "depth", ndim=2, dtype=float)
    p = _check_planes(planes)
    dist = np.abs(depth[None] - p[:, None, None])
    idx = np.argmin(dist, axis=0)  # first minimum wins ties
    masks = (idx[None] == np.arange(p.size)[:, None, None]).astype(float)
    return MaskSet(masks, p)


def disk_kernel(radius):
    """Normalized binary disk of the given radius in pixels."""
    if radius < 0.5:
        return np.ones((1, 1))
    n = int(np.ceil(radius))
    y, x = np.mgrid[-n:n + 1, -n:n + 1]
    k = (x * x + y * y <= radius * radius).astype(float)
    return k / k.sum()


def blur_radius_px(pupil_diameter, d_focus, d_layer, cfg):
    """Defocus blur radius in pixels for a layer at ``d_layer`` seen focused at ``d_focus``."""
    angle = 0.5 * pupil_diameter * abs(d_focus - d_layer)
    return angle * cfg.eyepiece_focal_length / cfg.pixel_pitch


def _blur(img, radius):
    k = disk_kernel(radius)
    if k.size == 1:
        return img
    n = k.shape[0] // 2
    padded = np.pad(img, ((0, 0), (n, n), (n, n)), mode="reflect")
    out = fftconvolve(padded, k[None], mode="same", axes=(-2, -1))
    return np.clip(out[:, n:-n, n:-n], 0.0, None)


def focal_stack_from_rgbd(target, planes, pupil_diameter, cfg):
    """Layered defocus rendering of an RGB-D image.

    Each depth layer is blurred by a disk whose size follows the pupil
    diameter and dioptric defocus, then composited far to near with its
    blurred occupancy matte.
    """
    if pupil_diameter <= 0:
        raise ValueError("pupil_diameter must be > 0")
    p = _check_planes(planes)
    masks = closest_distance_masks(target.depth, p).masks
    a = target.amplitude
    slices = np.empty((a.shape[0], p.size) + a.shape[1:])
    for i, d_i in enumerate(p):
        out = np.zeros_like(a)
        for k, d_k in enumerate(p):  # ascending diopters: far to near
            m = masks[k]
            if not m.any():
                continue
            r = blur_radius_px(pupil_diameter, d_i, d_k, cfg)
            color = _blur(a * m, r)
            matte = _blur(m[None], r)
            out = out * (1.0 - np.clip(matte, 0.0, 1.0)) + color
        slices[:, i] = out
    return FocalStack(slices, p, "rgbd")


def focal_stack_from_lf(lf, planes, cfg):
    """Shift-and-add refocusing of an orthographic light field.

    View ``v`` is translated by ``tan(u_v) (z_i - z_WRP) / pitch`` pixels on
    each axis and all views are averaged with equal weights.
    """
    p = np.atleast_1d(np.asarray(planes, dtype=float))
    dz = np.atleast_1d(diopters_to_distance(cfg, p)) - cfg.wrp_distance
    tx = np.tan(lf.angles_x)
    ty = np.tan(lf.angles_y)
    c, nv, nu, h, w = lf.views.shape
    slices = np.zeros((c, p.size, h, w))
    for i in range(p.size):
        acc = np.zeros((c, h, w))
        for iv in range(nv):
            for iu in range(nu):
                dx = tx[iu] * dz[i] / lf.pitch
                dy = ty[iv] * dz[i] / lf.pitch
                acc += fourier_shift(lf.views[:, iv, iu], dx, dy)
        slices[:, i] = acc / (nu * nv)
    return FocalStack(slices, p, "lightfield")
