"""Retinal image simulation for a pupil placed anywhere in the eyebox.

Pupil coordinates are normalized by the eyebox width of the reference
wavelength. The origin sits at the eyebox center: ``x = 0`` on the optical
axis and, with sideband encoding, ``y = 0`` in the middle of the upper half
band.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from ._validation import DataError, check_positive
from .optics import diopters_to_distance, display_geometry
from .propagation import AsmPropagator, FieldStack, asm_kernel
from .stft import StftOperator

__all__ = [
    "PupilState",
    "PupilGrid",
    "RetinalImage",
    "pupil_grid",
    "pupil_aperture",
    "retinal_image",
    "eyebox_energy_tiles",
    "SCE_COEFFICIENT",
]

SCE_COEFFICIENT = 2.5e4  # m^-2


@dataclass(frozen=True)
class PupilState:
    """Pupil position, size, apodization and accommodation.

    ``focal_diopters`` of None focuses at the WRP.
    """

    center: tuple = (0.0, 0.0)
    diameter: float = 1.0
    apodization: str = "diffraction"
    sce_coefficient: object = SCE_COEFFICIENT
    focal_diopters: float = None

    def __post_init__(self):
        check_positive(self.diameter, "diameter")
        if self.apodization not in ("diffraction", "stiles-crawford"):
            raise ValueError("apodization must be 'diffraction' or 'stiles-crawford'")
        if np.any(np.asarray(self.sce_coefficient) < 0):
            raise ValueError("Stiles-Crawford coefficient must be >= 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def coefficient(self, channel):
        p = np.atleast_1d(np.asarray(self.sce_coefficient, dtype=float))
        return float(p[channel] if p.size > 1 else p[0])


@dataclass(frozen=True)
class PupilGrid:
    """Metric pupil-plane coordinates ``x`` (1, W) and ``y`` (H, 1)."""

    x: np.ndarray
    y: np.ndarray
    eyebox_width: float
    y_origin: float


@dataclass(frozen=True)
class RetinalImage:
    intensity: np.ndarray  # (C, H, W)
    focal_diopters: float
    state: PupilState
    vignetted: bool = False
    collected_energy: np.ndarray = field(default=None)


def _reference(cfg):
    geo = display_geometry(cfg)
    w = geo.eyebox_size[0]
    y0 = geo.eyebox_size[1] / 2.0 if cfg.sideband else 0.0
    return w, y0


def pupil_grid(shape, pitch, wavelength, cfg):
    """Pupil-plane sample coordinates for a centered-FFT grid of ``shape``.

    Sample ``(i, j)`` corresponds to spatial frequency ``((i - H//2)/(H p), (j - W//2)/(W p))``
    and to pupil position ``lambda f`` times that.
    """
    h, w = shape
    f = cfg.eyepiece_focal_length
    fy = (np.arange(h) - h // 2) / (h * pitch)
    fx = (np.arange(w) - w // 2) / (w * pitch)
    eb, y0 = _reference(cfg)
    return PupilGrid(wavelength * f * fx[None, :], wavelength * f * fy[:, None], eb, y0)


def pupil_aperture(state, grid, channel=0):
    """Circular pupil with optional Stiles-Crawford apodization ``10^(-p r^2)``."""
    xc = state.center[0] * grid.eyebox_width
    yc = state.center[1] * grid.eyebox_width + grid.y_origin
    r2 = (grid.x - xc) ** 2 + (grid.y - yc) ** 2
    radius = 0.5 * state.diameter * grid.eyebox_width
    inside = r2 <= radius * radius
    if state.apodization == "stiles-crawford":
        amp = 10.0 ** (-state.coefficient(channel) * r2)
    else:
        amp = np.ones_like(r2)
    return np.where(inside, amp, 0.0)


def _overlap_fraction(state, cfg, wavelength, n=201):
    """Fraction of the pupil disk lying inside this wavelength's passband."""
    eb, y0 = _reference(cfg)
    f = cfg.eyepiece_focal_length
    half = wavelength * f / (2.0 * cfg.pixel_pitch)
    xc = state.center[0] * eb
    yc = state.center[1] * eb + y0
    r = 0.5 * state.diameter * eb
    t = np.linspace(-r, r, n)
    x, y = np.meshgrid(xc + t, yc + t)
    disk = (x - xc) ** 2 + (y - yc) ** 2 <= r * r
    ylo = 0.0 if cfg.sideband else -half
    box = (np.abs(x) <= half) & (y >= ylo) & (y <= half)
    return float(np.sum(disk & box) / max(np.sum(disk), 1))


def _as_frames(stack, cfg):
    if isinstance(stack, FieldStack):
        frames = stack.frames[None]
    else:
        frames = np.asarray(stack)
        if frames.ndim == 2:
            frames = frames[None, None]
        elif frames.ndim == 3:
            frames = frames[None]
    if frames.ndim != 4 or frames.shape[0] != cfg.n_channels:
        raise DataError(f"frames {frames.shape} do not match (C={cfg.n_channels}, T, H, W)")
    return frames


def retinal_image(stack, cfg, state, min_overlap=0.01):
    """Time-averaged retinal intensity seen through ``state``.

    The SLM field is propagated to the WRP with the angular spectrum method
    on a 2x padded grid, transformed to the pupil plane, filtered by the
    aperture and by the defocus transfer function for the focal state, and
    transformed back. Intensities are averaged over frames and cropped to the
    SLM grid.
    """
    frames = _as_frames(stack, cfg)
    c, t, h, w = frames.shape
    d_focus = cfg.d_wrp if state.focal_diopters is None else float(state.focal_diopters)
    dz = diopters_to_distance(cfg, d_focus) - cfg.wrp_distance
    out = np.zeros((c, h, w))
    energy = np.zeros(c)
    if all(_overlap_fraction(state, cfg, lam) < min_overlap for lam in cfg.wavelengths):
        return RetinalImage(out, d_focus, state, True, energy)
    shape2 = (2 * h, 2 * w)
    for ch, lam in enumerate(cfg.wavelengths):
        prop = AsmPropagator((h, w), cfg.pixel_pitch, lam, [cfg.wrp_distance], cfg.sideband,
                             pad=True)
        u = np.zeros((t,) + shape2, dtype=complex)
        u[:, :h, :w] = frames[ch]
        spec = sfft.fft2(u) * prop.kernels[0] * asm_kernel(shape2, cfg.pixel_pitch, lam, dz)
        grid = pupil_grid(shape2, cfg.pixel_pitch, lam, cfg)
        aperture = sfft.ifftshift(pupil_aperture(state, grid, ch))
        spec = spec * aperture
        energy[ch] = np.sum(np.abs(spec) ** 2) / spec[0].size / t
        img = sfft.ifft2(spec)[:, :h, :w]
        out[ch] = np.mean(np.abs(img) ** 2, axis=0)
    return RetinalImage(out, d_focus, state, False, energy)


def eyebox_energy_tiles(stack, cfg, n_views, window=16, hop=16):
    """Per-view mean STFT intensity at the WRP, normalized to a maximum of 1.

    Returns an array of shape ``(C, V, U)``. Intensities are averaged over the
    time-multiplexed frames.
    """
    frames = _as_frames(stack, cfg)
    c, t, h, w = frames.shape
    tiles = np.zeros((c, n_views[1], n_views[0]))
    for ch, lam in enumerate(cfg.wavelengths):
        prop = AsmPropagator((h, w), cfg.pixel_pitch, lam, [cfg.wrp_distance], cfg.sideband)
        u = prop.forward(frames[ch])[:, 0]
        op = StftOperator((h, w), cfg.pixel_pitch, lam, n_views, window, hop, cfg.sideband)
        inten = np.mean(np.abs(op.forward(u)) ** 2, axis=0)
        tiles[ch] = inten.mean(axis=(-2, -1))
    peak = tiles.max()
    return tiles / peak if peak > 0 else tiles
