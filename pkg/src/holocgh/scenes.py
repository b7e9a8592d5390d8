"""Synthetic layered scenes for desk-scale experiments and tests."""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from ._validation import check_random_state
from .optics import diopters_to_distance
from .propagation import fourier_shift
from .targets import LightField, RgbdTarget

__all__ = ["texture", "LayeredScene", "two_plane_scene"]


def texture(shape, seed=None, sigma=1.5, contrast=1.0):
    """Smooth random texture rescaled to [0, 1]."""
    rng = check_random_state(seed)
    t = gaussian_filter(rng.random(shape), sigma, mode="wrap")
    t = (t - t.min()) / max(t.max() - t.min(), 1e-12)
    return 0.5 + contrast * (t - 0.5)


@dataclass(frozen=True)
class LayeredScene:
    """Planar layers ordered far to near.

    ``colors`` is ``(L, C, H, W)``, ``mattes`` is ``(L, H, W)`` and
    ``diopters`` holds the depth of each layer.
    """

    colors: np.ndarray
    mattes: np.ndarray
    diopters: np.ndarray

    def rgbd(self):
        """All-in-focus amplitude and depth map seen from the WRP axis."""
        amp = np.zeros(self.colors.shape[1:])
        depth = np.zeros(self.mattes.shape[1:])
        for col, m, d in zip(self.colors, self.mattes, self.diopters):
            amp = amp * (1 - m) + col * m
            depth = np.where(m > 0.5, d, depth)
        return RgbdTarget(np.clip(amp, 0, 1), depth)

    def render_view(self, angle_x, angle_y, cfg, pitch=None):
        """Orthographic view: a layer ``dz`` beyond the WRP moves by ``-tan(u) dz``."""
        pitch = pitch or cfg.pixel_pitch
        out = np.zeros(self.colors.shape[1:])
        for col, m, d in zip(self.colors, self.mattes, self.diopters):
            dz = diopters_to_distance(cfg, d) - cfg.wrp_distance
            dx = -np.tan(angle_x) * dz / pitch
            dy = -np.tan(angle_y) * dz / pitch
            ms = np.clip(fourier_shift(m, dx, dy), 0, 1)
            cs = np.stack([fourier_shift(c * m, dx, dy) for c in col])
            out = out * (1 - ms) + cs
        return np.clip(out, 0, 1)

    def light_field(self, angles_x, angles_y, cfg, downsample=1):
        """Render a ``(C, V, U, H, W)`` light field, optionally box-downsampled."""
        views = np.array([[self.render_view(ax, ay, cfg) for ax in angles_x] for ay in angles_y])
        views = views.transpose(2, 0, 1, 3, 4)  # (V, U, C, H, W) -> (C, V, U, H, W)
        if downsample > 1:
            c, nv, nu, h, w = views.shape
            hh, ww = h // downsample, w // downsample
            views = views[..., :hh * downsample, :ww * downsample]
            views = views.reshape(c, nv, nu, hh, downsample, ww, downsample).mean(axis=(-3, -1))
        return LightField(views, angles_x, angles_y, cfg.pixel_pitch * downsample)


def two_plane_scene(shape, cfg, far=0.0, near=None, size=0.4, seed=0, n_channels=None):
    """Textured background at ``far`` diopters with a textured square at ``near``."""
    rng = check_random_state(seed)
    c = n_channels or cfg.n_channels
    near = cfg.d_ncp if near is None else near
    h, w = shape
    bg = np.stack([texture(shape, rng, sigma=2.0, contrast=0.8) for _ in range(c)])
    fg = np.stack([texture(shape, rng, sigma=1.0, contrast=0.9) for _ in range(c)])
    m = np.zeros(shape)
    sh, sw = int(round(h * size)), int(round(w * size))
    y0, x0 = (h - sh) // 2, (w - sw) // 2
    m[y0:y0 + sh, x0:x0 + sw] = 1.0
    return LayeredScene(np.stack([bg, fg]), np.stack([np.ones(shape), m]),
                        np.array([far, near], dtype=float))
