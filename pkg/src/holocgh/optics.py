"""Optical configuration and closed-form display geometry.

All lengths are in meters, angles in radians unless a name says otherwise.
Dioptric depth is measured at the eyepiece: the far clipping plane (FCP) sits
in the eyepiece focal plane (0 D) and the near clipping plane (NCP) is ``2 z_o``
closer to the eye.
"""

from dataclasses import dataclass, field, replace
import math
from typing import NamedTuple

import numpy as np

from ._validation import check_int, check_pair, check_positive

__all__ = [
    "OpticalConfig",
    "DisplayGeometry",
    "PlaneDepth",
    "diffraction_angle",
    "display_geometry",
    "plane_depths",
    "diopters_to_distance",
    "distance_to_diopters",
    "half_depth_for_range",
]


def half_depth_for_range(d_max, f):
    """Half depth ``z_o`` whose clipping planes span ``[0, d_max]`` diopters.

    Parameters
    ----------
    d_max : float
        Dioptric depth range, >= 0.
    f : float
        Eyepiece focal length in meters.
    """
    d_max = check_positive(d_max, "d_max", allow_zero=True)
    f = check_positive(f, "f")
    return f * f * d_max / (2.0 * (f * d_max + 1.0))


def _theta(wavelength, pitch):
    s = wavelength / (2.0 * pitch)
    if s > 1.0:
        raise ValueError(
            f"wavelength {wavelength:g} m exceeds twice the pixel pitch {pitch:g} m; "
            "no propagating diffraction order"
        )
    return 2.0 * math.asin(s)


@dataclass(frozen=True)
class OpticalConfig:
    """Physical parameters of the holographic near-eye display.

    Parameters
    ----------
    wavelengths : tuple of float
        Vacuum wavelength per color channel.
    pixel_pitch : float
        SLM pixel pitch.
    slm_resolution, active_resolution : (int, int)
        ``(cols, rows)`` of the full SLM and of the displayed image region.
    eyepiece_focal_length : float
        Eyepiece focal length ``f``.
    half_depth : float
        Half the metric depth of the volume, ``z_o``.
    wrp_distance : float
        Distance from the SLM plane to the wavefront recording plane.
    num_frames : int
        Binary frames ``T`` averaged per perceived image.
    sideband : bool
        Keep only the ``f_y >= 0`` half of the spectrum.
    eyebox_wavelength : float, optional
        Wavelength that sizes the eyebox. Defaults to the shortest one.
    """

    wavelengths: tuple = (520e-9,)
    pixel_pitch: float = 8.2e-6
    slm_resolution: tuple = (1920, 1200)
    active_resolution: tuple = (1600, 900)
    eyepiece_focal_length: float = 40e-3
    half_depth: float = 5.5366e-3
    wrp_distance: float = 10e-3
    num_frames: int = 1
    sideband: bool = True
    eyebox_wavelength: float = field(default=None)

    def __post_init__(self):
        wl = self.wavelengths
        if np.isscalar(wl):
            wl = (wl,)
        wl = tuple(check_positive(w, "wavelength") for w in wl)
        if not wl:
            raise ValueError("at least one wavelength is required")
        object.__setattr__(self, "wavelengths", wl)
        for name in ("pixel_pitch", "eyepiece_focal_length", "half_depth", "wrp_distance"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))
        slm = check_pair(self.slm_resolution, "slm_resolution", int)
        act = check_pair(self.active_resolution, "active_resolution", int)
        if min(slm) < 1 or min(act) < 1:
            raise ValueError("resolutions must be >= 1")
        if act[0] > slm[0] or act[1] > slm[1]:
            raise ValueError(f"active_resolution {act} exceeds slm_resolution {slm}")
        object.__setattr__(self, "slm_resolution", slm)
        object.__setattr__(self, "active_resolution", act)
        object.__setattr__(self, "num_frames", check_int(self.num_frames, "num_frames", 1))
        object.__setattr__(self, "sideband", bool(self.sideband))
        if 2.0 * self.half_depth >= self.eyepiece_focal_length:
            raise ValueError("2 * half_depth must be smaller than the eyepiece focal length")
        if self.eyebox_wavelength is None:
            object.__setattr__(self, "eyebox_wavelength", min(wl))
        else:
            object.__setattr__(
                self, "eyebox_wavelength", check_positive(self.eyebox_wavelength, "eyebox_wavelength")
            )

    @classmethod
    def prototype(cls, **overrides):
        """The full-color benchtop prototype (blue-sized eyebox, 0 to 9.57 D)."""
        params = dict(
            wavelengths=(638e-9, 520e-9, 450e-9),
            pixel_pitch=8.2e-6,
            slm_resolution=(1920, 1200),
            active_resolution=(1600, 900),
            eyepiece_focal_length=40e-3,
            half_depth=half_depth_for_range(9.57, 40e-3),
            wrp_distance=10e-3,
            num_frames=24,
            sideband=True,
        )
        params.update(overrides)
        return cls(**params)

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def n_channels(self):
        return len(self.wavelengths)

    @property
    def shape(self):
        """SLM array shape ``(rows, cols)``."""
        return self.slm_resolution[1], self.slm_resolution[0]

    @property
    def fcp_distance(self):
        return self.wrp_distance - self.half_depth

    @property
    def ncp_distance(self):
        return self.wrp_distance + self.half_depth

    @property
    def d_ncp(self):
        f = self.eyepiece_focal_length
        return 1.0 / (f - 2.0 * self.half_depth) - 1.0 / f

    @property
    def d_wrp(self):
        f = self.eyepiece_focal_length
        return 1.0 / (f - self.half_depth) - 1.0 / f


class PlaneDepth(NamedTuple):
    distance: float  # propagation distance from the SLM plane
    diopters: float
    offset: float  # signed metric offset from the WRP


@dataclass(frozen=True)
class DisplayGeometry:
    theta_diff: tuple
    eyebox_size: tuple  # (width, height) for the reference wavelength
    eyeboxes: tuple  # per-wavelength (width, height)
    fov: tuple  # degrees, exact
    angular_size: tuple  # radians, paraxial W/f
    max_cpd: float
    d_ncp: float


def diffraction_angle(cfg, channel=0):
    """Full diffraction angle ``2 asin(lambda / 2p)`` of one color channel."""
    channel = check_int(channel, "channel", 0)
    if channel >= cfg.n_channels:
        raise IndexError(f"channel {channel} out of range for {cfg.n_channels} wavelengths")
    return _theta(cfg.wavelengths[channel], cfg.pixel_pitch)


def _eyebox(wavelength, cfg):
    w = cfg.eyepiece_focal_length * _theta(wavelength, cfg.pixel_pitch)
    return (w, w / 2.0 if cfg.sideband else w)


def display_geometry(cfg):
    f = cfg.eyepiece_focal_length
    p = cfg.pixel_pitch
    thetas = tuple(_theta(w, p) for w in cfg.wavelengths)
    extent = (cfg.active_resolution[0] * p, cfg.active_resolution[1] * p)
    fov = tuple(math.degrees(2.0 * math.atan(e / (2.0 * f))) for e in extent)
    return DisplayGeometry(
        theta_diff=thetas,
        eyebox_size=_eyebox(cfg.eyebox_wavelength, cfg),
        eyeboxes=tuple(_eyebox(w, cfg) for w in cfg.wavelengths),
        fov=fov,
        angular_size=(extent[0] / f, extent[1] / f),
        max_cpd=f / (2.0 * p) * math.pi / 180.0,
        d_ncp=cfg.d_ncp,
    )


def diopters_to_distance(cfg, diopters):
    """Propagation distance from the SLM of the plane imaged at ``diopters``."""
    f = cfg.eyepiece_focal_length
    d = np.asarray(diopters, dtype=float)
    z = cfg.fcp_distance + f - 1.0 / (d + 1.0 / f)
    return float(z) if z.ndim == 0 else z


def distance_to_diopters(cfg, distance):
    f = cfg.eyepiece_focal_length
    z = np.asarray(distance, dtype=float)
    d = 1.0 / (f - (z - cfg.fcp_distance)) - 1.0 / f
    return float(d) if d.ndim == 0 else d


def plane_depths(cfg, k):
    """``k`` planes uniformly spaced in diopters over ``[0, d_ncp]``.

    A single plane is placed at the WRP.
    """
    k = check_int(k, "k", 1)
    if k == 1:
        ds = [cfg.d_wrp]
    else:
        ds = np.linspace(0.0, cfg.d_ncp, k).tolist()
    out = []
    for d in ds:
        z = diopters_to_distance(cfg, d)
        out.append(PlaneDepth(z, float(d), z - cfg.wrp_distance))
    return out
