"""Sampled complex fields and angular-spectrum propagation.

Frequencies follow ``numpy.fft.fftfreq`` along each axis, with ``f_y`` taken
along axis 0 (rows). Single-sideband filtering keeps ``f_y >= 0``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from ._validation import DataError, check_positive

__all__ = [
    "ComplexField",
    "FieldStack",
    "PropagationKernel",
    "frequency_grid",
    "asm_kernel",
    "AsmPropagator",
    "propagate",
    "propagate_asm",
    "apply_sideband",
    "fourier_shift",
    "to_pupil_plane",
    "from_pupil_plane",
]


def _pitch_yx(pitch):
    if np.ndim(pitch) == 0:
        p = check_positive(pitch, "pitch")
        return p, p
    py, px = pitch
    return check_positive(py, "pitch_y"), check_positive(px, "pitch_x")


def _complex_dtype(x):
    return np.complex64 if x.dtype in (np.float32, np.complex64) else np.complex128


@dataclass(frozen=True)
class ComplexField:
    """A sampled complex field.

    ``pitch`` is a scalar or a ``(pitch_y, pitch_x)`` pair.
    """

    grid: np.ndarray
    pitch: object
    wavelength: float

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.ndim != 2 or min(g.shape) < 1:
            raise DataError(f"field grid must be a non-empty 2D array, got shape {g.shape}")
        if not np.iscomplexobj(g):
            g = g.astype(np.complex128)
        if not np.all(np.isfinite(g)):
            raise DataError("field contains non-finite values")
        _pitch_yx(self.pitch)
        check_positive(self.wavelength, "wavelength")
        object.__setattr__(self, "grid", g)

    @property
    def shape(self):
        return self.grid.shape

    @property
    def intensity(self):
        return np.abs(self.grid) ** 2

    def energy(self):
        return float(np.sum(self.intensity))


@dataclass(frozen=True)
class FieldStack:
    """``T`` fields of one wavelength, stored as a ``(T, H, W)`` array."""

    frames: np.ndarray
    pitch: object
    wavelength: float

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim == 2:
            f = f[None]
        if f.ndim != 3 or f.shape[0] < 1:
            raise DataError(f"frames must have shape (T, H, W), got {f.shape}")
        _pitch_yx(self.pitch)
        check_positive(self.wavelength, "wavelength")
        object.__setattr__(self, "frames", f)

    @classmethod
    def from_fields(cls, fields):
        fields = list(fields)
        if not fields:
            raise DataError("need at least one frame")
        first = fields[0]
        for fl in fields[1:]:
            if fl.shape != first.shape or fl.wavelength != first.wavelength:
                raise DataError("all frames must share shape and wavelength")
        return cls(np.stack([fl.grid for fl in fields]), first.pitch, first.wavelength)

    def __len__(self):
        return self.frames.shape[0]

    def __getitem__(self, t):
        return ComplexField(self.frames[t], self.pitch, self.wavelength)

    def mean_intensity(self):
        return np.mean(np.abs(self.frames) ** 2, axis=0)


@dataclass(frozen=True)
class PropagationKernel:
    transfer: np.ndarray
    z: float
    sideband: bool


def frequency_grid(shape, pitch):
    """Return ``(fy, fx)`` broadcastable frequency coordinates in FFT order."""
    py, px = _pitch_yx(pitch)
    fy = np.fft.fftfreq(shape[0], d=py)[:, None]
    fx = np.fft.fftfreq(shape[1], d=px)[None, :]
    return fy, fx


def asm_kernel(shape, pitch, wavelength, z, sideband=False, band_limit=False, dtype=np.complex128):
    """Angular-spectrum transfer function on an FFT-ordered grid.

    Evanescent frequencies are set to zero. With ``band_limit`` the frequencies
    that alias for the given padded grid are also dropped.
    """
    fy, fx = frequency_grid(shape, pitch)
    arg = 1.0 - (wavelength * fx) ** 2 - (wavelength * fy) ** 2
    prop = arg >= 0
    phase = (2 * np.pi / wavelength * z) * np.sqrt(np.where(prop, arg, 0.0))
    h = np.where(prop, np.exp(1j * phase), 0.0)
    if band_limit and z != 0:
        py, px = _pitch_yx(pitch)
        lim_x = 1.0 / (wavelength * np.sqrt((2.0 * z / (shape[1] * px)) ** 2 + 1.0))
        lim_y = 1.0 / (wavelength * np.sqrt((2.0 * z / (shape[0] * py)) ** 2 + 1.0))
        h = h * ((np.abs(fx) <= lim_x) & (np.abs(fy) <= lim_y))
    if sideband:
        h = h * (fy >= 0)
    return h.astype(dtype)


class AsmPropagator:
    """Propagate ``(..., H, W)`` fields to several distances at once.

    Kernels are precomputed on the (optionally 2x padded) grid. ``forward``
    returns ``(..., K, H, W)`` and ``adjoint`` is its exact Hermitian adjoint,
    summing over the K planes.
    """

    def __init__(self, shape, pitch, wavelength, distances, sideband=False, pad=True,
                 band_limit=False, dtype=np.complex128):
        self.shape = tuple(int(s) for s in shape)
        self.pad = bool(pad)
        self.padded_shape = tuple(2 * s for s in self.shape) if self.pad else self.shape
        self.distances = np.atleast_1d(np.asarray(distances, dtype=float))
        self.dtype = np.dtype(dtype)
        self.kernels = np.stack([
            asm_kernel(self.padded_shape, pitch, wavelength, z, sideband, band_limit, self.dtype)
            for z in self.distances
        ])

    def _pad(self, x):
        if not self.pad:
            return x
        h, w = self.shape
        out = np.zeros(x.shape[:-2] + self.padded_shape, dtype=x.dtype)
        out[..., :h, :w] = x
        return out

    def _crop(self, x):
        if not self.pad:
            return x
        h, w = self.shape
        return x[..., :h, :w]

    def forward(self, x):
        x = np.asarray(x).astype(self.dtype, copy=False)
        spec = sfft.fft2(self._pad(x))
        out = sfft.ifft2(spec[..., None, :, :] * self.kernels)
        return self._crop(out)

    def adjoint(self, g):
        g = np.asarray(g).astype(self.dtype, copy=False)
        spec = sfft.fft2(self._pad(g))
        back = sfft.ifft2(np.sum(spec * np.conj(self.kernels), axis=-3))
        return self._crop(back)


def propagate(u, pitch, wavelength, z, sideband=False, pad=True, band_limit=False):
    """Array-level angular-spectrum propagation of a ``(..., H, W)`` field."""
    u = np.asarray(u)
    prop = AsmPropagator(u.shape[-2:], pitch, wavelength, [z], sideband, pad, band_limit,
                         _complex_dtype(u))
    return prop.forward(u)[..., 0, :, :]


def propagate_asm(field, z, sideband=False, pad=True, band_limit=False):
    """Propagate a ComplexField by ``z`` meters with the angular spectrum method."""
    z = float(z)
    if not np.isfinite(z):
        raise ValueError("propagation distance must be finite")
    out = propagate(field.grid, field.pitch, field.wavelength, z, sideband, pad, band_limit)
    return ComplexField(out, field.pitch, field.wavelength)


def apply_sideband(field):
    """Zero the ``f_y < 0`` half of the spectrum."""
    g = field.grid
    fy, _ = frequency_grid(g.shape, field.pitch)
    out = sfft.ifft2(sfft.fft2(g) * (fy >= 0))
    return ComplexField(out, field.pitch, field.wavelength)


def fourier_shift(image, dx, dy):
    """Circularly shift a real image by ``(dx, dy)`` pixels, ``out(x) = in(x - dx)``."""
    image = np.asarray(image, dtype=float)
    if not (np.isfinite(dx) and np.isfinite(dy)):
        raise ValueError("shifts must be finite")
    h, w = image.shape[-2:]
    ky = np.fft.fftfreq(h)[:, None]
    kx = np.fft.fftfreq(w)[None, :]
    ramp = np.exp(-2j * np.pi * (kx * dx + ky * dy))
    return np.real(sfft.ifft2(sfft.fft2(image) * ramp))


def to_pupil_plane(field, f):
    """Fourier transform through an ideal eyepiece of focal length ``f``.

    The unitary centered DFT is used, so energy is preserved. The output pitch
    is ``lambda f / (N pitch)`` per axis and the zero frequency lands at index
    ``N // 2``.
    """
    f = check_positive(f, "f")
    py, px = _pitch_yx(field.pitch)
    h, w = field.shape
    spec = sfft.fftshift(sfft.fft2(sfft.ifftshift(field.grid), norm="ortho"))
    lam = field.wavelength
    pitch = (lam * f / (h * py), lam * f / (w * px))
    return ComplexField(spec, pitch, lam)


def from_pupil_plane(field, f):
    """Inverse of :func:`to_pupil_plane`."""
    f = check_positive(f, "f")
    py, px = _pitch_yx(field.pitch)
    h, w = field.shape
    u = sfft.fftshift(sfft.ifft2(sfft.ifftshift(field.grid), norm="ortho"))
    lam = field.wavelength
    pitch = (lam * f / (h * py), lam * f / (w * px))
    return ComplexField(u, pitch, lam)
