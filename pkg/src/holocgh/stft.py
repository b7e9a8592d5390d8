"""Short-time Fourier analysis of a wavefront into an observable light field."""

import numpy as np

from ._validation import DataError, check_int
from .propagation import ComplexField, FieldStack, _pitch_yx
from .targets import LightField

__all__ = ["view_carriers", "StftOperator", "stft_light_field"]


def view_carriers(n_views, pitch, sideband=True):
    """Carrier frequencies ``(fx, fy)`` of a ``U x V`` view grid.

    Horizontal carriers span the full band and vertical ones the upper
    half band when ``sideband`` is set. Both grids are inset half a cell from
    the band edges.
    """
    nu, nv = n_views
    py, px = _pitch_yx(pitch)
    fx = (np.arange(nu) - (nu - 1) / 2.0) / (nu * px)
    if sideband:
        fy = (np.arange(nv) + 0.5) / (2.0 * nv * py)
    else:
        fy = (np.arange(nv) - (nv - 1) / 2.0) / (nv * py)
    return fx, fy


def _bins(freqs, window, pitch, axis):
    k = np.floor(freqs * window * pitch + 0.5).astype(int)
    if np.unique(k % window).size != k.size:
        raise DataError(
            f"{k.size} {axis} views exceed the {window} bins available in a window of {window}"
        )
    return k


class StftOperator:
    """Windowed local DFT restricted to the view carriers.

    ``forward`` maps ``(..., H, W)`` fields to coefficients of shape
    ``(..., V, U, nPy, nPx)``. Each patch uses an orthonormal DFT with a
    rectangular window, so for non-overlapping patches the coefficients of
    all ``window**2`` bins would carry exactly the patch energy.
    """

    def __init__(self, shape, pitch, wavelength, n_views, window=16, hop=16, sideband=True):
        self.shape = tuple(int(s) for s in shape)
        nu, nv = (check_int(n, "n_views", 1) for n in n_views)
        self.window = check_int(window, "window", 1)
        self.hop = check_int(hop, "hop", 1)
        if self.hop > self.window:
            raise ValueError("hop must not exceed window")
        if nu > self.window or nv > self.window:
            raise DataError(f"view grid {nu}x{nv} exceeds window of {self.window} bins")
        h, w = self.shape
        if h < self.window or w < self.window:
            raise DataError(f"field {self.shape} smaller than the STFT window")
        self.n_views = (nu, nv)
        self.pitch = pitch
        self.wavelength = float(wavelength)
        py, px = _pitch_yx(pitch)
        fx, fy = view_carriers((nu, nv), pitch, sideband)
        self.kx = _bins(fx, self.window, px, "horizontal")
        self.ky = _bins(fy, self.window, py, "vertical")
        if sideband and np.any(self.ky < 0):
            raise DataError("vertical views fall outside the sideband")
        self.fx = self.kx / (self.window * px)
        self.fy = self.ky / (self.window * py)
        self.angles_x = np.arcsin(np.clip(self.wavelength * self.fx, -1, 1))
        self.angles_y = np.arcsin(np.clip(self.wavelength * self.fy, -1, 1))
        a = np.arange(self.window)
        self._ex = np.exp(-2j * np.pi * np.outer(self.kx, a) / self.window)
        self._ey = np.exp(-2j * np.pi * np.outer(self.ky, a) / self.window)
        self.grid_shape = ((h - self.window) // self.hop + 1, (w - self.window) // self.hop + 1)
        npy, npx = self.grid_shape
        self._iy = (np.arange(npy)[:, None] * self.hop + a[None, :])
        self._ix = (np.arange(npx)[:, None] * self.hop + a[None, :])

    @property
    def view_pitch(self):
        py, px = _pitch_yx(self.pitch)
        return self.hop * px

    def _patches(self, u):
        npy, npx = self.grid_shape
        w = self.window
        if self.hop == w:
            crop = u[..., :npy * w, :npx * w]
            return crop.reshape(u.shape[:-2] + (npy, w, npx, w))
        return u[..., self._iy[:, :, None, None], self._ix[None, None, :, :]]

    def forward(self, u):
        u = np.asarray(u)
        if u.shape[-2:] != self.shape:
            raise DataError(f"field shape {u.shape[-2:]} does not match operator {self.shape}")
        p = self._patches(u)
        ey = self._ey.astype(np.result_type(u, np.complex64), copy=False)
        ex = self._ex.astype(ey.dtype, copy=False)
        t = np.einsum("...yaxb,ub->...yaxu", p, ex)
        c = np.einsum("va,...yaxu->...vuyx", ey, t)
        return c / self.window

    def adjoint(self, g):
        g = np.asarray(g)
        ey = np.conj(self._ey).astype(np.result_type(g, np.complex64), copy=False)
        ex = np.conj(self._ex).astype(ey.dtype, copy=False)
        t = np.einsum("va,...vuyx->...yaxu", ey, g)
        p = np.einsum("...yaxu,ub->...yaxb", t, ex) / self.window
        lead = g.shape[:-4]
        out = np.zeros(lead + self.shape, dtype=p.dtype)
        npy, npx = self.grid_shape
        w = self.window
        if self.hop == w:
            out[..., :npy * w, :npx * w] = p.reshape(lead + (npy * w, npx * w))
        else:
            iy = np.broadcast_to(self._iy[:, :, None, None], p.shape[-4:])
            ix = np.broadcast_to(self._ix[None, None, :, :], p.shape[-4:])
            flat = out.reshape(lead + (-1,))
            idx = (iy * self.shape[1] + ix).ravel()
            pf = p.reshape(lead + (-1,))
            for li in np.ndindex(lead):
                np.add.at(flat[li], idx, pf[li])
        return out


def stft_light_field(field, n_views, window=16, hop=16, sideband=True):
    """Extract per-view intensity images from a field or a frame stack.

    Returns ``(LightField, energies)`` where ``energies[v, u]`` is the total
    energy in view ``(v, u)``. For a FieldStack the intensities are averaged
    over frames.
    """
    if isinstance(field, ComplexField):
        frames, pitch, lam = field.grid[None], field.pitch, field.wavelength
    elif isinstance(field, FieldStack):
        frames, pitch, lam = field.frames, field.pitch, field.wavelength
    else:
        raise TypeError("field must be a ComplexField or FieldStack")
    op = StftOperator(frames.shape[-2:], pitch, lam, n_views, window, hop, sideband)
    inten = np.mean(np.abs(op.forward(frames)) ** 2, axis=0)
    energies = inten.sum(axis=(-2, -1))
    lf = LightField(inten[None], op.angles_x, op.angles_y, op.view_pitch)
    return lf, energies
