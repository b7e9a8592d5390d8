"""Supervision specs and amplitude losses with analytic gradients.

Binary frames ``q`` have shape ``(C, T, H, W)``. Each loss compares the scaled
time-averaged reconstructed amplitude ``s * sqrt(mean_t |P q_t|^2)`` with a
target amplitude. The per-channel scale ``s`` is the closed-form least-squares
fit at every call and is treated as a constant when differentiating, which is
exact because the loss is stationary in ``s`` at its optimum.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from ._validation import DataError, as_channels
from .optics import diopters_to_distance
from .propagation import AsmPropagator
from .stft import StftOperator

__all__ = [
    "SupervisionSpec",
    "multiplane_spec",
    "focal_stack_spec",
    "light_field_spec",
    "fit_scale",
    "SupervisionLoss",
    "loss_2p5d",
    "loss_3d",
    "loss_4d",
]

MODES = ("2.5d", "3d", "4d")


@dataclass(frozen=True)
class SupervisionSpec:
    """What to reconstruct and where.

    ``target`` is ``(C, H, W)`` for 2.5d, ``(C, K, H, W)`` for 3d and
    ``(C, V, U, nPy, nPx)`` for 4d. ``distances`` are propagation distances
    from the SLM: one per plane for 2.5d/3d and the WRP distance for 4d.
    """

    mode: str
    target: np.ndarray
    distances: tuple
    masks: np.ndarray = None
    diopters: tuple = ()
    n_views: tuple = None
    window: int = 16
    hop: int = 16

    def __post_init__(self):
        mode = str(self.mode).lower()
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        t = np.asarray(self.target, dtype=float)
        d = tuple(float(z) for z in np.atleast_1d(self.distances))
        object.__setattr__(self, "distances", d)
        if mode == "2.5d":
            t = as_channels(t, "target")
            m = np.asarray(self.masks, dtype=float) if self.masks is not None else None
            if m is None or m.ndim != 3 or m.shape[1:] != t.shape[1:]:
                raise DataError("2.5d supervision needs (K, H, W) masks matching the target")
            if m.shape[0] != len(d):
                raise DataError(f"{m.shape[0]} masks but {len(d)} plane distances")
            object.__setattr__(self, "masks", m)
        elif mode == "3d":
            t = as_channels(t, "target", 3)
            if t.shape[1] != len(d):
                raise DataError(f"{t.shape[1]} focal slices but {len(d)} plane distances")
        else:
            t = as_channels(t, "target", 4)
            if len(d) != 1:
                raise DataError("4d supervision uses a single WRP distance")
            if self.n_views is None:
                object.__setattr__(self, "n_views", (t.shape[2], t.shape[1]))
            elif tuple(self.n_views) != (t.shape[2], t.shape[1]):
                raise DataError(f"view grid {self.n_views} does not match target {t.shape[1:3]}")
        object.__setattr__(self, "target", t)

    @property
    def n_channels(self):
        return self.target.shape[0]


def multiplane_spec(amplitude, masks, cfg):
    """2.5D spec from an amplitude image and a MaskSet."""
    dist = diopters_to_distance(cfg, masks.diopters)
    return SupervisionSpec("2.5d", amplitude, np.atleast_1d(dist), masks=masks.masks,
                           diopters=tuple(np.atleast_1d(masks.diopters)))


def focal_stack_spec(stack, cfg):
    dist = diopters_to_distance(cfg, stack.diopters)
    return SupervisionSpec("3d", stack.slices, np.atleast_1d(dist),
                           diopters=tuple(stack.diopters))


def _patch_average(views, op):
    p = op._patches(views)
    return p.mean(axis=(-3, -1))


def light_field_spec(lf, cfg, window=16, hop=16):
    """4D spec from an orthographic light field of amplitudes.

    Views given at SLM resolution are averaged over each STFT patch.
    """
    op = StftOperator(cfg.shape, cfg.pixel_pitch, cfg.wavelengths[0], lf.n_views, window, hop,
                      cfg.sideband)
    views = lf.views
    if views.shape[-2:] == cfg.shape and cfg.shape != op.grid_shape:
        views = _patch_average(views, op)
    if views.shape[-2:] != op.grid_shape:
        raise DataError(
            f"light-field views {views.shape[-2:]} match neither the SLM {cfg.shape} "
            f"nor the patch grid {op.grid_shape}"
        )
    if views.shape[0] != cfg.n_channels:
        raise DataError(f"light field has {views.shape[0]} channels, config has {cfg.n_channels}")
    return SupervisionSpec("4d", views, (cfg.wrp_distance,), n_views=lf.n_views,
                           window=window, hop=hop)


def fit_scale(recon, target, weights=None, channel_axis="auto"):
    """Least-squares scale ``sum(w r t) / sum(w r^2)``.

    One scale per entry along ``channel_axis``. By default arrays with three or
    more dimensions are treated as channel-first and lower-dimensional ones
    get a single scalar.
    """
    r = np.asarray(recon, dtype=float)
    t = np.broadcast_to(np.asarray(target, dtype=float), r.shape)
    w = np.ones_like(r) if weights is None else np.broadcast_to(
        np.asarray(weights, dtype=float), r.shape)
    if channel_axis == "auto":
        channel_axis = 0 if r.ndim >= 3 else None
    if channel_axis is None:
        axes = None
    else:
        axes = tuple(i for i in range(r.ndim) if i != channel_axis % r.ndim)
    num = np.atleast_1d(np.sum(w * r * t, axis=axes))
    den = np.atleast_1d(np.sum(w * r * r, axis=axes))
    s = np.ones_like(den)
    ok = den > 0
    if not np.all(ok):
        warnings.warn("zero-energy reconstruction; scale set to 1", RuntimeWarning, stacklevel=2)
    s[ok] = num[ok] / den[ok]
    return float(s[0]) if channel_axis is None else s


class SupervisionLoss:
    """Loss and gradient evaluator for one spec on a fixed SLM grid.

    Parameters
    ----------
    spec : SupervisionSpec
    cfg : OpticalConfig
    dtype : numpy float dtype of the frames; complex work follows it.
    scale : "fit" or a fixed positive float.
    """

    def __init__(self, spec, cfg, dtype=np.float64, scale="fit", pad=True):
        self.spec = spec
        self.cfg = cfg
        self.dtype = np.dtype(dtype)
        self.cdtype = np.complex64 if self.dtype == np.float32 else np.complex128
        self.scale = scale
        if spec.n_channels != cfg.n_channels:
            raise DataError(f"target has {spec.n_channels} channels, config has {cfg.n_channels}")
        if spec.mode == "4d":
            self.shape = cfg.shape
        else:
            self.shape = spec.target.shape[-2:]
        self.props = [
            AsmPropagator(self.shape, cfg.pixel_pitch, lam, spec.distances, cfg.sideband, pad,
                          dtype=self.cdtype)
            for lam in cfg.wavelengths
        ]
        self.stfts = None
        if spec.mode == "4d":
            self.stfts = [
                StftOperator(self.shape, cfg.pixel_pitch, lam, spec.n_views, spec.window,
                             spec.hop, cfg.sideband)
                for lam in cfg.wavelengths
            ]
            grid = self.stfts[0].grid_shape
            if spec.target.shape[-2:] != grid:
                raise DataError(f"target patch grid {spec.target.shape[-2:]} != {grid}")
        tgt = spec.target.astype(self.dtype)
        if spec.mode == "2.5d":
            w = spec.masks.astype(self.dtype)
            self._target = tgt[:, None]  # (C, 1, H, W) against (C, K, H, W)
            self._weights = w[None]
            self._norm = tgt.shape[0] * w.shape[0] * w.shape[1] * w.shape[2]
        else:
            self._target = tgt
            self._weights = None
            self._norm = tgt.size

    def _check(self, q):
        q = np.asarray(q)
        if q.ndim == 3:
            q = q[None]
        if q.ndim != 4 or q.shape[0] != self.spec.n_channels or q.shape[-2:] != tuple(self.shape):
            raise DataError(
                f"frames of shape {q.shape} do not match (C={self.spec.n_channels}, T, "
                f"{self.shape[0]}, {self.shape[1]})"
            )
        return q

    def fields(self, q, c):
        """Complex fields ``(T, ...)`` observed by channel ``c``'s loss."""
        u = self.props[c].forward(q[c])  # (T, K, H, W)
        if self.stfts is not None:
            u = self.stfts[c].forward(u[:, 0])  # (T, V, U, y, x)
        return u

    def amplitude(self, q):
        q = self._check(q)
        return np.stack([np.sqrt(np.mean(np.abs(self.fields(q, c)) ** 2, axis=0))
                         for c in range(q.shape[0])])

    def evaluate(self, q, grad=True):
        """Return ``(loss, dL/dq, scales)``; the gradient is None if not requested."""
        q = self._check(q)
        nc, nt = q.shape[:2]
        us = [self.fields(q, c) for c in range(nc)]
        amp = np.stack([np.sqrt(np.mean(np.abs(u) ** 2, axis=0)) for u in us])
        w = self._weights
        if self.scale == "fit":
            s = fit_scale(amp, self._target, w, channel_axis=0)
        else:
            s = np.full(nc, float(self.scale))
        s = np.asarray(s, dtype=self.dtype).reshape((nc,) + (1,) * (amp.ndim - 1))
        resid = s * amp - self._target
        wr = resid if w is None else w * resid
        loss = float(np.sum(wr * resid, dtype=np.float64) / self._norm)
        if not grad:
            return loss, None, s.ravel().astype(float)
        d_amp = 2.0 * s * wr / self._norm
        with np.errstate(divide="ignore", invalid="ignore"):
            d_int = np.where(amp > 0, d_amp / (2.0 * amp), 0.0).astype(self.dtype)
        gq = np.empty(q.shape, dtype=self.dtype)
        for c in range(nc):
            g = (d_int[c] * (2.0 / nt)) * us[c]
            if self.stfts is not None:
                g = self.stfts[c].adjoint(g)[:, None]
            gq[c] = np.real(self.props[c].adjoint(g))
        return loss, gq, s.ravel().astype(float)


def _mode_loss(mode, q, spec, cfg, **kw):
    if spec.mode != mode:
        raise ValueError(f"spec mode is {spec.mode!r}, expected {mode!r}")
    return SupervisionLoss(spec, cfg, dtype=np.asarray(q).dtype if np.asarray(q).dtype.kind == "f"
                           else np.float64, **kw).evaluate(q)[:2]


def loss_2p5d(q, spec, cfg, **kw):
    """Masked multiplane amplitude MSE, averaged over planes."""
    return _mode_loss("2.5d", q, spec, cfg, **kw)


def loss_3d(q, spec, cfg, **kw):
    """Unmasked focal-stack amplitude MSE."""
    return _mode_loss("3d", q, spec, cfg, **kw)


def loss_4d(q, spec, cfg, **kw):
    """Light-field amplitude MSE through the STFT."""
    return _mode_loss("4d", q, spec, cfg, **kw)
