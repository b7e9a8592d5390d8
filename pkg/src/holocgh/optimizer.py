"""Gradient-descent synthesis of time-multiplexed binary SLM frames."""

from dataclasses import dataclass
import logging

import numpy as np

from ._validation import check_int, check_positive
from .losses import SupervisionLoss
from .quantization import GumbelQuantizer, UnitGradientQuantizer, quantize_hard, temperature

__all__ = [
    "OptimizerConfig",
    "SlmVariables",
    "OptimizationResult",
    "DivergenceError",
    "Adam",
    "default_learning_rate",
    "optimize",
]

log = logging.getLogger(__name__)

SURROGATES = {"gumbel": GumbelQuantizer, "unit": UnitGradientQuantizer}


class DivergenceError(FloatingPointError):
    """The loss became non-finite."""


def default_learning_rate(num_frames):
    """0.1 for up to two frames, 0.4 from eight, linear in between."""
    t = float(num_frames)
    return float(np.interp(t, [2.0, 8.0], [0.1, 0.4]))


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = None
    iterations: int = 2000
    surrogate: str = "gumbel"
    tau_start: float = 1.0
    tau_decay: float = 0.999
    tau_min: float = 0.1
    sharpness: float = 1.0
    seed: int = 0
    precision: str = "float32"

    def __post_init__(self):
        if self.learning_rate is not None:
            check_positive(self.learning_rate, "learning_rate")
        check_int(self.iterations, "iterations", 1)
        if self.surrogate not in SURROGATES:
            raise ValueError(f"surrogate must be one of {sorted(SURROGATES)}")
        check_positive(self.tau_start, "tau_start")
        check_positive(self.tau_decay, "tau_decay")
        check_positive(self.tau_min, "tau_min")
        check_positive(self.sharpness, "sharpness")
        if self.precision not in ("float32", "float64"):
            raise ValueError("precision must be float32 or float64")


@dataclass
class SlmVariables:
    logits: np.ndarray  # (C, T, H, W)
    tau: float
    iteration: int


@dataclass
class OptimizationResult:
    variables: SlmVariables
    frames: np.ndarray  # binary (C, T, H, W)
    loss_trace: np.ndarray
    scale_trace: np.ndarray  # (iterations, C)
    final_loss: float
    final_scale: np.ndarray
    config: OptimizerConfig


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, x, g):
        if self.m is None:
            self.m = np.zeros_like(x)
            self.v = np.zeros_like(x)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g * g
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        return x - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _initial_logits(spec, cfg, loss, dtype, seed):
    shape = (spec.n_channels, cfg.num_frames) + tuple(loss.shape)
    return np.random.default_rng(seed).uniform(0.0, 1.0, shape).astype(dtype)


def optimize(cfg, spec, opt=None, init=None, callback=None):
    """Optimize binary frames for ``spec``.

    Parameters
    ----------
    cfg : OpticalConfig
    spec : SupervisionSpec
    opt : OptimizerConfig, optional
    init : array, optional
        Starting logits ``(C, T, H, W)``; drawn uniformly in [0, 1) if omitted.
    callback : callable, optional
        Called as ``callback(k, loss, logits)`` after each step.
    """
    opt = opt or OptimizerConfig()
    dtype = np.dtype(opt.precision)
    loss_fn = SupervisionLoss(spec, cfg, dtype=dtype)
    seeds = np.random.SeedSequence(opt.seed).spawn(2)
    if init is None:
        a = _initial_logits(spec, cfg, loss_fn, dtype, seeds[0])
    else:
        a = np.array(init, dtype=dtype)
        if a.ndim == 3:
            a = a[None]
    quant = SURROGATES[opt.surrogate](np.random.default_rng(seeds[1]), opt.sharpness)
    lr = opt.learning_rate or default_learning_rate(a.shape[1])
    adam = Adam(lr)
    losses = np.empty(opt.iterations)
    scales = np.empty((opt.iterations, a.shape[0]))
    tau = opt.tau_start
    for k in range(opt.iterations):
        tau = temperature(k, opt.tau_start, opt.tau_decay, opt.tau_min)
        q, dq = quant(a, tau)
        loss, gq, s = loss_fn.evaluate(q)
        if not np.isfinite(loss) or not np.all(np.isfinite(gq)):
            raise DivergenceError(f"non-finite loss at iteration {k}")
        losses[k] = loss
        scales[k] = s
        a = adam.step(a, (gq * dq).astype(dtype, copy=False))
        if callback is not None:
            callback(k, loss, a)
        if log.isEnabledFor(logging.DEBUG) and k % 100 == 0:
            log.debug("iter %d loss %.6g tau %.3g", k, loss, tau)
    frames = quantize_hard(a).astype(np.uint8)
    final_loss, _, final_s = loss_fn.evaluate(frames.astype(dtype), grad=False)
    return OptimizationResult(
        variables=SlmVariables(a, tau, opt.iterations),
        frames=frames,
        loss_trace=losses,
        scale_trace=scales,
        final_loss=final_loss,
        final_scale=final_s,
        config=opt,
    )

