"""Binary quantization and its surrogate gradients."""

import numpy as np
from scipy.special import expit

from ._validation import check_positive, check_random_state

__all__ = [
    "quantize_hard",
    "quantize_relaxed",
    "unit_gradient",
    "GumbelQuantizer",
    "UnitGradientQuantizer",
    "temperature",
]


def quantize_hard(a):
    """Threshold at 0.5; ties go to 1."""
    a = np.asarray(a)
    return (a >= 0.5).astype(a.dtype if a.dtype.kind == "f" else float)


def _soft(a, tau, noise, sharpness):
    z = sharpness * (2.0 * a - 1.0) / tau
    return expit((z + noise) / tau)


def quantize_relaxed(a, tau, seed=None, sharpness=1.0, return_soft=False):
    """Two-class Gumbel-Softmax sample with a straight-through forward.

    The class logit gap is ``sharpness * (2a - 1) / tau``; the Gumbel noise gap
    ``g1 - g0`` is drawn from ``seed``. Returns ``(hard, grad)`` where ``grad``
    is d(soft)/da, plus ``soft`` if requested.
    """
    tau = check_positive(tau, "tau")
    a = np.asarray(a)
    rng = check_random_state(seed)
    noise = rng.logistic(size=a.shape).astype(a.dtype if a.dtype.kind == "f" else float)
    soft = _soft(a, tau, noise, sharpness)
    hard = (soft >= 0.5).astype(soft.dtype)
    grad = soft * (1.0 - soft) * (2.0 * sharpness / (tau * tau))
    if return_soft:
        return hard, grad, soft
    return hard, grad


def unit_gradient(a):
    """Hard forward with an identity gradient inside [0, 1] and zero outside."""
    a = np.asarray(a)
    grad = ((a >= 0) & (a <= 1)).astype(a.dtype if a.dtype.kind == "f" else float)
    return quantize_hard(a), grad


def temperature(iteration, start=1.0, decay=0.999, floor=0.1):
    return max(floor, start * decay ** iteration)


class GumbelQuantizer:
    """Stateful Gumbel-Softmax quantizer with its own noise stream."""

    name = "gumbel"

    def __init__(self, seed=None, sharpness=1.0):
        self.rng = check_random_state(seed)
        self.sharpness = float(sharpness)

    def __call__(self, a, tau):
        return quantize_relaxed(a, tau, self.rng, self.sharpness)


class UnitGradientQuantizer:
    name = "unit"

    def __init__(self, seed=None, sharpness=1.0):
        pass

    def __call__(self, a, tau):
        return unit_gradient(a)
