"""Small input-validation helpers shared across modules."""

import numbers

import numpy as np


class DataError(ValueError):
    """Raised when input data is malformed or inconsistent."""


def check_positive(value, name, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if allow_zero:
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    elif value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_pair(value, name, cast=float):
    try:
        a, b = value
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a pair, got {value!r}") from None
    return cast(a), cast(b)


def check_finite_array(x, name, ndim=None, dtype=None):
    x = np.asarray(x) if dtype is None else np.asarray(x, dtype=dtype)
    if ndim is not None:
        allowed = (ndim,) if isinstance(ndim, int) else tuple(ndim)
        if x.ndim not in allowed:
            raise DataError(f"{name} must have ndim in {allowed}, got shape {x.shape}")
    if x.size and not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")
    return x


def as_channels(x, name, ndim_base=2):
    """Promote an array to have a leading channel axis.

    An array with ``ndim_base`` dimensions gets a singleton channel axis;
    one with ``ndim_base + 1`` is returned unchanged.
    """
    x = np.asarray(x)
    if x.ndim == ndim_base:
        return x[None]
    if x.ndim == ndim_base + 1:
        return x
    raise DataError(
        f"{name} must have {ndim_base} or {ndim_base + 1} dimensions, got shape {x.shape}"
    )


def check_same_shape(a, b, names=("a", "b")):
    if np.shape(a) != np.shape(b):
        raise DataError(f"shape mismatch: {names[0]} {np.shape(a)} vs {names[1]} {np.shape(b)}")


def check_random_state(seed):
    """Return a numpy Generator from a seed, Generator or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
