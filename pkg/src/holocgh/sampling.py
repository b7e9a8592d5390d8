"""Light-field angular sampling requirements.

Spatial bandwidth ``B_x`` is the full bandwidth, twice the highest spatial
frequency. A target resolution of ``nu`` cycles per degree seen through an
eyepiece of focal length ``f`` gives ``B_x = 2 nu (180/pi) / f`` cycles per
meter.
"""

import math
from typing import NamedTuple

from ._validation import check_positive
from .optics import half_depth_for_range

__all__ = [
    "ViewRequirement",
    "bandwidth_from_cpd",
    "cutoff_cpd",
    "required_views",
    "max_depth_range",
    "sampling_table",
    "half_depth_for_range",
]


class ViewRequirement(NamedTuple):
    views: int
    raw: float


def bandwidth_from_cpd(cpd, f):
    return 2.0 * check_positive(cpd, "cpd", allow_zero=True) * (180.0 / math.pi) / check_positive(f, "f")


def cutoff_cpd(f, pixel_pitch):
    """Highest resolvable resolution ``f / (2p) * pi / 180`` in cycles per degree."""
    return f / (2.0 * pixel_pitch) * math.pi / 180.0


def required_views(d_max, f, wavelength, cpd=None, bandwidth=None, pixel_pitch=None):
    """Views per axis needed to reproduce ``bandwidth`` over ``d_max`` diopters.

    Give either ``cpd`` or ``bandwidth``. With ``pixel_pitch`` the resolution is
    checked against the display cutoff.
    """
    if (cpd is None) == (bandwidth is None):
        raise ValueError("give exactly one of cpd or bandwidth")
    f = check_positive(f, "f")
    wavelength = check_positive(wavelength, "wavelength")
    if cpd is not None:
        if pixel_pitch is not None:
            cut = cutoff_cpd(f, pixel_pitch)
            if cpd > cut:
                raise ValueError(
                    f"{cpd:g} cpd exceeds the cutoff of {cut:.3g} cpd for f={f * 1e3:g} mm"
                )
        bandwidth = bandwidth_from_cpd(cpd, f)
    bandwidth = check_positive(bandwidth, "bandwidth", allow_zero=True)
    z_o = half_depth_for_range(d_max, f)
    raw = wavelength * z_o * bandwidth ** 2
    # guard against round-off pushing an exact integer over the edge
    n = max(1, math.ceil(raw - 1e-9 * max(raw, 1.0)))
    return ViewRequirement(n, raw)


def max_depth_range(n_views, bandwidth, f, wavelength):
    """Largest dioptric range reproducible with ``n_views`` views per axis.

    Returns ``inf`` when the view count suffices for any depth.
    """
    n = check_positive(n_views, "n_views")
    bandwidth = check_positive(bandwidth, "bandwidth", allow_zero=True)
    f = check_positive(f, "f")
    wavelength = check_positive(wavelength, "wavelength")
    den = f * (f * wavelength * bandwidth ** 2 - 2.0 * n)
    if den <= 0:
        return math.inf
    return 2.0 * n / den


def sampling_table(cpds, focal_lengths, depth_ranges, wavelength, pixel_pitch=None):
    """Rows of ``(f, cpd, d_max, views, raw)``; resolutions above cutoff are skipped."""
    rows = []
    for f in focal_lengths:
        for cpd in cpds:
            if pixel_pitch is not None and cpd > cutoff_cpd(f, pixel_pitch):
                continue
            for d in depth_ranges:
                req = required_views(d, f, wavelength, cpd=cpd)
                rows.append((f, cpd, float(d), req.views, req.raw))
    return rows

