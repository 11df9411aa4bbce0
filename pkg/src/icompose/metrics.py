"""Image comparison metrics on display-encoded values."""

from __future__ import annotations

import math

import numpy as np

from .compose import tonemap
from .errors import ValidationError
from .imageio import ImagePlane


def to_display(img: ImagePlane, exposure=1.0) -> ImagePlane:
    """Clamp + sRGB-encode an HDR image for metric comparison."""
    return tonemap(img, "clamp-srgb", exposure)


def mse(a: ImagePlane, b: ImagePlane) -> float:
    if a.data.shape != b.data.shape:
        raise ValidationError(f"image sizes differ: {a.data.shape} vs {b.data.shape}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    return float(np.mean(diff * diff))


def mae(a: ImagePlane, b: ImagePlane) -> float:
    if a.data.shape != b.data.shape:
        raise ValidationError(f"image sizes differ: {a.data.shape} vs {b.data.shape}")
    return float(np.mean(np.abs(a.data.astype(np.float64) - b.data.astype(np.float64))))


def psnr(a: ImagePlane, b: ImagePlane) -> float:
    """10 log10(1 / MSE) against a unit peak; inf for identical images."""
    m = mse(a, b)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / m)
