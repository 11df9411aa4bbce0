"""Roughness-driven screen-space blur for mirror reflection images.

The kernel weight at integer pixel offset o is D(cos t, r) * cos t with
t = atan(|o| / d_px): the microfacet distribution shape mapped onto the
screen through a fixed virtual reflection distance of d_px pixels. Other
lobe terms have little influence on the shape and are omitted. Roughness
zero yields the identity kernel; the support radius grabs all but 1e-3
of the tabulated mass and is capped at 3 * d_px to bound cost at high
roughness.

Convolution clamps to the edge, so a constant image is a fixed point.
For spatially varying roughness the image is convolved once per
roughness level and blended per pixel: exact levels when the map has at
most 8 distinct values, otherwise 8 uniform quantization bins with
linear interpolation between the two nearest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .bsdf import ggx_d
from .errors import ValidationError
from .imageio import ImagePlane

DEFAULT_KERNEL_DISTANCE = 64
TAIL_MASS = 1e-3
RADIUS_CAP_FACTOR = 3
ROUGHNESS_BINS = 8


@dataclass(frozen=True)
class GgxKernel:
    """Normalized (2R+1)^2 filter for one roughness at fixed distance."""

    weights: np.ndarray
    roughness: float
    d_px: int

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 != 1:
            raise ValidationError(f"bad kernel shape {w.shape}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def radius(self) -> int:
        return self.weights.shape[0] // 2

    def variance(self) -> float:
        """Second moment of the weights about the center, in px^2."""
        r = self.radius
        dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
        return float(np.sum(self.weights * (dx * dx + dy * dy)))


def build_kernel(roughness, d_px=DEFAULT_KERNEL_DISTANCE) -> GgxKernel:
    if d_px < 1:
        raise ValidationError(f"d_px must be >= 1, got {d_px}")
    if roughness <= 0.0:
        return GgxKernel(np.ones((1, 1)), 0.0, d_px)
    cap = RADIUS_CAP_FACTOR * int(d_px)
    dy, dx = np.mgrid[-cap : cap + 1, -cap : cap + 1]
    theta = np.arctan(np.hypot(dx, dy) / d_px)
    cos_t = np.cos(theta)
    weights = ggx_d(cos_t, roughness) * cos_t
    # smallest square window holding all but TAIL_MASS of the capped mass
    cheb = np.maximum(np.abs(dx), np.abs(dy))
    ring_mass = np.bincount(cheb.ravel(), weights=weights.ravel(), minlength=cap + 1)
    cum = np.cumsum(ring_mass)
    total = cum[-1]
    radius = int(np.searchsorted(cum, (1.0 - TAIL_MASS) * total))
    radius = min(radius, cap)
    sel = slice(cap - radius, cap + radius + 1)
    weights = weights[sel, sel]
    return GgxKernel(weights / weights.sum(), float(roughness), int(d_px))


def convolve(img: ImagePlane, kernel: GgxKernel) -> ImagePlane:
    """Dense 2D convolution with clamp-to-edge borders."""
    r = kernel.radius
    if r == 0:
        return img
    padded = np.pad(img.data.astype(np.float64), ((r, r), (r, r), (0, 0)), mode="edge")
    out = np.empty_like(img.data, dtype=np.float64)
    for c in range(img.channels):
        out[:, :, c] = fftconvolve(padded[:, :, c], kernel.weights, mode="valid")
    return ImagePlane(out.astype(np.float32))


def convolve_twice(img: ImagePlane, kernel: GgxKernel) -> ImagePlane:
    """Two passes of the same kernel (the wider two-interface spread)."""
    return convolve(convolve(img, kernel), kernel)


def _blend_levels(img, rough, levels, d_px, passes):
    """Convolve img at each roughness level, then blend per pixel."""
    blurred = []
    for lv in levels:
        k = build_kernel(lv, d_px)
        out = img
        for _ in range(passes):
            out = convolve(out, k)
        blurred.append(out.data.astype(np.float64))
    stack = np.stack(blurred)  # (L, H, W, C)
    if len(levels) == 1:
        return ImagePlane(stack[0].astype(np.float32))
    lv = np.asarray(levels, np.float64)
    idx = np.clip(np.searchsorted(lv, rough, side="right") - 1, 0, len(lv) - 2)
    lo = lv[idx]
    hi = lv[idx + 1]
    frac = np.where(hi > lo, (rough - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)[:, :, None]
    rows, cols = np.indices(rough.shape)
    out = stack[idx, rows, cols] * (1.0 - frac) + stack[idx + 1, rows, cols] * frac
    return ImagePlane(out.astype(np.float32))


def blur_by_roughness(img: ImagePlane, roughness: ImagePlane, d_px=DEFAULT_KERNEL_DISTANCE,
                      passes=1) -> ImagePlane:
    """Roughness-map-driven blur of a 3-channel HDR image.

    passes=2 applies the kernel twice at each level (transmission goes
    through two interfaces of equal roughness).
    """
    if img.channels != 3:
        raise ValidationError("blur_by_roughness expects a 3-channel image")
    if roughness.data.shape[:2] != img.data.shape[:2]:
        raise ValidationError("roughness map and image sizes differ")
    rough = roughness.data[:, :, 0].astype(np.float64)
    uniq = np.unique(rough)
    if uniq.size <= ROUGHNESS_BINS:
        levels = uniq.tolist()
    else:
        levels = np.linspace(0.0, 1.0, ROUGHNESS_BINS).tolist()
    return _blend_levels(img, rough, levels, d_px, passes)
