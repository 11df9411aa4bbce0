"""Layered recomposition of the final image from intrinsic channels.

Three layers are assembled per pixel and summed with material weights:

  diffuse:      albedo * irradiance
  specular:     (A*F0 + B) * blur(reflection)
  transmission: (A*F0 + B) * blur(blur(background)) * albedo

(A, B) come from the environment-BRDF table at (roughness, cos of the
view angle); F0 blends the dielectric constant toward the albedo with
metallic. The blur kernel follows the per-pixel roughness map; the
transmission layer is blurred twice because light crosses two interfaces
of the thin surface, and the extra albedo factor models absorption on
the way through. The final image is

  (1 - T) (1 - M) * diffuse + specular + T * transmission

with the effective metallic already zeroed wherever T > 0. Multi-bounce
reflections and color bleeding are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blur import DEFAULT_KERNEL_DISTANCE, blur_by_roughness
from .brdf_lut import BrdfLut
from .bsdf import f0_from_ior
from .channels import ChannelSet
from .errors import ValidationError
from .imageio import ImagePlane, encode_srgb

MIN_VIEW_COS = 0.02  # keeps grazing lookups off the table border


@dataclass(frozen=True)
class LayerStack:
    diffuse: ImagePlane
    specular: ImagePlane
    transmission: ImagePlane
    final: ImagePlane


def view_cos(cs: ChannelSet) -> np.ndarray:
    """Per-pixel cosine between the normal and the ray to the camera."""
    dirs = cs.camera_or_default().pixel_dirs()
    cos_v = -np.sum(dirs * cs.normal.data.astype(np.float64), axis=-1)
    return np.clip(cos_v, MIN_VIEW_COS, 1.0)


def _split_sum_gain(cs: ChannelSet, lut: BrdfLut) -> np.ndarray:
    """(A*F0 + B) per pixel, RGB."""
    a_lut, b_lut = lut.lookup(cs.roughness.data[:, :, 0], view_cos(cs))
    f0_base = f0_from_ior(cs.ior)
    m = cs.metallic.data.astype(np.float64)
    f0 = f0_base * (1.0 - m) + cs.albedo.data.astype(np.float64) * m
    return a_lut[:, :, None] * f0 + b_lut[:, :, None]


def diffuse_layer(cs: ChannelSet) -> ImagePlane:
    return ImagePlane(cs.albedo.data * cs.irradiance.data)


def specular_layer(cs: ChannelSet, lut: BrdfLut, d_px=DEFAULT_KERNEL_DISTANCE) -> ImagePlane:
    if cs.reflection is None:
        raise ValidationError("specular layer needs the mirror reflection channel")
    blurred = blur_by_roughness(cs.reflection, cs.roughness, d_px)
    return ImagePlane((_split_sum_gain(cs, lut) * blurred.data).astype(np.float32))


def transmission_layer(cs: ChannelSet, lut: BrdfLut, d_px=DEFAULT_KERNEL_DISTANCE) -> ImagePlane:
    bg = blur_by_roughness(cs.background_or_default(), cs.roughness, d_px, passes=2)
    gain = _split_sum_gain(cs, lut) * cs.albedo.data
    return ImagePlane((gain * bg.data).astype(np.float32))


def compose(cs: ChannelSet, lut: BrdfLut, d_px=DEFAULT_KERNEL_DISTANCE) -> LayerStack:
    i_diff = diffuse_layer(cs)
    i_spec = specular_layer(cs, lut, d_px)
    i_tran = transmission_layer(cs, lut, d_px)
    t = cs.transparency.data
    m = cs.metallic.data
    final = (1.0 - t) * (1.0 - m) * i_diff.data + i_spec.data + t * i_tran.data
    return LayerStack(i_diff, i_spec, i_tran, ImagePlane(final.astype(np.float32)))


def tonemap(img: ImagePlane, mode="clamp-srgb", exposure=1.0) -> ImagePlane:
    """HDR linear -> display-encoded [0,1] floats."""
    x = img.data.astype(np.float64) * exposure
    if mode == "reinhard-srgb":
        x = x / (1.0 + x)
    elif mode != "clamp-srgb":
        raise ValidationError(f"unknown tonemap mode {mode!r}")
    x = np.clip(x, 0.0, 1.0)
    return ImagePlane(encode_srgb(x).astype(np.float32))
