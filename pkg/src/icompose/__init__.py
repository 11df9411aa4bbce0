"""Deterministic compositor for intrinsic image channels.

Recomposes photoreal images from per-pixel geometry (normals, depth),
material scalars (albedo, roughness, metallic, transparency) and
illumination (diffuse irradiance, mirror reflections, background
radiance), with thin-surface transmission on top of the usual
reflection-only material model. Ships a Monte Carlo reference renderer
for validation, a CLI, and an HTTP compose service.
"""

from .blur import DEFAULT_KERNEL_DISTANCE, GgxKernel, build_kernel, blur_by_roughness, convolve, convolve_twice
from .brdf_lut import BrdfLut, bake_lut, integrate_cell, load_lut, save_lut
from .bsdf import (
    DEFAULT_IOR,
    MaterialSample,
    eval_bsdf,
    eval_diffuse,
    eval_specular,
    eval_transmission,
    f0_effective,
    f0_from_ior,
    fresnel_coefficient,
    fresnel_schlick,
    ggx_d,
    lobe_weights,
    sample_ggx_h,
    smith_g,
    transmission_half_vector,
)
from .camera import Camera
from .channels import ChannelSet
from .compose import LayerStack, compose, diffuse_layer, specular_layer, tonemap, transmission_layer
from .errors import IComposeError, ImageIOError, ManifestError, ValidationError
from .imageio import ImagePlane, decode_srgb, encode_srgb, load_image, load_pfm, save_image, save_pfm
from .manifest import Manifest, load_channelset, load_manifest, parse_manifest
from .metrics import mae, mse, psnr
from .reference import (
    BackgroundPlane,
    RenderSettings,
    SlabScene,
    env_lookup,
    render,
    render_irradiance,
)
from .ssr import ReflectionLayer, SsrConfig, fill_holes, trace_reflections

__version__ = "0.1.0"
