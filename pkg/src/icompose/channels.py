"""The intrinsic channel bundle an image is recomposed from.

Geometry: per-pixel normals in view space ([-1,1]) and normalized depth.
Materials: albedo plus the roughness/metallic/transparency scalars
(packed R->red, M->green, T->blue in files). Illumination: diffuse
irradiance, the mirror reflection image, and the radiance behind
transparent surfaces (optional, defaults to white). Transparent pixels
force metallic to zero at construction, mirroring the material rule.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .bsdf import DEFAULT_IOR
from .camera import Camera
from .errors import ValidationError
from .imageio import ImagePlane


def _check_range(name, plane, lo, hi):
    d = plane.data
    if np.any(d < lo) or np.any(d > hi):
        raise ValidationError(
            f"channel {name} outside [{lo}, {hi}]: "
            f"min {d.min():.4g}, max {d.max():.4g}"
        )


@dataclass(frozen=True)
class ChannelSet:
    normal: ImagePlane
    depth: ImagePlane
    albedo: ImagePlane
    roughness: ImagePlane
    metallic: ImagePlane
    transparency: ImagePlane
    irradiance: ImagePlane
    reflection: Optional[ImagePlane] = None
    background: Optional[ImagePlane] = None
    camera: Optional[Camera] = None
    ior: float = DEFAULT_IOR

    def __post_init__(self):
        sizes = set()
        for name in ("normal", "depth", "albedo", "roughness", "metallic",
                     "transparency", "irradiance", "reflection", "background"):
            plane = getattr(self, name)
            if plane is not None:
                sizes.add((plane.height, plane.width))
        if len(sizes) != 1:
            raise ValidationError(f"channel resolutions differ: {sorted(sizes)}")
        for name, ch in (("normal", 3), ("depth", 1), ("albedo", 3),
                         ("roughness", 1), ("metallic", 1), ("transparency", 1),
                         ("irradiance", 3)):
            if getattr(self, name).channels != ch:
                raise ValidationError(f"channel {name} must have {ch} channels")
        _check_range("normal", self.normal, -1.0, 1.0)
        _check_range("depth", self.depth, 0.0, 1.0)
        _check_range("albedo", self.albedo, 0.0, 1.0)
        for name in ("roughness", "metallic", "transparency"):
            _check_range(name, getattr(self, name), 0.0, 1.0)
        for name in ("irradiance", "reflection", "background"):
            plane = getattr(self, name)
            if plane is not None and np.any(plane.data < 0.0):
                raise ValidationError(f"channel {name} must be non-negative")
        if self.ior < 1.0:
            raise ValidationError(f"ior must be >= 1, got {self.ior}")
        # transparent pixels cannot be metallic
        t = self.transparency.data
        if np.any((t > 0.0) & (self.metallic.data > 0.0)):
            m = np.where(t > 0.0, np.float32(0.0), self.metallic.data)
            object.__setattr__(self, "metallic", ImagePlane(m))

    @property
    def width(self) -> int:
        return self.normal.width

    @property
    def height(self) -> int:
        return self.normal.height

    def background_or_default(self) -> ImagePlane:
        if self.background is not None:
            return self.background
        return ImagePlane.constant(self.width, self.height, 3, 1.0)

    def camera_or_default(self) -> Camera:
        if self.camera is not None:
            return self.camera
        return Camera(self.width, self.height)

    def with_overrides(self, albedo=None, roughness=None, metallic=None,
                       transparency=None, mask: Optional[ImagePlane] = None) -> "ChannelSet":
        """New set with material planes replaced globally or under a mask.

        Scalar overrides fill the whole plane (or the mask>0.5 region).
        The constructor re-applies the metallic-zeroing rule.
        """
        def blend(plane, value, channels):
            if value is None:
                return plane
            v = np.asarray(value, np.float32).reshape(1, 1, channels)
            full = np.broadcast_to(v, plane.data.shape).astype(np.float32)
            if mask is None:
                return ImagePlane(full.copy())
            m = mask.data[:, :, 0:1] > 0.5
            return ImagePlane(np.where(m, full, plane.data))

        return replace(
            self,
            albedo=blend(self.albedo, albedo, 3),
            roughness=blend(self.roughness, roughness, 1),
            metallic=blend(self.metallic, metallic, 1),
            transparency=blend(self.transparency, transparency, 1),
        )
