"""Pinhole camera for screen-space work.

View space is right-handed with x right, y down, z forward (into the
screen), matching row-major images with the origin at the top-left.
Camera-facing surfaces therefore have normals with negative z. Depth
values are view-space z mapped linearly onto [0,1] between near and far.
Pixel (i, j) has continuous center (i + 0.5, j + 0.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Camera:
    width: int
    height: int
    vertical_fov_deg: float = 60.0
    near: float = 0.1
    far: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.vertical_fov_deg < 180.0:
            raise ValidationError(f"fov out of (0,180): {self.vertical_fov_deg}")
        if not 0.0 < self.near < self.far:
            raise ValidationError(f"need 0 < near < far, got {self.near}, {self.far}")
        if self.width < 1 or self.height < 1:
            raise ValidationError("image dimensions must be positive")

    @property
    def focal_px(self) -> float:
        return (self.height / 2.0) / math.tan(math.radians(self.vertical_fov_deg) / 2.0)

    def depth_to_z(self, depth01):
        return self.near + np.asarray(depth01, np.float64) * (self.far - self.near)

    def z_to_depth(self, z):
        return (np.asarray(z, np.float64) - self.near) / (self.far - self.near)

    def unproject(self, u, v, depth01):
        """Continuous pixel coords + depth value -> view-space position."""
        z = self.depth_to_z(depth01)
        x = (np.asarray(u, np.float64) - self.width / 2.0) / self.focal_px * z
        y = (np.asarray(v, np.float64) - self.height / 2.0) / self.focal_px * z
        return np.stack(np.broadcast_arrays(x, y, z), axis=-1)

    def project(self, p):
        """View-space position -> (u, v, depth01)."""
        p = np.asarray(p, np.float64)
        z = p[..., 2]
        u = p[..., 0] / z * self.focal_px + self.width / 2.0
        v = p[..., 1] / z * self.focal_px + self.height / 2.0
        return u, v, self.z_to_depth(z)

    def pixel_dirs(self) -> np.ndarray:
        """(H, W, 3) unit view-space directions through pixel centers."""
        u = np.arange(self.width) + 0.5
        v = np.arange(self.height) + 0.5
        x = (u - self.width / 2.0) / self.focal_px
        y = (v - self.height / 2.0) / self.focal_px
        xx, yy = np.meshgrid(x, y)
        d = np.stack([xx, yy, np.ones_like(xx)], axis=-1)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)
