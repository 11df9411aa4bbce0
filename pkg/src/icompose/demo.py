"""Synthetic demo channel set: a glossy floor reflecting a checker wall.

Geometry is built directly in view space (x right, y down, z forward):
a floor plane below the camera and a fronto-parallel wall ahead. All
channels are written as PFM so the set is exact, plus a manifest that
binds them together. Useful as a quick start for the CLI and as the
fixture behind the editor UI tests.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .camera import Camera
from .imageio import ImagePlane, save_image

FLOOR_Y = 1.2
WALL_Z = 8.0


def _geometry(cam: Camera):
    """Per-pixel hit position, normal and view z for floor|wall."""
    dirs = cam.pixel_dirs()
    dy = dirs[..., 1]
    dz = dirs[..., 2]
    t_floor = np.where(dy > 1e-6, FLOOR_Y / np.where(dy > 1e-6, dy, 1.0), np.inf)
    t_wall = WALL_Z / dz
    pick_floor = t_floor < t_wall
    t = np.where(pick_floor, t_floor, t_wall)
    pts = dirs * t[..., None]
    normal = np.where(
        pick_floor[..., None], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]
    )
    return pts, normal, pick_floor


def write_demo_scene(out_dir, size=128) -> str:
    os.makedirs(out_dir, exist_ok=True)
    cam = Camera(width=size, height=size, vertical_fov_deg=60.0, near=0.1, far=20.0)
    pts, normal, floor = _geometry(cam)

    depth01 = np.clip(cam.z_to_depth(pts[..., 2]), 0.0, 1.0)

    # checker wall colors, neutral floor
    cell = np.floor(pts[..., 0] / 0.8) + np.floor(pts[..., 1] / 0.8)
    check = np.mod(cell, 2.0) > 0.5
    wall_color = np.where(
        check[..., None], [0.85, 0.30, 0.20], [0.20, 0.45, 0.85]
    )
    albedo = np.where(floor[..., None], [0.45, 0.45, 0.45], wall_color)

    rough = np.where(floor, 0.08, 0.65)
    rmt = np.stack([rough, np.zeros_like(rough), np.zeros_like(rough)], axis=-1)

    irradiance = np.full((size, size, 3), 0.9)
    background = np.full((size, size, 3), 1.4)

    planes = {
        "normal": ImagePlane(normal.astype(np.float32)),
        "depth": ImagePlane(depth01[..., None].astype(np.float32)),
        "albedo": ImagePlane(albedo.astype(np.float32)),
        "rmt": ImagePlane(rmt.astype(np.float32)),
        "irradiance": ImagePlane(irradiance.astype(np.float32)),
        "background": ImagePlane(background.astype(np.float32)),
    }
    for name, plane in planes.items():
        save_image(plane, os.path.join(out_dir, f"{name}.pfm"))

    manifest = {
        "channels": {name: {"path": f"{name}.pfm", "encoding": "linear"}
                     for name in planes},
        "camera": {"fov": 60.0, "near": 0.1, "far": 20.0},
        "ior": 1.5,
        "kernel_distance_px": 64,
        "notes": "synthetic demo: glossy floor under a checker wall",
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2)
    return manifest_path
