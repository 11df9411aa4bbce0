"""Shared synthetic scenes for screen-space tests.

The mirror-floor scene builds exact depth/normal buffers for a floor
plane below the camera (view-space y is down) and a fronto-parallel wall
ahead, plus a source image whose colors encode pixel coordinates, so a
traced reflection can be decoded back into the hit position.
"""

import numpy as np

from icompose.camera import Camera
from icompose.imageio import ImagePlane

FLOOR_Y = 1.2
WALL_Z = 8.0


def mirror_floor_scene(size=160, fov=60.0, near=0.1, far=20.0):
    cam = Camera(width=size, height=size, vertical_fov_deg=fov, near=near, far=far)
    dirs = cam.pixel_dirs()
    dy = dirs[..., 1]
    dz = dirs[..., 2]
    z_floor = np.where(dy > 1e-9, FLOOR_Y * dz / np.where(dy > 1e-9, dy, 1.0), np.inf)
    on_floor = z_floor < WALL_Z
    z = np.where(on_floor, z_floor, WALL_Z)
    depth01 = cam.z_to_depth(z)
    normal = np.where(on_floor[..., None], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0])

    iy, ix = np.indices((size, size))
    source = np.stack(
        [(ix + 0.5) / size, (iy + 0.5) / size, np.full((size, size), 0.25)], axis=-1
    )
    return {
        "camera": cam,
        "depth": ImagePlane(depth01[..., None].astype(np.float32)),
        "normal": ImagePlane(normal.astype(np.float32)),
        "source": ImagePlane(source.astype(np.float32)),
        "on_floor": on_floor,
        "dirs": dirs,
    }


def flat_channelset(size=32, fov=20.0, albedo=(0.5, 0.5, 0.5), roughness=0.0,
                    metallic=0.0, transparency=0.0, irradiance=1.0,
                    reflection=None, background=None):
    """Fronto-parallel wall filling the frame: the simplest valid set."""
    from icompose.channels import ChannelSet

    cam = Camera(width=size, height=size, vertical_fov_deg=fov, near=0.1, far=10.0)
    const = ImagePlane.constant
    if reflection is None:
        reflection = const(size, size, 3, 1.0)
    if isinstance(irradiance, (int, float)):
        irradiance = const(size, size, 3, float(irradiance))
    return ChannelSet(
        normal=const(size, size, 3, (0.0, 0.0, -1.0)),
        depth=const(size, size, 1, 0.5),
        albedo=const(size, size, 3, albedo),
        roughness=const(size, size, 1, roughness),
        metallic=const(size, size, 1, metallic),
        transparency=const(size, size, 1, transparency),
        irradiance=irradiance,
        reflection=reflection,
        background=background,
        camera=cam,
    )


def analytic_floor_reflection(scene):
    """Continuous screen position of each floor pixel's mirror hit on the
    wall; NaN where the reflected ray misses the wall or the screen."""
    cam = scene["camera"]
    dirs = scene["dirs"]
    on_floor = scene["on_floor"]
    dy = dirs[..., 1]
    dz = dirs[..., 2]
    t_floor = FLOOR_Y / np.where(dy > 1e-9, dy, np.nan)
    px = dirs[..., 0] * t_floor
    pz = dz * t_floor
    rdx = dirs[..., 0]
    rdy = -dy
    rdz = dz
    t_wall = (WALL_Z - pz) / rdz
    qx = px + t_wall * rdx
    qy = FLOOR_Y + t_wall * rdy
    u = qx / WALL_Z * cam.focal_px + cam.width / 2.0
    v = qy / WALL_Z * cam.focal_px + cam.height / 2.0
    ok = (
        on_floor
        & (t_wall > 0)
        & (u >= 0) & (u < cam.width)
        & (v >= 0) & (v < cam.height)
    )
    u = np.where(ok, u, np.nan)
    v = np.where(ok, v, np.nan)
    return u, v, ok
