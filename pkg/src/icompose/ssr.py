"""Screen-space ray-traced mirror reflections from depth + normal buffers.

Each pixel's view ray is reflected about its decoded normal and marched
through the view volume in uniform view-space steps, reprojecting every
sample onto the screen and comparing against the depth buffer. A hit is
a sample whose depth exceeds the stored depth by at most a relative
thickness and whose stored normal faces the ray; the crossing is then
sharpened by bisection. Rays that leave the screen, pass the far plane,
come back through the near plane, exhaust their steps, or land on a
back face produce holes. Holes carry a constant fill color (gray by
default) plus a zero validity mask, so callers can composite or inpaint
them separately.

Tracing is per-pixel pure: results are identical for any row chunking,
which is what makes the multi-worker path safe.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .camera import Camera
from .errors import ValidationError
from .imageio import ImagePlane

GRAY_FILL = (0.5, 0.5, 0.5)


@dataclass(frozen=True)
class SsrConfig:
    max_steps: int = 512
    thickness: float = 0.01  # hit tolerance, relative to buffer view-space z
    refine_steps: int = 8
    miss_fill: str = "constant-gray"  # or "hole" (zero-filled)

    def __post_init__(self):
        if self.max_steps < 2 or self.refine_steps < 0 or self.thickness <= 0:
            raise ValidationError("bad SSR configuration")
        if self.miss_fill not in ("constant-gray", "hole"):
            raise ValidationError(f"unknown miss_fill {self.miss_fill!r}")

    @property
    def fill_color(self):
        return GRAY_FILL if self.miss_fill == "constant-gray" else (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ReflectionLayer:
    """Traced reflection colors plus a {0,1} validity mask."""

    color: ImagePlane
    valid: ImagePlane


def fill_holes(layer: ReflectionLayer, color=GRAY_FILL) -> ImagePlane:
    """Replace invalid pixels with a constant color."""
    mask = layer.valid.data[:, :, 0:1] > 0.5
    filled = np.where(mask, layer.color.data, np.asarray(color, np.float32))
    return ImagePlane(filled)


def _trace_rows(depth_z, normal, source, cam: Camera, cfg: SsrConfig, rows):
    """March the reflected rays of one row block against the full buffers."""
    h = rows.stop - rows.start
    w = cam.width
    u = np.arange(w) + 0.5
    v = np.arange(rows.start, rows.stop) + 0.5
    uu, vv = np.meshgrid(u, v)
    z0 = depth_z[rows]
    p0 = np.stack(
        [
            (uu - w / 2.0) / cam.focal_px * z0,
            (vv - cam.height / 2.0) / cam.focal_px * z0,
            z0,
        ],
        axis=-1,
    )
    vdir = p0 / np.linalg.norm(p0, axis=-1, keepdims=True)
    n = normal[rows]
    rdir = vdir - 2.0 * np.sum(vdir * n, axis=-1, keepdims=True) * n

    step = (cam.far - cam.near) / cfg.max_steps
    active = np.ones((h, w), bool)
    hit_lo = np.zeros((h, w))
    hit_hi = np.zeros((h, w))
    has_hit = np.zeros((h, w), bool)

    def sample_depth(px, py):
        ix = np.clip(px.astype(np.int64), 0, w - 1)
        iy = np.clip(py.astype(np.int64), 0, cam.height - 1)
        return depth_z[iy, ix]

    # candidates start at k=2 so the bisection bracket never reaches the
    # pixel's own surface point (self-hit exclusion of one full step)
    for k in range(2, cfg.max_steps + 1):
        if not active.any():
            break
        t = k * step
        p = p0 + t * rdir
        z = p[..., 2]
        # rays crossing z=0 are masked out below; keep the division quiet
        with np.errstate(divide="ignore", invalid="ignore"):
            px = p[..., 0] / z * cam.focal_px + w / 2.0
            py = p[..., 1] / z * cam.focal_px + cam.height / 2.0
        inside = (z >= cam.near) & (z <= cam.far) & (px >= 0) & (px < w) & (py >= 0) & (py < cam.height)
        px = np.where(inside, px, 0.0)
        py = np.where(inside, py, 0.0)
        active &= inside
        zbuf = sample_depth(np.floor(px), np.floor(py))
        pen = z - zbuf
        hit = active & (pen > 0) & (pen <= cfg.thickness * zbuf)
        hit_lo = np.where(hit, t - step, hit_lo)
        hit_hi = np.where(hit, t, hit_hi)
        has_hit |= hit
        active &= ~hit

    color = np.empty((h, w, 3), np.float32)
    color[:] = np.asarray(cfg.fill_color, np.float32)
    valid = np.zeros((h, w, 1), np.float32)
    if not has_hit.any():
        return color, valid

    idx = np.nonzero(has_hit)
    lo = hit_lo[idx]
    hi = hit_hi[idx]
    p0h = p0[idx]
    rdh = rdir[idx]
    for _ in range(cfg.refine_steps):
        tm = 0.5 * (lo + hi)
        p = p0h + tm[:, None] * rdh
        z = p[:, 2]
        px = p[:, 0] / z * cam.focal_px + w / 2.0
        py = p[:, 1] / z * cam.focal_px + cam.height / 2.0
        zbuf = sample_depth(np.floor(px), np.floor(py))
        above = z - zbuf > 0
        hi = np.where(above, tm, hi)
        lo = np.where(above, lo, tm)

    p = p0h + hi[:, None] * rdh
    z = p[:, 2]
    px = np.clip((p[:, 0] / z * cam.focal_px + w / 2.0).astype(np.int64), 0, w - 1)
    py = np.clip((p[:, 1] / z * cam.focal_px + cam.height / 2.0).astype(np.int64), 0, cam.height - 1)
    zbuf = depth_z[py, px]
    consistent = np.abs(z - zbuf) <= cfg.thickness * zbuf
    front_face = np.sum(normal[py, px] * rdh, axis=-1) < 0.0
    ok = consistent & front_face
    color[idx[0][ok], idx[1][ok]] = source[py[ok], px[ok]]
    valid[idx[0][ok], idx[1][ok], 0] = 1.0
    return color, valid


def trace_reflections(depth: ImagePlane, normal: ImagePlane, source: ImagePlane,
                      cam: Camera, cfg: SsrConfig = SsrConfig(), workers=1) -> ReflectionLayer:
    """Trace mirror reflections for every pixel of the depth buffer."""
    if depth.channels != 1 or normal.channels != 3 or source.channels != 3:
        raise ValidationError("need 1-channel depth, 3-channel normal and source")
    shapes = {depth.data.shape[:2], normal.data.shape[:2], source.data.shape[:2]}
    if len(shapes) != 1 or (depth.height, depth.width) != (cam.height, cam.width):
        raise ValidationError("depth/normal/source/camera sizes differ")
    depth_z = cam.depth_to_z(depth.data[:, :, 0])
    nrm = normal.data.astype(np.float64)
    nrm = nrm / np.maximum(np.linalg.norm(nrm, axis=-1, keepdims=True), 1e-12)
    src = source.data

    h = cam.height
    if workers <= 1:
        blocks = [slice(0, h)]
    else:
        bounds = np.linspace(0, h, workers + 1).astype(int)
        blocks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    color = np.empty((h, cam.width, 3), np.float32)
    valid = np.empty((h, cam.width, 1), np.float32)

    def run(block):
        return block, _trace_rows(depth_z, nrm, src, cam, cfg, block)

    if len(blocks) == 1:
        results = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(run, blocks))
    for block, (c, m) in results:
        color[block] = c
        valid[block] = m
    return ReflectionLayer(ImagePlane(color), ImagePlane(valid))
