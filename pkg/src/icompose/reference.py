"""Monte Carlo reference renderer for flat-slab-plus-environment scenes.

The scene is a uniform-material rectangle on the z=0 plane (normal +z),
lit by a full-sphere equirectangular environment map, with an optional
textured plane behind it that transmission rays and direct misses can
hit. The camera sits on the +z side. Shading is direct lighting only
(one bounce), matching the compositor's model: no interreflection.

Each pixel draws `spp` one-sample estimates. A lobe is picked per sample
with probability proportional to (diffuse_weight * mean(albedo),
mean(F0), transparency); the contribution is divided by that
probability. Diffuse uses cosine sampling (the a/pi lobe cancels to a
plain radiance average), reflection uses GGX half-vector sampling with
the weight F * G * (o.h) / ((o.n)(n.h)), and transmission reuses the
reflection machinery mirrored through the surface, followed by a second
GGX perturbation of the outgoing direction: the same double application
of the single-interface spread the compositor uses for its two-interface
blur. Roughness zero short-circuits to exact mirror / straight-through
directions.

Every pixel owns a Philox stream keyed by (seed, row, column), so output
is identical for any row chunking or worker count.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bsdf import (
    MaterialSample,
    f0_effective,
    fresnel_schlick,
    rotate_frame,
    sample_ggx_h,
)
from .camera import Camera
from .errors import ValidationError
from .imageio import ImagePlane, load_image


@dataclass(frozen=True)
class BackgroundPlane:
    texture: ImagePlane
    distance: float = 1.0  # plane sits at z = -distance
    scale: float = 4.0  # world units spanned by the texture width

    def __post_init__(self):
        if self.distance <= 0 or self.scale <= 0:
            raise ValidationError("background distance and scale must be positive")


@dataclass(frozen=True)
class SlabScene:
    material: MaterialSample
    environment: ImagePlane
    camera: Camera
    cam_pos: tuple = (0.0, 0.0, 3.0)
    look_at: tuple = (0.0, 0.0, 0.0)
    up: tuple = (0.0, 1.0, 0.0)
    slab_half_size: float = 1e9
    background: Optional[BackgroundPlane] = None

    def __post_init__(self):
        if self.cam_pos[2] <= 0:
            raise ValidationError("camera must be on the +z side of the slab")
        if self.environment.channels != 3:
            raise ValidationError("environment map must be 3-channel")

    def basis(self):
        """World-space (right, down, forward) unit axes of the camera."""
        pos = np.asarray(self.cam_pos, np.float64)
        fwd = np.asarray(self.look_at, np.float64) - pos
        fwd = fwd / np.linalg.norm(fwd)
        up = np.asarray(self.up, np.float64)
        right = np.cross(fwd, up)
        nr = np.linalg.norm(right)
        if nr < 1e-9:
            raise ValidationError("camera up vector is parallel to the view direction")
        right /= nr
        down = np.cross(fwd, right)
        return right, down, fwd

    def pixel_dirs_world(self) -> np.ndarray:
        right, down, fwd = self.basis()
        local = self.camera.pixel_dirs()
        return (
            local[..., 0:1] * right + local[..., 1:2] * down + local[..., 2:3] * fwd
        )


@dataclass(frozen=True)
class RenderSettings:
    spp: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.spp < 1:
            raise ValidationError("spp must be >= 1")


def env_lookup(env: ImagePlane, dirs) -> np.ndarray:
    """Bilinear equirectangular sample: theta from +z, phi from (x, y)."""
    d = np.asarray(dirs, np.float64)
    h, w = env.height, env.width
    theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    phi = np.arctan2(d[..., 1], d[..., 0])
    u = (phi / (2.0 * np.pi) + 0.5) * w - 0.5
    v = theta / np.pi * h - 0.5
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    fu = (u - u0)[..., None]
    fv = (v - v0)[..., None]
    u0w = np.mod(u0, w)
    u1w = np.mod(u0 + 1, w)
    v0c = np.clip(v0, 0, h - 1)
    v1c = np.clip(v0 + 1, 0, h - 1)
    e = env.data
    top = e[v0c, u0w] * (1 - fu) + e[v0c, u1w] * fu
    bot = e[v1c, u0w] * (1 - fu) + e[v1c, u1w] * fu
    return top * (1 - fv) + bot * fv


def dir_from_env_uv(u, v, width, height) -> np.ndarray:
    """Inverse of the equirectangular mapping, at pixel centers."""
    theta = (np.asarray(v, np.float64) + 0.5) / height * np.pi
    phi = ((np.asarray(u, np.float64) + 0.5) / width - 0.5) * 2.0 * np.pi
    st = np.sin(theta)
    return np.stack(
        np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1
    )


def _bg_lookup(bg: BackgroundPlane, x, y) -> np.ndarray:
    """Bilinear clamped sample of the background texture at world (x, y)."""
    tex = bg.texture
    u = (np.asarray(x, np.float64) / bg.scale + 0.5) * tex.width - 0.5
    v = (0.5 - np.asarray(y, np.float64) / bg.scale) * tex.height - 0.5
    u = np.clip(u, 0.0, tex.width - 1.0)
    v = np.clip(v, 0.0, tex.height - 1.0)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    fu = (u - u0)[..., None]
    fv = (v - v0)[..., None]
    u1 = np.minimum(u0 + 1, tex.width - 1)
    v1 = np.minimum(v0 + 1, tex.height - 1)
    e = tex.data
    top = e[v0, u0] * (1 - fu) + e[v0, u1] * fu
    bot = e[v1, u0] * (1 - fu) + e[v1, u1] * fu
    return top * (1 - fv) + bot * fv


def _radiance_down(scene: SlabScene, origin, dirs) -> np.ndarray:
    """Light arriving from below-horizon directions (background or env)."""
    d = np.asarray(dirs, np.float64)
    if scene.background is None:
        return env_lookup(scene.environment, d)
    dz = d[..., 2]
    t = (-scene.background.distance - np.asarray(origin)[..., 2]) / np.where(dz < 0, dz, -1.0)
    x = np.asarray(origin)[..., 0] + t * d[..., 0]
    y = np.asarray(origin)[..., 1] + t * d[..., 1]
    hit = _bg_lookup(scene.background, x, y)
    return np.where((dz < 0)[..., None], hit, env_lookup(scene.environment, d))


def _lobe_probs(mat: MaterialSample) -> tuple[float, float, float]:
    pd = mat.diffuse_weight * float(np.mean(mat.albedo))
    ps = float(np.mean(f0_effective(mat)))
    pt = mat.transparency
    total = pd + ps + pt
    if total <= 0.0:
        return 0.0, 1.0, 0.0
    return pd / total, ps / total, pt / total


def _pixel_draws(seed, row, cols, spp, n_draws):
    """(len(cols), spp, n_draws) uniforms from per-pixel Philox streams."""
    out = np.empty((len(cols), spp, n_draws))
    for i, c in enumerate(cols):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([seed, int(row), int(c)]))
        )
        out[i] = rng.random((spp, n_draws))
    return out


def _shade_slab(scene: SlabScene, pts, w_o, draws) -> np.ndarray:
    """One-sample estimates for slab points; returns (n, spp, 3)."""
    mat = scene.material
    n_pix, spp, _ = draws.shape
    flat = draws.reshape(-1, draws.shape[2])
    o = np.repeat(w_o, spp, axis=0)
    p = np.repeat(pts, spp, axis=0)
    cos_v = o[:, 2]
    pd, ps, pt = _lobe_probs(mat)
    lobe_u = flat[:, 0]
    pick_d = lobe_u < pd
    pick_s = (~pick_d) & (lobe_u < pd + ps)
    pick_t = ~(pick_d | pick_s)
    out = np.zeros((len(flat), 3))
    f0 = f0_effective(mat)
    r = mat.roughness
    k = 0.5 * r * r

    if pd > 0 and pick_d.any():
        u1 = flat[pick_d, 1]
        u2 = flat[pick_d, 2]
        st = np.sqrt(u1)
        ct = np.sqrt(1.0 - u1)
        phi = 2.0 * np.pi * u2
        w_i = np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)
        # (a/pi) * L * cos / (cos/pi * pd) = a * L / pd
        out[pick_d] = mat.albedo * env_lookup(scene.environment, w_i) / pd

    for mask, transmitted in ((pick_s, False), (pick_t, True)):
        if not mask.any():
            continue
        prob = pt if transmitted else ps
        if prob <= 0:
            continue
        ov = o[mask]
        cv = cos_v[mask]
        h = sample_ggx_h(flat[mask, 1], flat[mask, 2], r)
        o_dot_h = np.sum(ov * h, axis=-1)
        w_i = 2.0 * o_dot_h[:, None] * h - ov
        ni = w_i[:, 2]
        ok = (ni > 0) & (o_dot_h > 0)
        nic = np.maximum(ni, 1e-12)
        g = (cv / (cv * (1 - k) + k)) * (nic / (nic * (1 - k) + k))
        weight = np.where(ok, g * o_dot_h / np.maximum(cv * np.clip(h[:, 2], 1e-12, None), 1e-12), 0.0)
        fr = fresnel_schlick(np.clip(o_dot_h, 0.0, 1.0), f0)
        contrib = weight[:, None] * fr
        if transmitted:
            down = w_i * np.array([1.0, 1.0, -1.0])
            if r > 0:
                h2 = sample_ggx_h(flat[mask, 3], flat[mask, 4], r)
                spread = 2.0 * h2[:, 2:3] * h2 - np.array([0.0, 0.0, 1.0])
                down = rotate_frame(spread, down)
            ok2 = down[:, 2] < 0
            light = np.where(
                ok2[:, None], _radiance_down(scene, p[mask], down), 0.0
            )
            out[mask] = mat.albedo * contrib * light / prob
        else:
            light = env_lookup(scene.environment, w_i)
            out[mask] = np.where(ok[:, None], contrib * light / prob, 0.0)

    return out.reshape(n_pix, spp, 3)


def _render_rows(scene: SlabScene, settings: RenderSettings, rows, irradiance_only):
    dirs = scene.pixel_dirs_world()[rows]
    pos = np.asarray(scene.cam_pos, np.float64)
    dz = dirs[..., 2]
    t_slab = -pos[2] / np.where(dz < 0, dz, -1.0)
    px = pos[0] + t_slab * dirs[..., 0]
    py = pos[1] + t_slab * dirs[..., 1]
    on_slab = (dz < 0) & (np.abs(px) <= scene.slab_half_size) & (np.abs(py) <= scene.slab_half_size)

    out = np.zeros(dirs.shape[:2] + (3,), np.float64)
    if not irradiance_only:
        miss = ~on_slab
        if miss.any():
            origin = np.broadcast_to(pos, dirs[miss].shape)
            down = dz[miss] < 0
            res = np.where(
                down[..., None],
                _radiance_down(scene, origin, dirs[miss]),
                env_lookup(scene.environment, dirs[miss]),
            )
            out[miss] = res

    for local_iy in range(dirs.shape[0]):
        iy = rows.start + local_iy
        cols = np.nonzero(on_slab[local_iy])[0]
        if len(cols) == 0:
            continue
        if irradiance_only:
            draws = _pixel_draws(settings.seed, iy, cols, settings.spp, 2)
            u1 = draws[..., 0]
            u2 = draws[..., 1]
            st = np.sqrt(u1)
            ct = np.sqrt(1.0 - u1)
            phi = 2.0 * np.pi * u2
            w_i = np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)
            vals = env_lookup(scene.environment, w_i.reshape(-1, 3))
            out[local_iy, cols] = vals.reshape(len(cols), settings.spp, 3).mean(axis=1)
        else:
            pts = np.stack(
                [px[local_iy, cols], py[local_iy, cols], np.zeros(len(cols))], axis=-1
            )
            w_o = -dirs[local_iy, cols]
            draws = _pixel_draws(settings.seed, iy, cols, settings.spp, 5)
            vals = _shade_slab(scene, pts, w_o, draws)
            out[local_iy, cols] = vals.mean(axis=1)
    return out


def _run_blocks(scene, settings, irradiance_only, workers):
    cam = scene.camera
    if workers <= 1:
        blocks = [slice(0, cam.height)]
    else:
        bounds = np.linspace(0, cam.height, workers + 1).astype(int)
        blocks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    out = np.empty((cam.height, cam.width, 3), np.float64)

    def run(block):
        return block, _render_rows(scene, settings, block, irradiance_only)

    if len(blocks) == 1:
        results = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(run, blocks))
    for block, data in results:
        out[block] = data
    return ImagePlane(out.astype(np.float32))


def render(scene: SlabScene, settings: RenderSettings, workers=1) -> ImagePlane:
    """Full radiance estimate per pixel (direct lighting, one bounce)."""
    return _run_blocks(scene, settings, False, workers)


def render_irradiance(scene: SlabScene, settings: RenderSettings, workers=1) -> ImagePlane:
    """Cosine-weighted hemisphere average of the environment per pixel."""
    return _run_blocks(scene, settings, True, workers)


def mirror_reflection_channel(scene: SlabScene) -> ImagePlane:
    """Analytic mirror image: environment fetched along reflected rays."""
    dirs = scene.pixel_dirs_world()
    refl = dirs * np.array([1.0, 1.0, -1.0])
    return ImagePlane(env_lookup(scene.environment, refl).astype(np.float32))


def background_channel(scene: SlabScene) -> ImagePlane:
    """Straight-through radiance behind the slab along the view rays."""
    dirs = scene.pixel_dirs_world()
    pos = np.asarray(scene.cam_pos, np.float64)
    dz = dirs[..., 2]
    t_slab = -pos[2] / np.where(dz < 0, dz, -1.0)
    pts = np.stack(
        [pos[0] + t_slab * dirs[..., 0], pos[1] + t_slab * dirs[..., 1], np.zeros_like(dz)],
        axis=-1,
    )
    vals = _radiance_down(scene, pts, dirs)
    return ImagePlane(np.where((dz < 0)[..., None], vals, 0.0).astype(np.float32))


def channelset_planes_from_scene(scene: SlabScene):
    """View-space geometry and material planes for the slab region.

    Returns a dict of ImagePlanes (normal, depth, albedo, roughness,
    metallic, transparency) consistent with the screen-space camera
    conventions; off-slab pixels keep slab values (flat scenes cover the
    frame in practice).
    """
    cam = scene.camera
    right, down, fwd = scene.basis()
    n_world = np.array([0.0, 0.0, 1.0])
    n_view = np.array([right @ n_world, down @ n_world, fwd @ n_world])
    n_plane = np.broadcast_to(n_view, (cam.height, cam.width, 3)).astype(np.float32)

    dirs = scene.pixel_dirs_world()
    pos = np.asarray(scene.cam_pos, np.float64)
    dz = dirs[..., 2]
    t_slab = -pos[2] / np.where(dz < 0, dz, -1.0)
    pts = pos + t_slab[..., None] * dirs
    z_view = (pts - pos) @ fwd
    depth01 = np.clip(cam.z_to_depth(z_view), 0.0, 1.0)

    mat = scene.material
    const = lambda v, c: ImagePlane.constant(cam.width, cam.height, c, v)
    return {
        "normal": ImagePlane(n_plane.copy()),
        "depth": ImagePlane(depth01[..., None].astype(np.float32)),
        "albedo": const(mat.albedo, 3),
        "roughness": const(mat.roughness, 1),
        "metallic": const(mat.metallic, 1),
        "transparency": const(mat.transparency, 1),
    }


def load_scene(path) -> SlabScene:
    """Scene description from JSON (paths resolve relative to the file)."""
    with open(path) as f:
        desc = json.load(f)
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    m = desc.get("material", {})
    mat = MaterialSample(
        albedo=np.asarray(m.get("albedo", [1.0, 1.0, 1.0])),
        roughness=m.get("roughness", 0.5),
        metallic=m.get("metallic", 0.0),
        transparency=m.get("transparency", 0.0),
        ior=m.get("ior", 1.5),
    )
    env = load_image(resolve(desc["environment"]))
    c = desc.get("camera", {})
    cam = Camera(
        width=c.get("width", 128),
        height=c.get("height", 128),
        vertical_fov_deg=c.get("fov", 45.0),
        near=c.get("near", 0.1),
        far=c.get("far", 100.0),
    )
    bg = None
    if "background" in desc:
        b = desc["background"]
        bg = BackgroundPlane(
            texture=load_image(resolve(b["texture"])),
            distance=b.get("distance", 1.0),
            scale=b.get("scale", 4.0),
        )
    return SlabScene(
        material=mat,
        environment=env,
        camera=cam,
        cam_pos=tuple(desc.get("camera_pos", (0.0, 0.0, 3.0))),
        look_at=tuple(desc.get("look_at", (0.0, 0.0, 0.0))),
        up=tuple(desc.get("up", (0.0, 1.0, 0.0))),
        slab_half_size=desc.get("slab_half_size", 1e9),
        background=bg,
    )
