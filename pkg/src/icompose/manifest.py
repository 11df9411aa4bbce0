"""Channel-set manifests: the JSON that names every intrinsic file.

Nothing about a channel file is guessed: the manifest declares the path
and encoding of each plane, the camera (vertical fov in degrees, near,
far), the refraction index and the kernel distance. Decode rules per
channel:

  normal      PNG stores [0,1] codes mapped to 2v-1; PFM is verbatim.
              Vectors are renormalized after decode.
  depth       [0,1], linear-in-z between near and far.
  albedo      color texture; 8-bit PNG defaults to sRGB.
  rmt         packed material scalars: R in red, M in green, T in blue.
  irradiance / reflection / background
              non-negative HDR radiance (PFM recommended).

reflection and background are optional: the reflection image can be
traced on demand from depth + normals, and the background defaults to
white when composing.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .blur import DEFAULT_KERNEL_DISTANCE
from .bsdf import DEFAULT_IOR
from .camera import Camera
from .channels import ChannelSet
from .errors import ImageIOError, ManifestError
from .imageio import LINEAR, SRGB, ImagePlane, load_image
from .ssr import SsrConfig, trace_reflections

REQUIRED_CHANNELS = ("normal", "depth", "albedo", "rmt", "irradiance")
OPTIONAL_CHANNELS = ("reflection", "background")
DEFAULT_ENCODINGS = {
    "normal": LINEAR,
    "depth": LINEAR,
    "albedo": SRGB,
    "rmt": LINEAR,
    "irradiance": LINEAR,
    "reflection": LINEAR,
    "background": LINEAR,
}


@dataclass(frozen=True)
class ChannelRef:
    path: str
    encoding: str


@dataclass(frozen=True)
class Manifest:
    channels: dict
    camera_fov: float = 60.0
    camera_near: float = 0.1
    camera_far: float = 100.0
    ior: float = DEFAULT_IOR
    kernel_distance_px: int = DEFAULT_KERNEL_DISTANCE
    notes: str = ""
    base_dir: str = "."

    def resolve(self, name) -> str:
        ref = self.channels[name]
        if os.path.isabs(ref.path):
            return ref.path
        return os.path.join(self.base_dir, ref.path)

    def to_dict(self) -> dict:
        return {
            "channels": {
                name: {"path": ref.path, "encoding": ref.encoding}
                for name, ref in self.channels.items()
            },
            "camera": {
                "fov": self.camera_fov,
                "near": self.camera_near,
                "far": self.camera_far,
            },
            "ior": self.ior,
            "kernel_distance_px": self.kernel_distance_px,
            "notes": self.notes,
        }


def parse_manifest(desc: dict, base_dir=".") -> Manifest:
    if not isinstance(desc, dict) or "channels" not in desc:
        raise ManifestError("manifest must be an object with a 'channels' map")
    raw = desc["channels"]
    channels = {}
    for name, entry in raw.items():
        if name not in REQUIRED_CHANNELS + OPTIONAL_CHANNELS:
            raise ManifestError(f"unknown channel {name!r}")
        if isinstance(entry, str):
            entry = {"path": entry}
        if "path" not in entry:
            raise ManifestError(f"channel {name!r} needs a path")
        enc = entry.get("encoding", DEFAULT_ENCODINGS[name])
        if enc not in (LINEAR, SRGB):
            raise ManifestError(f"channel {name!r}: unknown encoding {enc!r}")
        channels[name] = ChannelRef(entry["path"], enc)
    missing = [c for c in REQUIRED_CHANNELS if c not in channels]
    if missing:
        raise ManifestError(f"manifest missing channels: {missing}")
    cam = desc.get("camera", {})
    return Manifest(
        channels=channels,
        camera_fov=float(cam.get("fov", 60.0)),
        camera_near=float(cam.get("near", 0.1)),
        camera_far=float(cam.get("far", 100.0)),
        ior=float(desc.get("ior", DEFAULT_IOR)),
        kernel_distance_px=int(desc.get("kernel_distance_px", DEFAULT_KERNEL_DISTANCE)),
        notes=str(desc.get("notes", "")),
        base_dir=base_dir,
    )


def load_manifest(path) -> Manifest:
    try:
        with open(path) as f:
            desc = json.load(f)
    except OSError as e:
        raise ImageIOError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: invalid JSON: {e}") from e
    return parse_manifest(desc, os.path.dirname(os.path.abspath(path)))


def _load_plane(manifest: Manifest, name) -> ImagePlane:
    ref = manifest.channels[name]
    try:
        return load_image(manifest.resolve(name), ref.encoding)
    except ImageIOError as e:
        raise ManifestError(f"channel {name!r}: {e}") from e


def load_channelset(manifest: Manifest, trace_missing_reflection=False,
                    ssr_config: Optional[SsrConfig] = None, workers=1) -> ChannelSet:
    """Decode every referenced file into a validated ChannelSet.

    With trace_missing_reflection, an absent reflection channel is
    synthesized by screen-space tracing of the diffuse product
    albedo * irradiance, the closest screen-space stand-in for scene
    color that the channel set itself provides.
    """
    normal = _load_plane(manifest, "normal")
    if normal.channels != 3:
        raise ManifestError("normal channel must be 3-channel")
    n = normal.data.astype(np.float64)
    if manifest.resolve("normal").lower().endswith(".png"):
        n = n * 2.0 - 1.0
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    if np.any(norm < 1e-6):
        raise ManifestError("normal channel contains zero vectors")
    normal = ImagePlane((n / norm).astype(np.float32))

    depth = _load_plane(manifest, "depth")
    albedo = _load_plane(manifest, "albedo")
    rmt = _load_plane(manifest, "rmt")
    if rmt.channels != 3:
        raise ManifestError("rmt channel must be a 3-channel pack")
    irradiance = _load_plane(manifest, "irradiance")
    reflection = None
    if "reflection" in manifest.channels:
        reflection = _load_plane(manifest, "reflection")
    background = None
    if "background" in manifest.channels:
        background = _load_plane(manifest, "background")

    cam = Camera(
        width=normal.width,
        height=normal.height,
        vertical_fov_deg=manifest.camera_fov,
        near=manifest.camera_near,
        far=manifest.camera_far,
    )
    try:
        cs = ChannelSet(
            normal=normal,
            depth=depth,
            albedo=albedo,
            roughness=ImagePlane(rmt.data[:, :, 0:1]),
            metallic=ImagePlane(rmt.data[:, :, 1:2]),
            transparency=ImagePlane(rmt.data[:, :, 2:3]),
            irradiance=irradiance,
            reflection=reflection,
            background=background,
            camera=cam,
            ior=manifest.ior,
        )
    except Exception as e:
        raise ManifestError(str(e)) from e

    if cs.reflection is None and trace_missing_reflection:
        source = ImagePlane(cs.albedo.data * cs.irradiance.data)
        layer = trace_reflections(
            cs.depth, cs.normal, source, cam, ssr_config or SsrConfig(), workers=workers
        )
        from dataclasses import replace

        cs = replace(cs, reflection=layer.color)
    return cs
