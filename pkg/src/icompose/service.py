"""HTTP compose service consumed by the material editor UI.

Sessions are directories under a root: opening one loads and validates a
channel-set manifest (tracing the reflection channel on demand when the
manifest does not provide it). Compose requests are pure functions of
the base channels and the request body, so identical requests return
byte-identical images; edits never mutate the base channel files. Range
violations return 422, unknown sessions 404. Per-session composes are
serialized with a lock; different sessions run concurrently.
"""

from __future__ import annotations

import base64
import json
import os
import threading
import uuid
from typing import Literal, Optional

import cv2
import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .brdf_lut import BrdfLut
from .channels import ChannelSet
from .compose import compose, tonemap
from .errors import IComposeError
from .imageio import ImagePlane, encode_srgb
from .manifest import Manifest, load_channelset, load_manifest, parse_manifest

PREVIEW_CHANNELS = (
    "normal", "depth", "albedo", "roughness", "metallic", "transparency",
    "irradiance", "reflection", "background",
)


class TonemapOptions(BaseModel):
    mode: Literal["clamp-srgb", "reinhard-srgb"] = "clamp-srgb"
    exposure: float = 1.0


class EditRequest(BaseModel):
    albedo: Optional[list[float]] = None
    roughness: Optional[float] = None
    metallic: Optional[float] = None
    transparency: Optional[float] = None
    mask_png_base64: Optional[str] = None
    tonemap: TonemapOptions = TonemapOptions()
    layers: bool = False
    format: Literal["png", "pfm"] = "png"


class OpenSessionRequest(BaseModel):
    manifest_path: Optional[str] = None
    manifest: Optional[dict] = None
    base_dir: Optional[str] = None


class Session:
    def __init__(self, sid: str, manifest: Manifest, cs: ChannelSet, derived: bool):
        self.sid = sid
        self.manifest = manifest
        self.channelset = cs
        self.reflection_derived = derived
        self.lock = threading.Lock()
        self.last_edit: Optional[dict] = None


def _png_bytes(data_u8_or_u16, channels) -> bytes:
    if channels == 3:
        data = data_u8_or_u16[:, :, ::-1]
    else:
        data = data_u8_or_u16[:, :, 0]
    ok, buf = cv2.imencode(".png", data)
    if not ok:
        raise HTTPException(500, "PNG encoding failed")
    return buf.tobytes()


def _preview_png(cs: ChannelSet, name: str) -> bytes:
    plane = {
        "normal": None, "depth": cs.depth, "albedo": cs.albedo,
        "roughness": cs.roughness, "metallic": cs.metallic,
        "transparency": cs.transparency, "irradiance": cs.irradiance,
        "reflection": cs.reflection, "background": cs.background,
    }.get(name, "missing")
    if plane == "missing":
        raise HTTPException(404, f"unknown channel {name!r}")
    if name == "normal":
        vals = (cs.normal.data.astype(np.float64) + 1.0) / 2.0
    elif name in ("irradiance", "reflection", "background"):
        if plane is None:
            raise HTTPException(404, f"channel {name!r} not present")
        vals = encode_srgb(np.clip(plane.data.astype(np.float64), 0.0, 1.0))
    elif name == "albedo":
        vals = encode_srgb(plane.data.astype(np.float64))
    else:
        if plane is None:
            raise HTTPException(404, f"channel {name!r} not present")
        vals = plane.data.astype(np.float64)
    quant = np.round(np.clip(vals, 0.0, 1.0) * 255.0).astype(np.uint8)
    return _png_bytes(quant, quant.shape[2])


def _decode_mask(b64: str, width, height) -> ImagePlane:
    try:
        raw = base64.b64decode(b64, validate=True)
        arr = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_GRAYSCALE)
    except Exception:
        arr = None
    if arr is None:
        raise HTTPException(422, "mask is not a decodable PNG")
    if arr.shape != (height, width):
        raise HTTPException(422, f"mask must be {width}x{height}")
    return ImagePlane((arr.astype(np.float32) / 255.0)[:, :, None])


def _validate_ranges(req: EditRequest):
    def bad(msg):
        raise HTTPException(422, msg)

    if req.albedo is not None:
        if len(req.albedo) != 3 or any(not 0.0 <= v <= 1.0 for v in req.albedo):
            bad(f"albedo must be three values in [0,1], got {req.albedo}")
    for name in ("roughness", "metallic", "transparency"):
        v = getattr(req, name)
        if v is not None and not 0.0 <= v <= 1.0:
            bad(f"{name} must be in [0,1], got {v}")
    if req.tonemap.exposure <= 0.0:
        bad(f"exposure must be positive, got {req.tonemap.exposure}")


def _effective_overrides(req: EditRequest) -> dict:
    out = {}
    for name in ("albedo", "roughness", "metallic", "transparency"):
        v = getattr(req, name)
        if v is not None:
            out[name] = v
    # transparent surfaces cannot stay metallic
    if out.get("transparency", 0.0) > 0.0 and out.get("metallic", 0.0) > 0.0:
        out["metallic"] = 0.0
    out["masked"] = req.mask_png_base64 is not None
    return out


def create_app(session_root, lut: BrdfLut, frontend_dir=None) -> FastAPI:
    os.makedirs(session_root, exist_ok=True)
    app = FastAPI(title="icompose service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    def get_session(sid) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return s

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def open_session(req: OpenSessionRequest):
        try:
            if req.manifest_path:
                man = load_manifest(req.manifest_path)
            elif req.manifest is not None:
                man = parse_manifest(req.manifest, req.base_dir or ".")
            else:
                raise HTTPException(422, "need manifest_path or an inline manifest")
            cs = load_channelset(man, trace_missing_reflection=True)
        except IComposeError as e:
            raise HTTPException(422, str(e)) from e
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, man, cs, derived="reflection" not in man.channels)
        with store_lock:
            sessions[sid] = session
        sdir = os.path.join(session_root, sid)
        os.makedirs(sdir, exist_ok=True)
        with open(os.path.join(sdir, "session.json"), "w") as f:
            json.dump({"id": sid, "manifest": man.to_dict()}, f, indent=2)
        channels = sorted(man.channels)
        if session.reflection_derived:
            channels.append("reflection")
        return {
            "id": sid,
            "width": cs.width,
            "height": cs.height,
            "channels": channels,
            "reflection_derived": session.reflection_derived,
            "camera": {"fov": man.camera_fov, "near": man.camera_near, "far": man.camera_far},
            "ior": man.ior,
            "kernel_distance_px": man.kernel_distance_px,
        }

    @app.get("/sessions/{sid}/channels/{name}")
    def channel_preview(sid: str, name: str):
        s = get_session(sid)
        return Response(_preview_png(s.channelset, name), media_type="image/png")

    @app.get("/sessions/{sid}/manifest")
    def manifest_state(sid: str):
        s = get_session(sid)
        return {
            "manifest": s.manifest.to_dict(),
            "reflection_derived": s.reflection_derived,
            "effective_overrides": s.last_edit or {},
        }

    @app.post("/sessions/{sid}/compose")
    def compose_endpoint(sid: str, req: EditRequest):
        s = get_session(sid)
        _validate_ranges(req)
        mask = None
        if req.mask_png_base64:
            mask = _decode_mask(req.mask_png_base64, s.channelset.width, s.channelset.height)
        with s.lock:
            cs = s.channelset.with_overrides(
                albedo=req.albedo,
                roughness=req.roughness,
                metallic=req.metallic,
                transparency=req.transparency,
                mask=mask,
            )
            stack = compose(cs, lut, s.manifest.kernel_distance_px)
            s.last_edit = _effective_overrides(req)
        display = tonemap(stack.final, req.tonemap.mode, req.tonemap.exposure)
        if req.layers:
            payload = {
                "composed_png_base64": base64.b64encode(_display_png(display)).decode(),
                "layers": {
                    "diffuse": _b64_layer(stack.diffuse, req.tonemap),
                    "specular": _b64_layer(stack.specular, req.tonemap),
                    "transmission": _b64_layer(stack.transmission, req.tonemap),
                },
            }
            return JSONResponse(payload)
        if req.format == "pfm":
            return Response(_pfm_bytes(display), media_type="application/octet-stream")
        return Response(_display_png(display), media_type="image/png")

    def _display_png(display: ImagePlane) -> bytes:
        quant = np.round(np.clip(display.data, 0.0, 1.0) * 255.0).astype(np.uint8)
        return _png_bytes(quant, display.channels)

    def _b64_layer(plane: ImagePlane, tm: TonemapOptions) -> str:
        disp = tonemap(plane, tm.mode, tm.exposure)
        return base64.b64encode(_display_png(disp)).decode()

    def _pfm_bytes(display: ImagePlane) -> bytes:
        head = f"PF\n{display.width} {display.height}\n-1.0\n".encode()
        return head + np.flipud(display.data).astype("<f4").tobytes()

    if frontend_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
