"""Image buffers, color transfer curves and bit-exact file I/O.

All pixel data lives in ImagePlane: a (height, width, channels) float32
array, row-major with the origin at the top-left. PFM is the HDR format
(raw little-endian float32, so save/load round-trips are bit-identical);
PNG covers the LDR channels at 8 or 16 bits. sRGB encode/decode follows
IEC 61966-2-1.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ImageIOError

SRGB = "srgb"
LINEAR = "linear"


@dataclass(frozen=True)
class ImagePlane:
    """Immutable screen-space image: (H, W, C) float32, C in {1, 3}."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3 or d.shape[2] not in (1, 3):
            raise ImageIOError(f"bad image shape {self.data.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ImageIOError(f"bad image shape {self.data.shape}")
        d = np.ascontiguousarray(d, dtype=np.float32)
        if not np.all(np.isfinite(d)):
            raise ImageIOError("image contains NaN or Inf")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def as_rgb(self) -> "ImagePlane":
        """Broadcast a single-channel plane to 3 channels."""
        if self.channels == 3:
            return self
        return ImagePlane(np.repeat(self.data, 3, axis=2))

    @staticmethod
    def constant(width, height, channels, value) -> "ImagePlane":
        buf = np.empty((height, width, channels), np.float32)
        buf[:] = np.asarray(value, np.float32)
        return ImagePlane(buf)


def encode_srgb(v):
    """Linear [0,1] -> sRGB-encoded [0,1] (IEC 61966-2-1)."""
    v = np.asarray(v, np.float64)
    lo = 12.92 * v
    hi = 1.055 * np.power(np.maximum(v, 1e-12), 1.0 / 2.4) - 0.055
    return np.where(v <= 0.0031308, lo, hi)


def decode_srgb(v):
    """sRGB-encoded [0,1] -> linear [0,1]."""
    v = np.asarray(v, np.float64)
    lo = v / 12.92
    hi = np.power((v + 0.055) / 1.055, 2.4)
    return np.where(v <= 0.04045, lo, hi)


_PFM_TOKEN = re.compile(rb"\s*(\S+)\s")


def _read_pfm_token(f):
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise ImageIOError("truncated PFM header")
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def load_pfm(path) -> ImagePlane:
    """Read a PFM file (bottom-up raster is flipped to top-left origin)."""
    try:
        f = open(path, "rb")
    except OSError as e:
        raise ImageIOError(f"cannot open {path}: {e}") from e
    with f:
        magic = _read_pfm_token(f)
        if magic == b"PF":
            channels = 3
        elif magic == b"Pf":
            channels = 1
        else:
            raise ImageIOError(f"{path}: not a PFM file (magic {magic!r})")
        try:
            width = int(_read_pfm_token(f))
            height = int(_read_pfm_token(f))
            scale = float(_read_pfm_token(f))
        except ValueError as e:
            raise ImageIOError(f"{path}: malformed PFM header") from e
        if width < 1 or height < 1:
            raise ImageIOError(f"{path}: bad PFM dimensions {width}x{height}")
        count = width * height * channels
        raw = f.read(count * 4)
        if len(raw) != count * 4:
            raise ImageIOError(f"{path}: truncated PFM payload")
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(raw, dtype=dtype).astype(np.float32)
    data = data.reshape(height, width, channels)
    data = np.flipud(data).copy()
    if not np.all(np.isfinite(data)):
        raise ImageIOError(f"{path}: PFM contains NaN or Inf")
    return ImagePlane(data)


def save_pfm(img: ImagePlane, path) -> None:
    """Write a PFM file (little-endian, scale -1.0, bottom row first)."""
    magic = b"PF" if img.channels == 3 else b"Pf"
    payload = np.flipud(img.data).astype("<f4").tobytes()
    try:
        with open(path, "wb") as f:
            f.write(magic + b"\n")
            f.write(f"{img.width} {img.height}\n".encode())
            f.write(b"-1.0\n")
            f.write(payload)
    except OSError as e:
        raise ImageIOError(f"cannot write {path}: {e}") from e


def load_png(path, encoding=LINEAR) -> ImagePlane:
    """Read an 8- or 16-bit PNG into linear floats.

    8-bit files are decoded through the sRGB curve when encoding=srgb;
    16-bit files are treated as linear codes regardless.
    """
    raw = cv2.imread(os.fspath(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(f"cannot read image {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageIOError(f"{path}: unsupported bit depth {raw.dtype}")
    if raw.ndim == 3:
        if raw.shape[2] == 4:
            raw = raw[:, :, :3]
        if raw.shape[2] != 3:
            raise ImageIOError(f"{path}: unsupported channel count {raw.shape[2]}")
        raw = raw[:, :, ::-1]  # BGR -> RGB
    vals = raw.astype(np.float64) / scale
    if encoding == SRGB and raw.dtype == np.uint8:
        vals = decode_srgb(vals)
    elif encoding not in (SRGB, LINEAR):
        raise ImageIOError(f"unknown encoding {encoding!r}")
    return ImagePlane(vals.astype(np.float32))


def save_png(img: ImagePlane, path, encoding=LINEAR, bits=8) -> None:
    """Write a PNG, clamping to [0,1] first; sRGB-encode when requested."""
    vals = np.clip(img.data.astype(np.float64), 0.0, 1.0)
    if encoding == SRGB:
        vals = encode_srgb(vals)
    elif encoding != LINEAR:
        raise ImageIOError(f"unknown encoding {encoding!r}")
    if bits == 8:
        quant = np.round(vals * 255.0).astype(np.uint8)
    elif bits == 16:
        quant = np.round(vals * 65535.0).astype(np.uint16)
    else:
        raise ImageIOError(f"unsupported bit depth {bits}")
    if img.channels == 3:
        quant = quant[:, :, ::-1]  # RGB -> BGR
    else:
        quant = quant[:, :, 0]
    ok = cv2.imwrite(os.fspath(path), quant)
    if not ok:
        raise ImageIOError(f"cannot write {path}")


def load_image(path, encoding=LINEAR, expected_size=None) -> ImagePlane:
    """Load PNG or PFM by extension; PFM payloads are taken verbatim.

    expected_size, when given as (width, height), is validated against
    the decoded file.
    """
    p = os.fspath(path)
    if p.lower().endswith(".pfm"):
        img = load_pfm(p)
    elif p.lower().endswith(".png"):
        img = load_png(p, encoding)
    else:
        raise ImageIOError(f"unsupported image format: {p}")
    if expected_size is not None:
        w, h = expected_size
        if (img.width, img.height) != (w, h):
            raise ImageIOError(
                f"{p}: expected {w}x{h}, got {img.width}x{img.height}"
            )
    return img


def save_image(img: ImagePlane, path, encoding=LINEAR, bits=8) -> None:
    """Save PNG or PFM by extension (PFM writes floats verbatim)."""
    p = os.fspath(path)
    if p.lower().endswith(".pfm"):
        save_pfm(img, p)
    elif p.lower().endswith(".png"):
        save_png(img, p, encoding, bits)
    else:
        raise ImageIOError(f"unsupported image format: {p}")
