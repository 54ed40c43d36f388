"""Canonical image representation and the elementwise blend every mixer uses.

Images are H x W x 3 float64 arrays with values in [0, 1]; masks are
H x W x 1 or H x W x 3 arrays in [0, 1] (a single-channel mask applies
identically to all image channels). Quantization happens only at encode,
with round-half-up, so decode(encode(x)) differs from x by at most 1/510
per sample.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, ParameterError


def ensure_image(arr: np.ndarray) -> np.ndarray:
    """Validate an H x W x 3 float buffer in [0, 1] and return it as float64."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ParameterError(f"image must be HxWx3, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ParameterError(f"image must have positive extent, got {a.shape}")
    if not np.isfinite(a).all():
        raise ParameterError("image contains non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ParameterError("image values must lie in [0, 1]")
    return a


def decode(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG bytes to a float image; 8-bit samples map to v/255.

    Grayscale is promoted to 3 channels; alpha channels are dropped.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image ({len(data)} bytes): {exc}") from exc
    arr.flags.writeable = False
    return arr


def decode_file(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode(fh.read())


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Quantize to 8-bit with round-half-up: q = floor(v * 255 + 0.5)."""
    img = ensure_image(img)
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def from_uint8(arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        raise ParameterError(f"expected uint8 array, got {a.dtype}")
    return ensure_image(a.astype(np.float64) / 255.0)


def encode_png(img: np.ndarray) -> bytes:
    """Encode as PNG after round-half-up quantization; byte-stable per build."""
    q = to_uint8(img)
    buf = io.BytesIO()
    Image.fromarray(q, mode="RGB").save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def _check_mask(mask: np.ndarray, shape) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 3 or m.shape[2] not in (1, 3):
        raise ParameterError(f"mask must be HxWx1 or HxWx3, got shape {m.shape}")
    if m.shape[:2] != shape[:2]:
        raise ParameterError(f"mask extent {m.shape[:2]} != image extent {shape[:2]}")
    if m.min() < 0.0 or m.max() > 1.0:
        raise ParameterError("mask values must lie in [0, 1]")
    return m


def blend_convex(x1: np.ndarray, x2: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Elementwise convex blend: mask * x1 + (1 - mask) * x2.

    A single-channel mask broadcasts over the three image channels.
    """
    a = ensure_image(x1)
    b = ensure_image(x2)
    if a.shape != b.shape:
        raise ParameterError(f"image shapes differ: {a.shape} vs {b.shape}")
    m = _check_mask(mask, a.shape)
    out = m * a + (1.0 - m) * b
    return np.clip(out, 0.0, 1.0)


def resize_bilinear(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize with pixel-center alignment and clamped edges."""
    img = ensure_image(img)
    h, w = img.shape[:2]
    if (h, w) == (height, width):
        return img.copy()
    if height < 1 or width < 1:
        raise ParameterError("target size must be positive")
    sy = h / height
    sx = w / width
    rows = (np.arange(height) + 0.5) * sy - 0.5
    cols = (np.arange(width) + 0.5) * sx - 0.5
    rows = np.clip(rows, 0.0, h - 1.0)
    cols = np.clip(cols, 0.0, w - 1.0)
    r0 = np.floor(rows).astype(np.intp)
    c0 = np.floor(cols).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (rows - r0)[:, None, None]
    fc = (cols - c0)[None, :, None]
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bot = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    out = top * (1 - fr) + bot * fr
    return np.clip(out, 0.0, 1.0)


def center_crop_resize(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Crop centrally to the target aspect ratio, then resize."""
    img = ensure_image(img)
    h, w = img.shape[:2]
    target_aspect = width / height
    src_aspect = w / h
    if src_aspect > target_aspect:
        new_w = max(1, int(round(h * target_aspect)))
        x0 = (w - new_w) // 2
        img = img[:, x0 : x0 + new_w]
    elif src_aspect < target_aspect:
        new_h = max(1, int(round(w / target_aspect)))
        y0 = (h - new_h) // 2
        img = img[y0 : y0 + new_h]
    return resize_bilinear(img, height, width)
