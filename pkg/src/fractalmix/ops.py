"""Whole-image label-preserving transforms with sampled strengths.

The 13-op bank follows the PIL convention set: color ops work per channel on
the real-valued buffer, geometric ops resample bilinearly and fill vacated
pixels with 0. Strength ranges are the usual augmentation-chain ones
(rotate within 30 degrees, shear within 0.3, translate within a third of the
side, posterize 4 down to 1 bits, solarize threshold from 1 down to 0).
Ops whose identity configuration is reachable declare it as
``identity_strength``.

None of these are corruption-benchmark transforms: no noise, blur, weather
overlays, or compression artifacts. (The multiplicative brightness scaling
here is not the benchmark's additive brightness shift, despite the shared
name.)
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ParameterError
from .image import ensure_image
from .rng import SeededRng


# Parallelism lives at the work-item level (augment_batch, CLI workers);
# OpenCV's internal pool would oversubscribe those workers.
cv2.setNumThreads(1)


@dataclass(frozen=True)
class ImageOp:
    name: str
    strength_range: tuple[float, float]
    identity_strength: float | None = None
    integer_strength: bool = False


@dataclass(frozen=True)
class OpDraw:
    op: ImageOp
    strength: float


OP_BANK: tuple[ImageOp, ...] = (
    ImageOp("autocontrast", (0.0, 0.0)),
    ImageOp("equalize", (0.0, 0.0)),
    ImageOp("posterize", (1.0, 4.0), integer_strength=True),
    ImageOp("solarize", (0.0, 1.0), identity_strength=1.0),
    ImageOp("rotate", (-30.0, 30.0), identity_strength=0.0),
    ImageOp("shear_x", (-0.3, 0.3), identity_strength=0.0),
    ImageOp("shear_y", (-0.3, 0.3), identity_strength=0.0),
    ImageOp("translate_x", (-1.0 / 3.0, 1.0 / 3.0), identity_strength=0.0),
    ImageOp("translate_y", (-1.0 / 3.0, 1.0 / 3.0), identity_strength=0.0),
    ImageOp("brightness", (0.1, 1.9), identity_strength=1.0),
    ImageOp("sharpness", (0.1, 1.9), identity_strength=1.0),
    ImageOp("invert", (0.0, 0.0)),
    ImageOp("mirror", (0.0, 0.0)),
)

OPS_BY_NAME = {op.name: op for op in OP_BANK}

# PIL's 3x3 smoothing kernel, used by the sharpness blend.
_SMOOTH_KERNEL = np.array([[1.0, 1.0, 1.0], [1.0, 5.0, 1.0], [1.0, 1.0, 1.0]]) / 13.0


def _affine(img: np.ndarray, mat: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Inverse-map bilinear affine resample with zero fill outside the frame.

    mat/offset map output (row, col) to input (row, col); rewritten into
    cv2's (x, y) inverse-map convention.
    """
    m = np.array(
        [
            [mat[1, 1], mat[1, 0], offset[1]],
            [mat[0, 1], mat[0, 0], offset[0]],
        ],
        dtype=np.float64,
    )
    out = cv2.warpAffine(
        img,
        m,
        (img.shape[1], img.shape[0]),
        flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=0.0,
    )
    return np.clip(out, 0.0, 1.0)


def _centered(img: np.ndarray, mat: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    offset = center - mat @ center
    return _affine(img, mat, offset)


def _rotate(img, degrees):
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    # (row, col) coordinates; inverse of a rotation by theta.
    return _centered(img, np.array([[c, -s], [s, c]]))


def _shear_x(img, amount):
    return _centered(img, np.array([[1.0, 0.0], [amount, 1.0]]))


def _shear_y(img, amount):
    return _centered(img, np.array([[1.0, amount], [0.0, 1.0]]))


def _translate(img, frac, axis):
    h, w = img.shape[:2]
    shift = frac * (w if axis == 1 else h)
    offset = np.array([0.0, 0.0])
    offset[axis] = -shift
    return _affine(img, np.eye(2), offset)


def _autocontrast(img, _):
    out = img.copy()
    for ch in range(3):
        lo = out[:, :, ch].min()
        hi = out[:, :, ch].max()
        if hi > lo:
            out[:, :, ch] = (out[:, :, ch] - lo) / (hi - lo)
    return out


def _equalize(img, _):
    # PIL-style integer equalization over the 256-level quantized projection.
    q = np.floor(img * 255.0 + 0.5).astype(np.intp)
    out = np.empty_like(img)
    for ch in range(3):
        h = np.bincount(q[:, :, ch].ravel(), minlength=256)
        nonzero = h[h > 0]
        if len(nonzero) <= 1:
            out[:, :, ch] = q[:, :, ch] / 255.0
            continue
        step = (int(h.sum()) - int(nonzero[-1])) // 255
        if step == 0:
            out[:, :, ch] = q[:, :, ch] / 255.0
            continue
        n = step // 2
        lut = np.empty(256, dtype=np.float64)
        for i in range(256):
            lut[i] = min(n // step, 255)
            n += int(h[i])
        out[:, :, ch] = lut[q[:, :, ch]] / 255.0
    return out


def _posterize(img, bits):
    b = int(round(bits))
    if not 1 <= b <= 8:
        raise ParameterError(f"posterize bits must be in [1, 8], got {bits}")
    q = np.floor(img * 255.0 + 0.5).astype(np.uint8)
    mask = np.uint8((0xFF << (8 - b)) & 0xFF)
    return (q & mask).astype(np.float64) / 255.0


def _solarize(img, threshold):
    # Strictly-above comparison so threshold 1.0 is an exact identity.
    return np.where(img > threshold, 1.0 - img, img)


def _brightness(img, factor):
    return np.clip(img * factor, 0.0, 1.0)


def _sharpness(img, factor):
    smooth = cv2.filter2D(img, -1, _SMOOTH_KERNEL, borderType=cv2.BORDER_REPLICATE)
    return np.clip(smooth + factor * (img - smooth), 0.0, 1.0)


def _invert(img, _):
    return 1.0 - img


def _mirror(img, _):
    return img[:, ::-1].copy()


_APPLY = {
    "autocontrast": _autocontrast,
    "equalize": _equalize,
    "posterize": _posterize,
    "solarize": _solarize,
    "rotate": _rotate,
    "shear_x": _shear_x,
    "shear_y": _shear_y,
    "translate_x": lambda img, s: _translate(img, s, axis=1),
    "translate_y": lambda img, s: _translate(img, s, axis=0),
    "brightness": _brightness,
    "sharpness": _sharpness,
    "invert": _invert,
    "mirror": _mirror,
}


def _apply_unchecked(img: np.ndarray, draw: OpDraw) -> np.ndarray:
    # Hot path for the pipeline: image already validated, draw from sample_op.
    return _APPLY[draw.op.name](img, draw.strength)


def apply_op(img: np.ndarray, draw: OpDraw) -> np.ndarray:
    """Apply one transform; output has the same dims and stays in [0, 1]."""
    img = ensure_image(img)
    fn = _APPLY.get(draw.op.name)
    if fn is None:
        raise ParameterError(f"unknown image op {draw.op.name!r}")
    lo, hi = draw.op.strength_range
    if not lo <= draw.strength <= hi:
        raise ParameterError(
            f"strength {draw.strength} outside {draw.op.name} range [{lo}, {hi}]"
        )
    return fn(img, draw.strength)


def resolve_bank(names) -> tuple[ImageOp, ...]:
    """Resolve op names to bank entries, preserving order."""
    ops = []
    for name in names:
        op = OPS_BY_NAME.get(name)
        if op is None:
            raise ParameterError(f"unknown image op {name!r}")
        ops.append(op)
    if not ops:
        raise ParameterError("op bank must be nonempty")
    return tuple(ops)


def sample_op(rng: SeededRng, bank: tuple[ImageOp, ...] = OP_BANK) -> OpDraw:
    """Uniform op pick, then uniform strength within that op's range."""
    op = bank[int(rng.integers(len(bank)))]
    lo, hi = op.strength_range
    if op.integer_strength:
        strength = float(int(lo) + int(rng.integers(int(hi) - int(lo) + 1)))
    elif hi > lo:
        strength = float(lo + (hi - lo) * rng.uniform())
    else:
        strength = float(lo)
    return OpDraw(op, strength)
