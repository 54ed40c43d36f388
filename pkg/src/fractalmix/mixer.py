"""Region-scoped mixing: square/scar patch sampling and the mixing operators.

A region plus its lambda weight is the rectangular specialization of the
mask-mixing rule: outside the region the output is x1 exactly; inside, one of
five operators combines x1 and x2. Drawing the full image as the region gives
pixel-level mixing.

Operators:
  convex          lam * x1 + (1 - lam) * x2
  addition        clamp(x1 + (1 - lam) * x2)
  multiplication  geometric blend x1^lam * x2^(1-lam), inputs floored at 1e-4
  random_pixel    HxWx1 binary mask (ones w.p. p) picks x1 vs x2, all channels
  random_element  HxWx3 binary mask, channels independent

The random masks default their inclusion probability p to the region's
lambda so all operators share one intensity parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .image import ensure_image
from .rng import SeededRng, sample_beta

MIX_KINDS = ("convex", "addition", "multiplication", "random_pixel", "random_element")

_MULT_FLOOR = 1e-4


@dataclass(frozen=True)
class MixRegion:
    x0: int
    y0: int
    w: int
    h: int
    lam: float

    def validate(self, img_h: int, img_w: int) -> "MixRegion":
        if self.w < 1 or self.h < 1:
            raise ParameterError(f"region extents must be positive, got {self}")
        if self.x0 < 0 or self.y0 < 0 or self.x0 + self.w > img_w or self.y0 + self.h > img_h:
            raise ParameterError(f"region {self} outside {img_h}x{img_w} image")
        if not 0.0 <= self.lam <= 1.0:
            raise ParameterError(f"lambda must be in [0, 1], got {self.lam}")
        return self

    @property
    def whole_image(self) -> bool:
        return self.x0 == 0 and self.y0 == 0

    def covers(self, img_h: int, img_w: int) -> bool:
        return self.whole_image and self.w == img_w and self.h == img_h


@dataclass(frozen=True)
class MixOperator:
    kind: str
    p: float | None = None

    def __post_init__(self):
        if self.kind not in MIX_KINDS:
            raise ParameterError(f"unknown mix operator {self.kind!r}")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"inclusion probability must be in [0, 1], got {self.p}")


def sample_square_region(img_dims, size_set, rng: SeededRng, alpha: float = 1.0) -> MixRegion:
    """Uniform side from size_set, uniform placement, fresh Beta lambda.

    A drawn side >= min(H, W) selects the whole image (pixel-level mixing).
    """
    h, w = img_dims
    sizes = list(size_set)
    if not sizes:
        raise ParameterError("size_set must be nonempty")
    if any(s < 1 for s in sizes):
        raise ParameterError(f"patch sizes must be positive, got {sizes}")
    s = int(sizes[int(rng.integers(len(sizes)))])
    if s >= min(h, w):
        region = MixRegion(0, 0, w, h, 0.0)
    else:
        x0 = int(rng.integers(w - s + 1))
        y0 = int(rng.integers(h - s + 1))
        region = MixRegion(x0, y0, s, s, 0.0)
    lam = sample_beta(alpha, rng)
    return replace(region, lam=lam).validate(h, w)


def sample_scar_region(img_dims, rng: SeededRng, alpha: float = 1.0) -> MixRegion:
    """Long thin rectangle: long side in [0.3, 0.8]*m, short side in [2, max(3, 0.1*m)].

    Orientation is horizontal or vertical with equal probability. The short
    side is additionally capped at half the long side so the aspect ratio
    stays >= 2 even on small images.
    """
    h, w = img_dims
    m = min(h, w)
    if m < 8:
        raise ParameterError(f"image too small for scar sampling: min side {m} < 8")
    long_lo = max(4, int(0.3 * m))
    long_hi = max(long_lo, int(0.8 * m))
    long_side = int(long_lo + rng.integers(long_hi - long_lo + 1))
    short_hi = min(max(3, int(0.1 * m)), long_side // 2)
    short_hi = max(2, short_hi)
    short_side = int(2 + rng.integers(short_hi - 2 + 1))
    horizontal = bool(rng.integers(2))
    rw, rh = (long_side, short_side) if horizontal else (short_side, long_side)
    x0 = int(rng.integers(w - rw + 1))
    y0 = int(rng.integers(h - rh + 1))
    lam = sample_beta(alpha, rng)
    return MixRegion(x0, y0, rw, rh, lam).validate(h, w)


def _mix_values(r1: np.ndarray, r2: np.ndarray, lam: float, op: MixOperator, rng: SeededRng):
    if op.kind == "convex":
        return lam * r1 + (1.0 - lam) * r2
    if op.kind == "addition":
        return np.clip(r1 + (1.0 - lam) * r2, 0.0, 1.0)
    if op.kind == "multiplication":
        a = np.clip(r1, _MULT_FLOOR, 1.0)
        b = np.clip(r2, _MULT_FLOOR, 1.0)
        return a**lam * b ** (1.0 - lam)
    p = op.p if op.p is not None else lam
    if op.kind == "random_pixel":
        mask = rng.uniform(size=(r1.shape[0], r1.shape[1], 1)) < p
    else:  # random_element
        mask = rng.uniform(size=r1.shape) < p
    return np.where(mask, r1, r2)


def _mix_in_region_unchecked(
    a: np.ndarray, b: np.ndarray, region: MixRegion, op: MixOperator, rng: SeededRng
) -> np.ndarray:
    # Hot path for the pipeline: inputs already validated upstream.
    out = a.copy()
    view = np.s_[region.y0 : region.y0 + region.h, region.x0 : region.x0 + region.w]
    mixed = _mix_values(a[view], b[view], region.lam, op, rng)
    out[view] = np.clip(mixed, 0.0, 1.0)
    return out


def mix_in_region(
    x1: np.ndarray,
    x2: np.ndarray,
    region: MixRegion,
    op: MixOperator,
    rng: SeededRng,
) -> np.ndarray:
    """Apply an operator inside the region; outside it the output is x1 exactly."""
    a = ensure_image(x1)
    b = ensure_image(x2)
    if a.shape != b.shape:
        raise ParameterError(f"image shapes differ: {a.shape} vs {b.shape}")
    region.validate(*a.shape[:2])
    return _mix_in_region_unchecked(a, b, region, op, rng)
