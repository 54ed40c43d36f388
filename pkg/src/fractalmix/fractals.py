"""Synthetic mixing-set generation: escape-time fractals and IFS attractors.

Escape-time rendering iterates z <- z^2 + c per pixel (c from the viewport
for the Mandelbrot set, z0 from the viewport with fixed c for Julia sets)
and records the iteration of first escape past the bailout radius, plus the
orbit's minimum distance to an optional geometric trap. The color scalar is
the normalized iteration count, blended 50/50 with exp(-trap_distance) when
a trap is configured, and looked up in a 256-entry palette.

IFS rendering plays the chaos game: many walkers iterate through
probability-weighted affine contractions, early iterates are discarded, and
the surviving hit density is log-scaled through the palette.

Both renders are pure functions of (spec, seed), so a mixing set rebuilt
from the same seed is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParameterError
from .image import center_crop_resize, decode_file
from .rng import SeededRng

PALETTE_SIZE = 256

_WALKERS = 64


@dataclass(frozen=True)
class Trap:
    kind: str  # "none" | "point" | "line"
    point: complex = 0j
    axis: str = "real"  # line traps: distance to the real or imaginary axis

    def __post_init__(self):
        if self.kind not in ("none", "point", "line"):
            raise ParameterError(f"unknown trap kind {self.kind!r}")
        if self.axis not in ("real", "imag"):
            raise ParameterError(f"unknown trap axis {self.axis!r}")

    def distance(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "point":
            return np.abs(z - self.point)
        if self.kind == "line":
            return np.abs(z.imag) if self.axis == "real" else np.abs(z.real)
        return np.zeros_like(z, dtype=np.float64)


@dataclass(frozen=True)
class EscapeTimeSpec:
    kind: str  # "mandelbrot" | "julia"
    c: complex = 0j  # julia constant; ignored for mandelbrot
    viewport: tuple[float, float, float, float] = (-2.0, 1.0, -1.5, 1.5)  # re0, re1, im0, im1
    max_iter: int = 100
    bailout: float = 2.0
    trap: Trap = field(default_factory=lambda: Trap("none"))
    palette: tuple[tuple[float, float, float], ...] = ()
    height: int = 64
    width: int = 64

    def __post_init__(self):
        if self.kind not in ("mandelbrot", "julia"):
            raise ParameterError(f"unknown escape-time kind {self.kind!r}")
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.bailout < 2.0:
            raise ParameterError(f"bailout must be >= 2, got {self.bailout}")
        re0, re1, im0, im1 = self.viewport
        if not (re1 > re0 and im1 > im0):
            raise ParameterError(f"viewport must have positive area, got {self.viewport}")
        if self.height < 1 or self.width < 1:
            raise ParameterError("render size must be positive")


@dataclass(frozen=True)
class AffineMap:
    matrix: tuple[tuple[float, float], tuple[float, float]]
    translation: tuple[float, float]
    probability: float

    def operator_norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.matrix), ord=2))

    def fixed_point(self) -> tuple[float, float]:
        a = np.asarray(self.matrix)
        b = np.asarray(self.translation)
        return tuple(np.linalg.solve(np.eye(2) - a, b))


@dataclass(frozen=True)
class IfsSpec:
    maps: tuple[AffineMap, ...]
    n_points: int = 100_000
    height: int = 64
    width: int = 64
    palette: tuple[tuple[float, float, float], ...] = ()
    burn_in: int = 50

    def __post_init__(self):
        if len(self.maps) < 2:
            raise ParameterError(f"IFS needs >= 2 maps, got {len(self.maps)}")
        for i, m in enumerate(self.maps):
            if m.operator_norm() >= 1.0:
                raise ParameterError(f"map {i} is not contractive (norm {m.operator_norm():.3f})")
        total = sum(m.probability for m in self.maps)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"map probabilities must sum to 1, got {total}")
        if self.n_points < 1:
            raise ParameterError("n_points must be positive")
        if self.burn_in < 0:
            raise ParameterError("burn_in must be >= 0")


@dataclass(frozen=True, eq=False)
class MixingSet:
    images: tuple[np.ndarray, ...]
    tags: tuple[str, ...]  # "escape_time" | "ifs" | "external" per image

    def __post_init__(self):
        if len(self.images) != len(self.tags):
            raise ParameterError("images and tags must align")

    def __len__(self) -> int:
        return len(self.images)


def escape_iterations(
    z0: complex, c: complex, max_iter: int, bailout: float = 2.0, trap: Trap | None = None
) -> tuple[int, float]:
    """Iterate z <- z^2 + c from z0; return (first escape iteration, trap distance).

    Returns max_iter when the orbit never exceeds the bailout radius. The trap
    distance is the minimum over the visited orbit (0.0 when trap is None).
    """
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    z = complex(z0)
    best = math.inf if trap is not None and trap.kind != "none" else 0.0
    for n in range(1, max_iter + 1):
        z = z * z + c
        if trap is not None and trap.kind != "none":
            d = abs(z - trap.point) if trap.kind == "point" else (
                abs(z.imag) if trap.axis == "real" else abs(z.real)
            )
            best = min(best, d)
        if abs(z) > bailout:
            return n, float(best)
    return max_iter, float(best)


def _pixel_grid(spec: EscapeTimeSpec) -> np.ndarray:
    re0, re1, im0, im1 = spec.viewport
    re = re0 + (np.arange(spec.width) + 0.5) * (re1 - re0) / spec.width
    im = im1 - (np.arange(spec.height) + 0.5) * (im1 - im0) / spec.height
    return re[None, :] + 1j * im[:, None]


def _palette_array(palette) -> np.ndarray:
    if not palette:
        raise ParameterError("palette must be nonempty")
    arr = np.asarray(palette, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ParameterError(f"palette must be a list of RGB triples, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ParameterError("palette colors must lie in [0, 1]")
    return arr


def _escape_scalar_field(spec: EscapeTimeSpec) -> np.ndarray:
    """Per-pixel color scalar in [0, 1] before palette lookup."""
    grid = _pixel_grid(spec)
    flat = grid.ravel()
    n = flat.shape[0]
    if spec.kind == "mandelbrot":
        z = np.zeros(n, dtype=np.complex128)
        c = flat
    else:
        z = flat.copy()
        c = np.full(n, spec.c, dtype=np.complex128)

    counts = np.full(n, spec.max_iter, dtype=np.int64)
    has_trap = spec.trap.kind != "none"
    trap_min = np.full(n, np.inf if has_trap else 0.0, dtype=np.float64)

    active = np.arange(n)
    for it in range(1, spec.max_iter + 1):
        z[active] = z[active] * z[active] + c[active]
        if has_trap:
            d = spec.trap.distance(z[active])
            trap_min[active] = np.minimum(trap_min[active], d)
        escaped = np.abs(z[active]) > spec.bailout
        if escaped.any():
            counts[active[escaped]] = it
            active = active[~escaped]
            if active.size == 0:
                break

    norm = counts / spec.max_iter
    if has_trap:
        scalar = 0.5 * norm + 0.5 * np.exp(-trap_min)
    else:
        scalar = norm
    return scalar.reshape(spec.height, spec.width)


def render_escape_time(spec: EscapeTimeSpec, rng: SeededRng | None = None) -> np.ndarray:
    """Render an orbit-trap escape-time fractal.

    The rng argument is accepted for interface symmetry with render_ifs; the
    output is fully determined by the spec.
    """
    pal = _palette_array(spec.palette)
    scalar = _escape_scalar_field(spec)
    idx = np.clip(np.floor(scalar * (len(pal) - 1) + 0.5).astype(np.intp), 0, len(pal) - 1)
    img = pal[idx]
    img.flags.writeable = False
    return img


def ifs_points(spec: IfsSpec, rng: SeededRng) -> np.ndarray:
    """Chaos-game point stream (n_points x 2 array), burn-in discarded.

    Runs a block of walkers in parallel; each walker starts at its first
    map-application of the origin and discards burn_in iterates.
    """
    walkers = min(_WALKERS, spec.n_points)
    steps = -(-spec.n_points // walkers)  # ceil division
    mats = np.asarray([m.matrix for m in spec.maps])
    trans = np.asarray([m.translation for m in spec.maps])
    probs = np.asarray([m.probability for m in spec.maps])
    cum = np.cumsum(probs)
    cum[-1] = 1.0

    pts = np.zeros((walkers, 2), dtype=np.float64)
    out = np.empty((steps * walkers, 2), dtype=np.float64)
    for step in range(spec.burn_in + steps):
        u = rng.uniform(size=walkers)
        idx = np.searchsorted(cum, u, side="right")
        pts = np.einsum("wij,wj->wi", mats[idx], pts) + trans[idx]
        if step >= spec.burn_in:
            out[(step - spec.burn_in) * walkers : (step - spec.burn_in + 1) * walkers] = pts
    return out[: spec.n_points]


def render_ifs(spec: IfsSpec, rng: SeededRng) -> np.ndarray:
    """Accumulate chaos-game hit density and colorize through the palette."""
    pal = _palette_array(spec.palette)
    pts = ifs_points(spec, rng)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    margin = 0.02 * span
    lo = lo - margin
    span = span + 2 * margin
    cols = np.clip(((pts[:, 0] - lo[0]) / span[0] * spec.width).astype(np.intp), 0, spec.width - 1)
    rows = np.clip(((pts[:, 1] - lo[1]) / span[1] * spec.height).astype(np.intp), 0, spec.height - 1)
    counts = np.zeros((spec.height, spec.width), dtype=np.int64)
    np.add.at(counts, (rows, cols), 1)
    peak = counts.max()
    scalar = np.log1p(counts) / math.log1p(peak) if peak > 0 else counts.astype(np.float64)
    idx = np.clip(np.floor(scalar * (len(pal) - 1) + 0.5).astype(np.intp), 0, len(pal) - 1)
    img = pal[idx]
    img.flags.writeable = False
    return img


def spec_hash(spec) -> str:
    """Stable content hash of a render spec, for manifests."""

    def norm(obj):
        if isinstance(obj, complex):
            return [obj.real, obj.imag]
        if isinstance(obj, (Trap, EscapeTimeSpec, IfsSpec, AffineMap)):
            return {k: norm(v) for k, v in vars(obj).items()}
        if isinstance(obj, (tuple, list)):
            return [norm(v) for v in obj]
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        return obj

    payload = json.dumps({"type": type(spec).__name__, "spec": norm(spec)}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def random_palette(rng: SeededRng, n_colors: int = PALETTE_SIZE) -> tuple[tuple[float, float, float], ...]:
    """Random anchor colors in permuted order, interpolated to n_colors entries."""
    n_anchors = 4 + int(rng.integers(5))
    anchors = rng.uniform(size=(n_anchors, 3))
    anchors = anchors[rng.permutation(n_anchors)]
    xs = np.linspace(0.0, 1.0, n_anchors)
    grid = np.linspace(0.0, 1.0, n_colors)
    pal = np.stack([np.interp(grid, xs, anchors[:, ch]) for ch in range(3)], axis=1)
    return tuple(tuple(row) for row in pal)


def _random_trap(rng: SeededRng, viewport) -> Trap:
    roll = int(rng.integers(3))
    if roll == 0:
        return Trap("none")
    if roll == 1:
        re0, re1, im0, im1 = viewport
        p = complex(re0 + (re1 - re0) * rng.uniform(), im0 + (im1 - im0) * rng.uniform())
        return Trap("point", point=p)
    return Trap("line", axis="real" if rng.integers(2) == 0 else "imag")


def _near_boundary_c(rng: SeededRng) -> complex:
    # A point is "near the boundary" when its orbit escapes, but not quickly.
    for _ in range(256):
        c = complex(-2.0 + 3.0 * rng.uniform(), -1.5 + 3.0 * rng.uniform())
        n, _ = escape_iterations(0j, c, max_iter=64)
        if 5 <= n < 64:
            return c
    return complex(-0.75, 0.1)


def _degenerate(scalar: np.ndarray) -> bool:
    hist = np.bincount(np.clip((scalar * 15.999).astype(np.intp), 0, 15).ravel(), minlength=16)
    return hist.max() / scalar.size > 0.95


def random_escape_spec(size: tuple[int, int], rng: SeededRng) -> EscapeTimeSpec:
    """Randomized escape-time spec, rejecting near-uniform probe renders."""
    h, w = size
    aspect = w / h
    for _ in range(16):
        kind = "mandelbrot" if rng.integers(2) == 0 else "julia"
        if kind == "julia":
            # Area-uniform radius in the annulus |c| in [0.3, 1.2].
            r = math.sqrt(0.3**2 + (1.2**2 - 0.3**2) * rng.uniform())
            theta = 2 * math.pi * rng.uniform()
            c = complex(r * math.cos(theta), r * math.sin(theta))
            center = complex(0.3 * (rng.uniform() - 0.5), 0.3 * (rng.uniform() - 0.5))
            half_h = 0.7 + 0.8 * rng.uniform()
        else:
            c = 0j
            center = _near_boundary_c(rng)
            half_h = 10 ** (math.log10(0.05) + (math.log10(1.5) - math.log10(0.05)) * rng.uniform())
        half_w = half_h * aspect
        viewport = (center.real - half_w, center.real + half_w, center.imag - half_h, center.imag + half_h)
        trap = _random_trap(rng, viewport)
        spec = EscapeTimeSpec(
            kind=kind,
            c=c,
            viewport=viewport,
            max_iter=80 + int(rng.integers(121)),
            trap=trap,
            palette=random_palette(rng),
            height=h,
            width=w,
        )
        probe = EscapeTimeSpec(**{**vars(spec), "height": 48, "width": 48})
        if not _degenerate(_escape_scalar_field(probe)):
            return spec
    return spec


def _random_affine_map(rng: SeededRng) -> AffineMap:
    for _ in range(256):
        mat = 0.9 * (2.0 * rng.uniform(size=(2, 2)) - 1.0)
        norm = float(np.linalg.norm(mat, ord=2))
        if 0.2 <= norm <= 0.95:
            t = 2.0 * rng.uniform(size=2) - 1.0
            return AffineMap(tuple(map(tuple, mat)), tuple(t), probability=0.0)
    return AffineMap(((0.5, 0.0), (0.0, 0.5)), (0.25, 0.25), probability=0.0)


def random_ifs_spec(size: tuple[int, int], rng: SeededRng) -> IfsSpec:
    h, w = size
    n_maps = 2 + int(rng.integers(3))
    maps = [_random_affine_map(rng) for _ in range(n_maps)]
    dets = np.array([abs(np.linalg.det(np.asarray(m.matrix))) + 0.05 for m in maps])
    probs = dets / dets.sum()
    maps = [AffineMap(m.matrix, m.translation, float(p)) for m, p in zip(maps, probs)]
    # Re-normalize the float tail onto the last map so the sum is exactly 1.
    drift = 1.0 - sum(m.probability for m in maps)
    last = maps[-1]
    maps[-1] = AffineMap(last.matrix, last.translation, last.probability + drift)
    n_points = max(50_000, min(400_000, 8 * h * w))
    return IfsSpec(
        maps=tuple(maps),
        n_points=n_points,
        height=h,
        width=w,
        palette=random_palette(rng),
        burn_in=50,
    )


def build_mixing_set(
    n_escape: int,
    n_ifs: int,
    external_dir=None,
    size: tuple[int, int] = (64, 64),
    rng: SeededRng | None = None,
) -> MixingSet:
    """Render the requested counts and ingest any external directory.

    External images are decoded, center-cropped to the target aspect ratio
    and resized; unreadable files are skipped with a warning. An empty result
    is a configuration error.
    """
    if rng is None:
        rng = SeededRng(0)
    if n_escape < 0 or n_ifs < 0:
        raise ParameterError("counts must be non-negative")
    images: list[np.ndarray] = []
    tags: list[str] = []
    for i in range(n_escape):
        crng = rng.child(i)
        spec = random_escape_spec(size, crng)
        images.append(render_escape_time(spec, crng))
        tags.append("escape_time")
    for i in range(n_ifs):
        crng = rng.child(n_escape + i)
        spec = random_ifs_spec(size, crng)
        images.append(render_ifs(spec, crng))
        tags.append("ifs")
    if external_dir is not None:
        from .dataset import DatasetSource, enumerate_images

        paths = enumerate_images(DatasetSource(root=external_dir))
        skipped = 0
        for path in paths:
            try:
                img = decode_file(path)
            except Exception as exc:  # noqa: BLE001 - skip-and-warn contract
                warnings.warn(f"skipping unreadable mixing image {path}: {exc}", stacklevel=2)
                skipped += 1
                continue
            images.append(center_crop_resize(img, *size))
            tags.append("external")
        if paths and skipped == len(paths) and n_escape + n_ifs == 0:
            raise ConfigurationError(f"all {skipped} external mixing images were unreadable")
    if not images:
        raise ConfigurationError("mixing set is empty: nothing generated and no externals")
    return MixingSet(tuple(images), tuple(tags))
