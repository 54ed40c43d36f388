"""The end-to-end augmentation engine.

The default chain-mixed framework runs k parallel augmentation chains over a
clean image x. Each chain copies x, picks a method (image-level or P-level),
draws a depth uniformly in [1, t], and applies that many steps:

  image-level  apply a sampled whole-image op to the running chain image
  P-level      sample a region (square, scar, or the whole image) and a mix
               operator, then mix the running chain image with either a
               randomly drawn mixing-set fractal or a freshly augmented copy
               of x (fractal branch taken with probability fractal_prob)

Chain outputs are combined with Dirichlet weights w and skip-connected to
the original: out = clamp(m * sum_i w_i * chain_i + (1 - m) * x), with
m ~ Beta(alpha, alpha). The pipeline consumes no labels.

Two framework variants reuse the same chain machinery: linear_mix fixes the
chain methods (first ceil(k/2) chains P-level, the rest image-level) instead
of drawing them, and mixed_input runs a single sequential chain whose stages
alternate methods, feeding each stage's output into the next.

Seed discipline: from the rng handed to an augment call, child(0) drives the
Dirichlet weights, child(1) the Beta skip weight, and child(2 + i) chain i.
Every decision is recorded in an AugmentTrace; rebuilding the rng from the
trace's (seed, path) and re-running reproduces the output bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import BatchItemError, ConfigurationError, ParameterError
from .fractals import MixingSet
from .image import ensure_image, resize_bilinear
from .mixer import (
    MIX_KINDS,
    MixOperator,
    _mix_in_region_unchecked,
    sample_scar_region,
    sample_square_region,
)
from .ops import OP_BANK, _apply_unchecked, resolve_bank, sample_op
from .rng import SeededRng, choose_uniform, sample_beta, sample_dirichlet

FRAMEWORKS = ("chain_mixed", "linear_mix", "mixed_input")
METHODS = ("image", "p")


@dataclass(frozen=True)
class AugmentConfig:
    k: int = 3
    t: int = 3
    alpha: float = 1.0
    framework: str = "chain_mixed"
    patch_sizes: tuple[int, ...] = (4, 8, 16, 32)
    scar_enabled: bool = True
    mix_ops: tuple[str, ...] = MIX_KINDS
    op_bank: tuple[str, ...] = tuple(op.name for op in OP_BANK)
    fractal_prob: float = 0.5
    methods: tuple[str, ...] = METHODS

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.t < 1:
            raise ParameterError(f"t must be >= 1, got {self.t}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.framework not in FRAMEWORKS:
            raise ParameterError(f"framework must be one of {FRAMEWORKS}, got {self.framework!r}")
        if not self.mix_ops or any(kind not in MIX_KINDS for kind in self.mix_ops):
            raise ParameterError(f"mix_ops must be a nonempty subset of {MIX_KINDS}")
        if not self.patch_sizes:
            raise ParameterError("patch_sizes must be nonempty")
        if not 0.0 <= self.fractal_prob <= 1.0:
            raise ParameterError(f"fractal_prob must be in [0, 1], got {self.fractal_prob}")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ParameterError(f"methods must be a nonempty subset of {METHODS}")
        resolve_bank(self.op_bank)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "t": self.t,
            "alpha": self.alpha,
            "framework": self.framework,
            "patch_sizes": list(self.patch_sizes),
            "scar_enabled": self.scar_enabled,
            "mix_ops": list(self.mix_ops),
            "op_bank": list(self.op_bank),
            "fractal_prob": self.fractal_prob,
            "methods": list(self.methods),
        }

    def hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class StepTrace:
    kind: str  # "image_op" | "mix"
    op_name: str | None = None
    strength: float | None = None
    region: tuple[int, int, int, int] | None = None
    lam: float | None = None
    mix_kind: str | None = None
    source: tuple | None = None  # ("fractal", idx) or ("augmented", op, strength)


@dataclass(frozen=True)
class ChainTrace:
    method: str
    depth: int
    steps: tuple[StepTrace, ...]


@dataclass(frozen=True)
class AugmentTrace:
    framework: str
    seed: int
    path: tuple[int, ...]
    weights: tuple[float, ...]
    skip_weight: float
    chains: tuple[ChainTrace, ...]

    def to_dict(self) -> dict:
        return {
            "framework": self.framework,
            "seed": self.seed,
            "path": list(self.path),
            "weights": list(self.weights),
            "skip_weight": self.skip_weight,
            "chains": [
                {
                    "method": c.method,
                    "depth": c.depth,
                    "steps": [
                        {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(s).items() if v is not None}
                        for s in c.steps
                    ],
                }
                for c in self.chains
            ],
        }

    def hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def _prepared_images(mixing_set: MixingSet, h: int, w: int) -> tuple[np.ndarray, ...]:
    if all(img.shape[:2] == (h, w) for img in mixing_set.images):
        return mixing_set.images
    return tuple(resize_bilinear(img, h, w) for img in mixing_set.images)


class MixingSetCache:
    """Thread-safe cache of a mixing set resized per image dimensions.

    Amortizes the per-call resize when one set serves images of mixed sizes
    (the batch API prepares its own sizes eagerly instead).
    """

    def __init__(self, base: MixingSet):
        self._base = base
        self._cache: dict[tuple[int, int], MixingSet] = {}
        self._lock = threading.Lock()

    def for_dims(self, h: int, w: int) -> MixingSet:
        key = (int(h), int(w))
        with self._lock:
            hit = self._cache.get(key)
            if hit is None:
                hit = replace(self._base, images=_prepared_images(self._base, *key))
                self._cache[key] = hit
            return hit


def _p_level_step(x_mixed, x, fractals, cfg: AugmentConfig, bank, crng: SeededRng) -> tuple[np.ndarray, StepTrace]:
    h, w = x.shape[:2]
    use_scar = cfg.scar_enabled and min(h, w) >= 8 and crng.uniform() < 0.5
    if use_scar:
        region = sample_scar_region((h, w), crng, alpha=cfg.alpha)
    else:
        region = sample_square_region((h, w), cfg.patch_sizes, crng, alpha=cfg.alpha)
    op = MixOperator(choose_uniform(cfg.mix_ops, crng))
    if crng.uniform() < cfg.fractal_prob:
        idx = int(crng.integers(len(fractals)))
        x2 = fractals[idx]
        source = ("fractal", idx)
    else:
        draw = sample_op(crng, bank)
        x2 = _apply_unchecked(x, draw)
        source = ("augmented", draw.op.name, draw.strength)
    mixed = _mix_in_region_unchecked(x_mixed, x2, region, op, crng)
    step = StepTrace(
        kind="mix",
        region=(region.x0, region.y0, region.w, region.h),
        lam=region.lam,
        mix_kind=op.kind,
        source=source,
    )
    return mixed, step


def _image_level_step(x_mixed, bank, crng: SeededRng) -> tuple[np.ndarray, StepTrace]:
    draw = sample_op(crng, bank)
    out = _apply_unchecked(x_mixed, draw)
    return out, StepTrace(kind="image_op", op_name=draw.op.name, strength=draw.strength)


def _run_chain(x, fractals, cfg, bank, method: str, crng: SeededRng) -> tuple[np.ndarray, ChainTrace]:
    depth = 1 + int(crng.integers(cfg.t))
    x_mixed = x.copy()
    steps = []
    for _ in range(depth):
        if method == "image":
            x_mixed, step = _image_level_step(x_mixed, bank, crng)
        else:
            x_mixed, step = _p_level_step(x_mixed, x, fractals, cfg, bank, crng)
        steps.append(step)
    return x_mixed, ChainTrace(method=method, depth=depth, steps=tuple(steps))


def _finish(x, x_mix, m, w, chains, cfg, rng) -> tuple[np.ndarray, AugmentTrace]:
    out = np.clip(m * x_mix + (1.0 - m) * x, 0.0, 1.0)
    trace = AugmentTrace(
        framework=cfg.framework,
        seed=rng.seed,
        path=rng.path,
        weights=tuple(float(v) for v in w),
        skip_weight=float(m),
        chains=tuple(chains),
    )
    return out, trace


def _check_inputs(x, mixing_set: MixingSet):
    x = ensure_image(x)
    if len(mixing_set) == 0:
        raise ConfigurationError("mixing set is empty")
    return x


def ipmix_augment(
    x: np.ndarray,
    mixing_set: MixingSet,
    cfg: AugmentConfig,
    rng: SeededRng,
    override_m: float | None = None,
) -> tuple[np.ndarray, AugmentTrace]:
    """Chain-mixed augmentation: k weighted chains, skip-connected to x.

    override_m pins the skip weight (testing and inspection hook); the Beta
    draw still happens so the stream layout is unchanged.
    """
    x = _check_inputs(x, mixing_set)
    if cfg.framework != "chain_mixed":
        raise ParameterError(f"config framework is {cfg.framework!r}, expected 'chain_mixed'")
    fractals = _prepared_images(mixing_set, *x.shape[:2])
    bank = resolve_bank(cfg.op_bank)
    w = sample_dirichlet(cfg.alpha, cfg.k, rng.child(0))
    m = sample_beta(cfg.alpha, rng.child(1))
    if override_m is not None:
        m = float(override_m)
    x_mix = np.zeros_like(x)
    chains = []
    for i in range(cfg.k):
        crng = rng.child(2 + i)
        method = choose_uniform(cfg.methods, crng) if len(cfg.methods) > 1 else cfg.methods[0]
        x_chain, trace = _run_chain(x, fractals, cfg, bank, method, crng)
        x_mix += w[i] * x_chain
        chains.append(trace)
    return _finish(x, x_mix, m, w, chains, cfg, rng)


def linear_mix_augment(
    x: np.ndarray,
    mixing_set: MixingSet,
    cfg: AugmentConfig,
    rng: SeededRng,
    override_m: float | None = None,
) -> tuple[np.ndarray, AugmentTrace]:
    """Linear-mix variant: fixed chain split instead of per-chain method draws.

    The first ceil(k/2) chains run P-level steps, the rest image-level.
    """
    x = _check_inputs(x, mixing_set)
    if cfg.framework != "linear_mix":
        raise ParameterError(f"config framework is {cfg.framework!r}, expected 'linear_mix'")
    fractals = _prepared_images(mixing_set, *x.shape[:2])
    bank = resolve_bank(cfg.op_bank)
    w = sample_dirichlet(cfg.alpha, cfg.k, rng.child(0))
    m = sample_beta(cfg.alpha, rng.child(1))
    if override_m is not None:
        m = float(override_m)
    n_p = -(-cfg.k // 2)  # ceil(k / 2)
    x_mix = np.zeros_like(x)
    chains = []
    for i in range(cfg.k):
        crng = rng.child(2 + i)
        method = "p" if i < n_p else "image"
        x_chain, trace = _run_chain(x, fractals, cfg, bank, method, crng)
        x_mix += w[i] * x_chain
        chains.append(trace)
    return _finish(x, x_mix, m, w, chains, cfg, rng)


def mixed_input_augment(
    x: np.ndarray,
    mixing_set: MixingSet,
    cfg: AugmentConfig,
    rng: SeededRng,
    override_m: float | None = None,
) -> tuple[np.ndarray, AugmentTrace]:
    """Mixed-input variant: one sequential chain, each stage feeding the next.

    Stage methods alternate through cfg.methods, starting from a uniform
    draw (no draw when a single method is configured). The Dirichlet weights
    are not used: there is only one chain.
    """
    x = _check_inputs(x, mixing_set)
    if cfg.framework != "mixed_input":
        raise ParameterError(f"config framework is {cfg.framework!r}, expected 'mixed_input'")
    fractals = _prepared_images(mixing_set, *x.shape[:2])
    bank = resolve_bank(cfg.op_bank)
    m = sample_beta(cfg.alpha, rng.child(1))
    if override_m is not None:
        m = float(override_m)
    crng = rng.child(2)
    depth = 1 + int(crng.integers(cfg.t))
    if len(cfg.methods) > 1:
        start = int(crng.integers(len(cfg.methods)))
    else:
        start = 0
    x_cur = x.copy()
    steps = []
    methods_used = []
    for j in range(depth):
        method = cfg.methods[(start + j) % len(cfg.methods)]
        methods_used.append(method)
        if method == "image":
            x_cur, step = _image_level_step(x_cur, bank, crng)
        else:
            x_cur, step = _p_level_step(x_cur, x, fractals, cfg, bank, crng)
        steps.append(step)
    chain = ChainTrace(method="+".join(methods_used), depth=depth, steps=tuple(steps))
    return _finish(x, x_cur, m, (1.0,), [chain], cfg, rng)


_AUGMENT_FNS = {
    "chain_mixed": ipmix_augment,
    "linear_mix": linear_mix_augment,
    "mixed_input": mixed_input_augment,
}


def augment(x, mixing_set, cfg: AugmentConfig, rng: SeededRng, override_m=None):
    """Dispatch to the configured framework."""
    return _AUGMENT_FNS[cfg.framework](x, mixing_set, cfg, rng, override_m=override_m)


def replay(x, mixing_set, cfg: AugmentConfig, trace: AugmentTrace) -> np.ndarray:
    """Re-run an augmentation from its trace; asserts the decisions match."""
    rng = SeededRng(trace.seed, trace.path)
    out, new_trace = augment(x, mixing_set, cfg, rng)
    if new_trace.to_dict() != trace.to_dict():
        raise ParameterError("trace does not match the configured pipeline")
    return out


def augment_batch(
    xs,
    mixing_set: MixingSet,
    cfg: AugmentConfig,
    run_seed: int,
    workers: int = 1,
) -> list[np.ndarray]:
    """Augment a batch; item i uses the child stream (run_seed, i).

    Results keep input order, and any worker count produces outputs
    bit-identical to a sequential run.
    """
    if len(xs) == 0:
        raise ParameterError("batch must be nonempty")
    root = SeededRng(run_seed)
    dims = {np.asarray(x).shape[:2] for x in xs if np.asarray(x).ndim >= 2}
    prepared = {
        (h, w): replace(mixing_set, images=_prepared_images(mixing_set, h, w))
        for (h, w) in dims
    }

    def run(i: int) -> np.ndarray:
        try:
            x = ensure_image(xs[i])
            out, _ = augment(x, prepared[x.shape[:2]], cfg, root.child(i))
            return out
        except Exception as exc:
            raise BatchItemError(i, exc) from exc

    if workers <= 1:
        return [run(i) for i in range(len(xs))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(xs))))
