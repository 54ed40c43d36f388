"""Batch-array augmentation for host ML training loops.

The binding accepts N x H x W x 3 batches in either 8-bit (uint8) or
unit-interval real form, augments each item with the child stream
(seed, item index) — the same discipline the CLI uses — and returns a batch
whose dtype mirrors the input. float64 C-contiguous batches are consumed
zero-copy; everything else is converted once on the way in.

Augmentation runs inside numpy/OpenCV kernels that release the GIL, so host
data-loading threads overlap with it.
"""

from __future__ import annotations

import numpy as np

import fractalmix


class BindingError(ValueError):
    """Batch shape or dtype not accepted by the binding."""


def build_mixing_set(
    n_escape: int,
    n_ifs: int,
    size: tuple[int, int],
    seed: int = 0,
    external_dir=None,
) -> fractalmix.MixingSet:
    """Build the synthetic mixing set used by augment_batch (CLI: fractal-gen)."""
    return fractalmix.build_mixing_set(
        n_escape, n_ifs, external_dir=external_dir, size=size, rng=fractalmix.SeededRng(seed)
    )


def _split_batch(batch: np.ndarray) -> tuple[list[np.ndarray], str]:
    if not isinstance(batch, np.ndarray):
        raise BindingError(f"batch must be a numpy array, got {type(batch).__name__}")
    if batch.ndim != 4 or batch.shape[3] != 3:
        raise BindingError(f"batch must be NxHxWx3, got shape {batch.shape}")
    if batch.shape[0] < 1:
        raise BindingError("batch must be nonempty")
    if batch.dtype == np.uint8:
        floats = batch.astype(np.float64) / 255.0
        return [floats[i] for i in range(len(floats))], "uint8"
    if np.issubdtype(batch.dtype, np.floating):
        if batch.size and (batch.min() < 0.0 or batch.max() > 1.0):
            raise BindingError("float batches must hold unit-interval values")
        if batch.dtype == np.float64 and batch.flags.c_contiguous:
            return [batch[i] for i in range(len(batch))], "float64"  # zero-copy views
        converted = batch.astype(np.float64)
        return [converted[i] for i in range(len(converted))], str(batch.dtype)
    raise BindingError(f"unsupported batch dtype {batch.dtype}; use uint8 or float")


def _join_batch(outputs: list[np.ndarray], domain: str) -> np.ndarray:
    stacked = np.stack(outputs)
    if domain == "uint8":
        return np.floor(stacked * 255.0 + 0.5).astype(np.uint8)
    return stacked.astype(np.dtype(domain))


def augment_batch(
    batch: np.ndarray,
    mixing_set: fractalmix.MixingSet,
    cfg: fractalmix.AugmentConfig | None = None,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """Augment a batch (CLI: augment); item i uses child stream (seed, i)."""
    items, domain = _split_batch(batch)
    if cfg is None:
        cfg = fractalmix.AugmentConfig()
    outputs = fractalmix.augment_batch(items, mixing_set, cfg, run_seed=seed, workers=workers)
    return _join_batch(outputs, domain)
