"""Batch-array bindings for fractalmix augmentation."""

from .batch import BindingError, augment_batch, build_mixing_set

__all__ = ["BindingError", "augment_batch", "build_mixing_set"]
