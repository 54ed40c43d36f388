"""Throughput benchmark: full pipeline vs a decode+encode identity baseline.

Both pipelines run over the same in-memory corpus with a warm-up pass
excluded, then repeat whole passes until the requested duration has elapsed.
Per-item augmentation uses the child stream (run_seed, item index), so the
output digest is independent of the worker count.
"""

from __future__ import annotations

import hashlib
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .dataset import DatasetSource, enumerate_images
from .errors import ParameterError
from .fractals import MixingSet
from .image import decode, encode_png
from .pipeline import AugmentConfig, augment, _prepared_images
from .rng import SeededRng


@dataclass
class BenchReport:
    images_per_sec_full: float
    images_per_sec_identity: float
    overhead_ratio: float  # identity throughput / full throughput
    stage_seconds: dict = field(default_factory=dict)  # cumulative decode/augment/encode
    wall_seconds_full: float = 0.0
    wall_seconds_identity: float = 0.0
    workers: int = 1
    images: int = 0
    config_hash: str = ""
    output_digest_full: str = ""
    output_digest_identity: str = ""

    def to_dict(self) -> dict:
        return {
            "images_per_sec_full": self.images_per_sec_full,
            "images_per_sec_identity": self.images_per_sec_identity,
            "overhead_ratio": self.overhead_ratio,
            "stage_seconds": dict(self.stage_seconds),
            "wall_seconds_full": self.wall_seconds_full,
            "wall_seconds_identity": self.wall_seconds_identity,
            "workers": self.workers,
            "images": self.images,
            "config_hash": self.config_hash,
            "output_digest_full": self.output_digest_full,
            "output_digest_identity": self.output_digest_identity,
        }


def _run_pass(blobs, fn, workers: int):
    if workers <= 1:
        return [fn(i) for i in range(len(blobs))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(blobs))))


def run_bench(
    src: DatasetSource,
    cfg: AugmentConfig,
    mixing_set: MixingSet,
    workers: int = 1,
    duration: float = 2.0,
    run_seed: int = 0,
) -> BenchReport:
    paths = enumerate_images(src)
    if not paths:
        raise ParameterError(f"bench source {src.root} has no images")
    blobs = [p.read_bytes() for p in paths]
    root = SeededRng(run_seed)
    first = decode(blobs[0])
    prepared = MixingSet(_prepared_images(mixing_set, *first.shape[:2]), mixing_set.tags)

    stage = {"decode": 0.0, "augment": 0.0, "encode": 0.0}
    stage_lock = threading.Lock()

    def full_item(i: int) -> bytes:
        t0 = time.perf_counter()
        img = decode(blobs[i])
        t1 = time.perf_counter()
        out, _ = augment(img, prepared, cfg, root.child(i))
        t2 = time.perf_counter()
        data = encode_png(out)
        t3 = time.perf_counter()
        with stage_lock:
            stage["decode"] += t1 - t0
            stage["augment"] += t2 - t1
            stage["encode"] += t3 - t2
        return data

    def identity_item(i: int) -> bytes:
        return encode_png(decode(blobs[i]))

    # Warm-up pass, excluded from all measurements.
    _run_pass(blobs, full_item, workers)
    _run_pass(blobs, identity_item, workers)
    for key in stage:
        stage[key] = 0.0

    def timed(fn) -> tuple[float, int, str]:
        digest = hashlib.sha256()
        done = 0
        start = time.perf_counter()
        while True:
            outputs = _run_pass(blobs, fn, workers)
            done += len(outputs)
            if done == len(outputs):  # digest of the first pass only
                for data in outputs:
                    digest.update(data)
            if time.perf_counter() - start >= duration:
                break
        return time.perf_counter() - start, done, digest.hexdigest()

    wall_full, n_full, digest_full = timed(full_item)
    wall_id, n_id, digest_id = timed(identity_item)

    tput_full = n_full / wall_full
    tput_id = n_id / wall_id
    return BenchReport(
        images_per_sec_full=tput_full,
        images_per_sec_identity=tput_id,
        overhead_ratio=tput_id / tput_full,
        stage_seconds=stage,
        wall_seconds_full=wall_full,
        wall_seconds_identity=wall_id,
        workers=workers,
        images=len(blobs),
        config_hash=cfg.hash(),
        output_digest_full=digest_full,
        output_digest_identity=digest_id,
    )
