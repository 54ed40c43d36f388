"""Measure full-pipeline vs identity throughput and record the regression floor.

The first measured full/identity ratio becomes the repo's floor
(tests/data/throughput_floor.json); the acceptance suite asserts later runs
stay above half of it, on top of the hard 20%-of-identity requirement.

Usage: python scripts/record_bench_floor.py [--force]
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
FLOOR_PATH = REPO / "tests" / "data" / "throughput_floor.json"


def measure() -> dict:
    from fractalmix import AugmentConfig, SeededRng, build_mixing_set, encode_png
    from fractalmix.bench import run_bench
    from fractalmix.dataset import DatasetSource

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        gen = np.random.default_rng(0)
        for i in range(16):
            (root / f"{i:02d}.png").write_bytes(encode_png(gen.random((224, 224, 3))))
        mixing_set = build_mixing_set(8, 8, size=(224, 224), rng=SeededRng(1))
        cfg = AugmentConfig(patch_sizes=(4, 8, 16, 32, 64, 256))
        report = run_bench(
            DatasetSource(root=root), cfg, mixing_set, workers=8, duration=3.0, run_seed=0
        )
    return {
        "ratio_full_over_identity": report.images_per_sec_full / report.images_per_sec_identity,
        "images_per_sec_full": report.images_per_sec_full,
        "images_per_sec_identity": report.images_per_sec_identity,
        "workers": report.workers,
        "image_size": "224x224",
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--force", action="store_true", help="overwrite an existing floor")
    args = parser.parse_args()
    if FLOOR_PATH.exists() and not args.force:
        print(f"floor already recorded at {FLOOR_PATH}; use --force to re-record")
        print(FLOOR_PATH.read_text())
        return 0
    result = measure()
    FLOOR_PATH.parent.mkdir(parents=True, exist_ok=True)
    FLOOR_PATH.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(json.dumps(result, indent=2, sort_keys=True))
    print(f"recorded floor at {FLOOR_PATH}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
