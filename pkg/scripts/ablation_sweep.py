"""Sweep framework and mixing-operator ablations over a small seeded corpus.

For each configuration this reports the mean absolute deviation the
augmentation introduces (a cheap augmentation-strength proxy) and the wall
time per image, mirroring the framework / operator / patch-variant ablation
switches without any model training.

Usage: python scripts/ablation_sweep.py [--size 32] [--images 24] [--seed 0]
"""

import argparse
import time

import numpy as np

from fractalmix import AugmentConfig, SeededRng, augment, build_mixing_set

SWEEPS = {
    "framework": [
        {"framework": "chain_mixed"},
        {"framework": "linear_mix"},
        {"framework": "mixed_input"},
    ],
    "mix_ops": [
        {"mix_ops": ("addition", "multiplication")},
        {"mix_ops": ("random_pixel",)},
        {"mix_ops": ("random_element",)},
        {"mix_ops": ("convex", "addition", "multiplication", "random_pixel", "random_element")},
    ],
    "patch_variant": [
        {"scar_enabled": False},  # squares only
        {"scar_enabled": True, "patch_sizes": (10**9,)},  # pixel-level + scars
        {"scar_enabled": True},  # squares + scars (default)
    ],
}


def describe(overrides: dict) -> str:
    return ", ".join(f"{k}={v}" for k, v in overrides.items())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=32)
    parser.add_argument("--images", type=int, default=24)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    mixing_set = build_mixing_set(6, 6, size=(args.size, args.size), rng=SeededRng(args.seed))
    gen = np.random.default_rng(args.seed)
    corpus = [gen.random((args.size, args.size, 3)) for _ in range(args.images)]

    for sweep_name, configs in SWEEPS.items():
        print(f"\n== {sweep_name} sweep ==")
        for overrides in configs:
            cfg = AugmentConfig(**overrides)
            root = SeededRng(args.seed)
            deviations = []
            start = time.perf_counter()
            for i, x in enumerate(corpus):
                out, _ = augment(x, mixing_set, cfg, root.child(i))
                deviations.append(float(np.mean(np.abs(out - x))))
            per_image_ms = (time.perf_counter() - start) / len(corpus) * 1000
            print(
                f"  {describe(overrides):<72} "
                f"mean|out-x|={np.mean(deviations):.4f}  {per_image_ms:6.2f} ms/img"
            )


if __name__ == "__main__":
    main()
