"""Directional robustness check: a small CNN trained with and without
mixing augmentation, evaluated on a 4-corruption desk suite.

Protocol: 5,000-image CIFAR-10 subset, 10 epochs, 3 seeds. The claim tested
is directional only: the augmented model should post a lower mean corruption
error than the no-augmentation control in at least 2 of 3 seeds, with clean
error within +2 points of control.

The desk corruptions (gaussian noise, additive brightness shift, pixelate,
contrast compression) are applied by this script at eval time and are
distinct from the training op bank.

When CIFAR-10 is not on disk and cannot be downloaded, pass
``--dataset synthetic`` to run the same protocol on a procedural 10-class
pattern set (sanity harness for offline environments).

Usage:
  python scripts/train_toy.py --data ./data --out results.json
  python scripts/train_toy.py --dataset synthetic --quick --out results.json
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from fractalmix import AugmentConfig
from fractalmix_bindings import augment_batch, build_mixing_set

IMG_SIDE = 32
N_CLASSES = 10


# ---------------------------------------------------------------------------
# datasets


def load_cifar10(root: str, train: bool):
    import torchvision

    ds = torchvision.datasets.CIFAR10(root, train=train, download=True)
    images = np.asarray(ds.data, dtype=np.uint8)  # N x 32 x 32 x 3
    labels = np.asarray(ds.targets, dtype=np.int64)
    return images, labels


def synthetic_patterns(n: int, seed: int):
    """Procedural 10-class set: oriented gratings with class color tints."""
    gen = np.random.default_rng(seed)
    tints = np.stack(
        [0.35 + 0.65 * np.random.default_rng(1234 + k).random(3) for k in range(N_CLASSES)]
    )
    labels = gen.integers(N_CLASSES, size=n)
    yy, xx = np.mgrid[0:IMG_SIDE, 0:IMG_SIDE]
    images = np.empty((n, IMG_SIDE, IMG_SIDE, 3), dtype=np.uint8)
    for i in range(n):
        k = labels[i]
        theta = k * np.pi / N_CLASSES + gen.normal(0, 0.06)
        freq = gen.uniform(2.0, 4.0)
        phase = gen.uniform(0, 2 * np.pi)
        wave = np.sin(2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) / IMG_SIDE + phase)
        base = 0.5 + 0.4 * wave
        img = base[:, :, None] * tints[k][None, None, :]
        img = img + gen.normal(0, 0.05, size=img.shape)
        images[i] = np.floor(np.clip(img, 0, 1) * 255.0 + 0.5).astype(np.uint8)
    return images, labels.astype(np.int64)


# ---------------------------------------------------------------------------
# desk corruption suite (eval only; disjoint from the training op bank)


def corrupt_gaussian_noise(x, gen):
    return np.clip(x + gen.normal(0, 0.08, size=x.shape), 0, 1)


def corrupt_brightness_shift(x, gen):
    return np.clip(x + 0.25, 0, 1)


def corrupt_pixelate(x, gen):
    small = x[:, ::4, ::4, :]
    return np.repeat(np.repeat(small, 4, axis=1), 4, axis=2)


def corrupt_contrast(x, gen):
    mean = x.mean(axis=(1, 2, 3), keepdims=True)
    return np.clip((x - mean) * 0.4 + mean, 0, 1)


CORRUPTIONS = {
    "gaussian_noise": corrupt_gaussian_noise,
    "brightness_shift": corrupt_brightness_shift,
    "pixelate": corrupt_pixelate,
    "contrast": corrupt_contrast,
}


# ---------------------------------------------------------------------------
# model and training


class SmallCnn(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 32, 3, padding=1)
        self.conv2 = nn.Conv2d(32, 32, 3, padding=1)
        self.conv3 = nn.Conv2d(32, 64, 3, padding=1)
        self.fc1 = nn.Linear(64 * 8 * 8, 128)
        self.fc2 = nn.Linear(128, N_CLASSES)

    def forward(self, x):
        x = F.relu(self.conv1(x))
        x = F.max_pool2d(F.relu(self.conv2(x)), 2)
        x = F.max_pool2d(F.relu(self.conv3(x)), 2)
        x = x.flatten(1)
        x = F.relu(self.fc1(x))
        return self.fc2(x)


def normalize(batch_float, mean, std):
    return (batch_float - mean) / std


def to_tensor(batch_float):
    return torch.from_numpy(np.ascontiguousarray(batch_float.transpose(0, 3, 1, 2))).float()


def evaluate(model, images_u8, labels, mean, std, device):
    model.eval()
    errors = {}
    gen = np.random.default_rng(0)
    clean = images_u8.astype(np.float64) / 255.0
    variants = {"clean": clean}
    for name, fn in CORRUPTIONS.items():
        variants[name] = fn(clean, gen)
    with torch.no_grad():
        for name, data in variants.items():
            wrong = 0
            for i in range(0, len(data), 512):
                xb = to_tensor(normalize(data[i : i + 512], mean, std)).to(device)
                pred = model(xb).argmax(dim=1).cpu().numpy()
                wrong += int((pred != labels[i : i + 512]).sum())
            errors[name] = wrong / len(data)
    return errors


def train_one(images_u8, labels, test_images, test_labels, use_ipmix, run_seed, args, mixing_set, device):
    torch.manual_seed(run_seed)
    model = SmallCnn().to(device)
    opt = torch.optim.SGD(model.parameters(), lr=args.lr, momentum=0.9, weight_decay=5e-4)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.epochs)
    loss_fn = nn.CrossEntropyLoss()

    mean = (images_u8.astype(np.float64) / 255.0).mean(axis=(0, 1, 2))
    std = (images_u8.astype(np.float64) / 255.0).std(axis=(0, 1, 2)) + 1e-8
    cfg = AugmentConfig()

    order_gen = np.random.default_rng(run_seed)
    step = 0
    for epoch in range(args.epochs):
        model.train()
        perm = order_gen.permutation(len(images_u8))
        for i in range(0, len(perm), args.batch_size):
            idx = perm[i : i + args.batch_size]
            batch = images_u8[idx]
            if use_ipmix:
                batch = augment_batch(
                    batch, mixing_set, cfg, seed=run_seed * 1_000_003 + step, workers=1
                )
            xb = to_tensor(normalize(batch.astype(np.float64) / 255.0, mean, std)).to(device)
            yb = torch.from_numpy(labels[idx]).to(device)
            opt.zero_grad()
            loss = loss_fn(model(xb), yb)
            loss.backward()
            opt.step()
            step += 1
        sched.step()

    errors = evaluate(model, test_images, test_labels, mean, std, device)
    clean_error = errors.pop("clean")
    return {
        "clean_error": clean_error,
        "corruption_errors": errors,
        "mean_corruption_error": float(np.mean(list(errors.values()))),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", choices=("cifar10", "synthetic"), default="cifar10")
    parser.add_argument("--data", default="./data", help="torchvision dataset root")
    parser.add_argument("--subset", type=int, default=5000)
    parser.add_argument("--test-subset", type=int, default=2000)
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--lr", type=float, default=0.05)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--out", default="toy_results.json")
    parser.add_argument("--quick", action="store_true", help="tiny harness smoke mode")
    args = parser.parse_args()
    if args.quick:
        args.subset = min(args.subset, 600)
        args.test_subset = min(args.test_subset, 400)
        args.epochs = min(args.epochs, 2)
        args.seeds = args.seeds[:1]

    torch.set_num_threads(2)
    device = torch.device("cuda" if torch.cuda.is_available() else "cpu")

    if args.dataset == "cifar10":
        try:
            train_images, train_labels = load_cifar10(args.data, train=True)
            test_images, test_labels = load_cifar10(args.data, train=False)
        except Exception as exc:  # noqa: BLE001 - dataset availability is environmental
            print(f"CIFAR-10 unavailable ({exc}); use --dataset synthetic for offline runs", file=sys.stderr)
            return 2
    else:
        train_images, train_labels = synthetic_patterns(args.subset * 2, seed=7)
        test_images, test_labels = synthetic_patterns(args.test_subset * 2, seed=8)

    pick = np.random.default_rng(0)
    train_idx = pick.permutation(len(train_images))[: args.subset]
    test_idx = pick.permutation(len(test_images))[: args.test_subset]
    train_images, train_labels = train_images[train_idx], train_labels[train_idx]
    test_images, test_labels = test_images[test_idx], test_labels[test_idx]

    mixing_set = build_mixing_set(30, 30, size=(IMG_SIDE, IMG_SIDE), seed=5)

    runs = []
    for seed in args.seeds:
        t0 = time.perf_counter()
        arms = {}
        for arm, use_ipmix in (("ipmix", True), ("control", False)):
            arms[arm] = train_one(
                train_images, train_labels, test_images, test_labels,
                use_ipmix, seed, args, mixing_set, device,
            )
        elapsed = time.perf_counter() - t0
        runs.append({"seed": seed, **arms, "seconds": elapsed})
        print(
            f"seed {seed}: ipmix clean={arms['ipmix']['clean_error']:.3f} "
            f"mCE*={arms['ipmix']['mean_corruption_error']:.3f} | "
            f"control clean={arms['control']['clean_error']:.3f} "
            f"mCE*={arms['control']['mean_corruption_error']:.3f} ({elapsed:.0f}s)"
        )

    wins = sum(
        1 for r in runs if r["ipmix"]["mean_corruption_error"] < r["control"]["mean_corruption_error"]
    )
    clean_ok = all(
        r["ipmix"]["clean_error"] <= r["control"]["clean_error"] + 0.02 for r in runs
    )
    result = {
        "dataset": args.dataset,
        "subset": args.subset,
        "epochs": args.epochs,
        "seeds": args.seeds,
        "runs": runs,
        "corruption_wins": wins,
        "directional_pass": bool(wins * 3 >= len(runs) * 2),  # >= 2 of 3
        "clean_within_2_points": bool(clean_ok),
    }
    Path(args.out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(json.dumps({k: result[k] for k in ("corruption_wins", "directional_pass", "clean_within_2_points")}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
