"""Unified command-line interface.

Subcommands: fractal-gen, augment, preview, metrics, bench.
Exit codes: 0 ok, 1 usage/parameter, 2 I/O, 3 configuration.
FRACTALMIX_WORKERS sets the default worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .bench import run_bench
from .config import build_augment_config, load_config_file, merge_config
from .dataset import DatasetSource, enumerate_images, sha256_bytes, write_manifest
from .errors import ConfigurationError, DecodeError, ParameterError
from .fractals import (
    MixingSet,
    build_mixing_set,
    random_escape_spec,
    random_ifs_spec,
    render_escape_time,
    render_ifs,
    spec_hash,
)
from .image import decode_file, encode_png
from .ops import OPS_BY_NAME, OpDraw
from .ops import apply_op as apply_image_op
from .pipeline import MixingSetCache, augment
from .rng import SeededRng


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FRACTALMIX_WORKERS", "1")))
    except ValueError:
        return 1


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
        if h < 1 or w < 1:
            raise ValueError
        return h, w
    except ValueError:
        raise ParameterError(f"size must be HxW with positive integers, got {text!r}") from None


def _add_augment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key-value config file; flags override it")
    p.add_argument("--framework", choices=("chain_mixed", "linear_mix", "mixed_input"))
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--patch-sizes", dest="patch_sizes", help="comma list, e.g. 4,8,16,32")
    p.add_argument("--scar-enabled", dest="scar_enabled", choices=("true", "false"))
    p.add_argument("--mix-ops", dest="mix_ops", help="comma subset of the mix operator kinds")
    p.add_argument("--op-bank", dest="op_bank", help="comma subset of the image op names")
    p.add_argument("--fractal-prob", dest="fractal_prob", type=float)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)


def _augment_values(args) -> dict:
    overrides = {
        "framework": args.framework,
        "k": args.k,
        "t": args.t,
        "alpha": args.alpha,
        "fractal_prob": args.fractal_prob,
        "seed": args.seed,
        "workers": args.workers,
    }
    if args.patch_sizes is not None:
        overrides["patch_sizes"] = tuple(int(v) for v in args.patch_sizes.split(","))
    if args.scar_enabled is not None:
        overrides["scar_enabled"] = args.scar_enabled == "true"
    if args.mix_ops is not None:
        overrides["mix_ops"] = tuple(v.strip() for v in args.mix_ops.split(","))
    if args.op_bank is not None:
        overrides["op_bank"] = tuple(v.strip() for v in args.op_bank.split(","))
    file_values = load_config_file(args.config) if args.config else {}
    return merge_config(file_values, overrides)


def _load_mixing_set(fractals_dir) -> MixingSet:
    if fractals_dir is None:
        raise ConfigurationError("no mixing set: pass --fractals DIR (see fractal-gen)")
    paths = enumerate_images(DatasetSource(root=fractals_dir))
    if not paths:
        raise ConfigurationError(f"mixing-set directory {fractals_dir} has no images")
    images = tuple(decode_file(p) for p in paths)
    return MixingSet(images, tuple("external" for _ in images))


def cmd_fractal_gen(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    size = _parse_size(args.size)
    rng = SeededRng(args.seed)
    rows = []
    index = 0

    def emit(img, tag, shash):
        nonlocal index
        name = f"{tag}_{index:05d}.png"
        data = encode_png(img)
        (out_dir / name).write_bytes(data)
        rows.append({"path": name, "source": tag, "spec_hash": shash, "sha256": sha256_bytes(data)})
        index += 1

    for i in range(args.n_escape):
        crng = rng.child(i)
        spec = random_escape_spec(size, crng)
        emit(render_escape_time(spec, crng), "escape_time", spec_hash(spec))
    for i in range(args.n_ifs):
        crng = rng.child(args.n_escape + i)
        spec = random_ifs_spec(size, crng)
        emit(render_ifs(spec, crng), "ifs", spec_hash(spec))
    if args.external:
        ext = build_mixing_set(0, 0, external_dir=args.external, size=size, rng=rng.child(10**6))
        for img in ext.images:
            emit(img, "external", "")
    if index == 0:
        raise ConfigurationError("nothing to generate: all counts zero and no --external")
    write_manifest(
        out_dir / "manifest.jsonl",
        {"seed": args.seed, "size": list(size), "count": index},
        rows,
    )
    print(f"wrote {index} images to {out_dir}")
    return 0


def cmd_augment(args) -> int:
    values = _augment_values(args)
    cfg = build_augment_config(values)
    seed = int(values.get("seed", 0))
    workers = int(values.get("workers") or _default_workers())
    in_dir = Path(getattr(args, "in"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = enumerate_images(DatasetSource(root=in_dir))
    if not paths:
        raise ConfigurationError(f"input directory {in_dir} has no images")
    sets = MixingSetCache(_load_mixing_set(args.fractals))
    root = SeededRng(seed)

    def run(i: int):
        img = decode_file(paths[i])
        out, trace = augment(img, sets.for_dims(*img.shape[:2]), cfg, root.child(i))
        data = encode_png(out)
        rel = paths[i].relative_to(in_dir)
        out_rel = rel.with_name(rel.stem + "_aug.png")
        target = out_dir / out_rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
        return {
            "input": rel.as_posix(),
            "output": out_rel.as_posix(),
            "seed_index": i,
            "trace_hash": trace.hash(),
            "sha256": sha256_bytes(data),
        }

    if workers <= 1:
        rows = [run(i) for i in range(len(paths))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, range(len(paths))))
    write_manifest(
        out_dir / "manifest.jsonl",
        {"config": cfg.to_dict(), "seed": seed, "count": len(rows)},
        rows,
    )
    print(f"augmented {len(rows)} images into {out_dir}")
    return 0


def _tile_grid(images, rows: int, cols: int) -> np.ndarray:
    h, w = images[0].shape[:2]
    grid = np.zeros((rows * h, cols * w, 3), dtype=np.float64)
    for idx, img in enumerate(images[: rows * cols]):
        r, c = divmod(idx, cols)
        grid[r * h : (r + 1) * h, c * w : (c + 1) * w] = img
    return grid


def cmd_preview(args) -> int:
    img = decode_file(getattr(args, "in"))
    if args.op is not None:
        op = OPS_BY_NAME.get(args.op)
        if op is None:
            raise ParameterError(f"unknown op {args.op!r}; known: {sorted(OPS_BY_NAME)}")
        strength = args.strength if args.strength is not None else op.strength_range[1]
        out = apply_image_op(img, OpDraw(op, strength))
        Path(args.out).write_bytes(encode_png(out))
        print(f"wrote {args.out}")
        return 0
    if args.grid is not None:
        try:
            rows, cols = (int(v) for v in args.grid.lower().split("x"))
        except ValueError:
            raise ParameterError(f"--grid must be RxC, got {args.grid!r}") from None
        values = _augment_values(args)
        cfg = build_augment_config(values)
        seed = int(values.get("seed", 0))
        prepared = MixingSetCache(_load_mixing_set(args.fractals)).for_dims(*img.shape[:2])
        root = SeededRng(seed)
        samples = [augment(img, prepared, cfg, root.child(i))[0] for i in range(rows * cols)]
        Path(args.out).write_bytes(encode_png(_tile_grid(samples, rows, cols)))
        print(f"wrote {args.out}")
        return 0
    raise ParameterError("preview needs --op NAME or --grid RxC")


def cmd_metrics(args) -> int:
    log = metrics_mod.load_log_csv(args.log)
    baseline = metrics_mod.load_baseline_json(args.baseline) if args.baseline else {}
    breakdown: dict = {}
    if args.kind == "clean":
        value = metrics_mod.clean_error(log)
    elif args.kind == "mce":
        table = baseline.get("corruption_errors")
        if table is None:
            raise ConfigurationError("mce needs --baseline with a corruption_errors table")
        value = metrics_mod.mce(log, table)
        per_corr: dict[str, list] = {}
        for r in log:
            per_corr.setdefault(r.corruption, []).append(r)
        breakdown = {
            corr: sum(1 for r in recs if r.pred != r.true) / len(recs)
            for corr, recs in sorted(per_corr.items())
        }
    elif args.kind == "rms":
        value = metrics_mod.rms_calibration(log)
    elif args.kind == "mfr":
        table = baseline.get("flip_rates")
        if table is None:
            raise ConfigurationError("mfr needs --baseline with a flip_rates table")
        value = metrics_mod.mfr(log, table)
    elif args.kind == "aupr":
        flags = [r.anomaly for r in log]
        if any(f is None for f in flags):
            raise ConfigurationError("aupr needs an 'anomaly' column (0/1) in the log")
        scores = metrics_mod.anomaly_scores([r.confidence for r in log])
        value = metrics_mod.aupr(scores, flags)
    else:  # pragma: no cover - argparse restricts choices
        raise ParameterError(f"unknown metric kind {args.kind!r}")
    result = {"metric": args.kind, "value": value, "records": len(log)}
    if breakdown:
        result["breakdown"] = breakdown
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    values = _augment_values(args)
    cfg = build_augment_config(values)
    seed = int(values.get("seed", 0))
    workers = int(values.get("workers") or _default_workers())
    mixing_set = _load_mixing_set(args.fractals)
    report = run_bench(
        DatasetSource(root=getattr(args, "in")),
        cfg,
        mixing_set,
        workers=workers,
        duration=args.duration,
        run_seed=seed,
    )
    payload = json.dumps(report.to_dict(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    print(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fractalmix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fractal-gen", help="generate a synthetic mixing set")
    p.add_argument("--n-escape", type=int, default=100)
    p.add_argument("--n-ifs", type=int, default=100)
    p.add_argument("--size", default="64x64", help="HxW, e.g. 224x224")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--external", help="directory of extra images to ingest")
    p.set_defaults(fn=cmd_fractal_gen)

    p = sub.add_parser("augment", help="augment a directory of images")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractals", help="mixing-set directory (from fractal-gen)")
    _add_augment_flags(p)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("preview", help="render one op or an augmentation grid")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--op", help="single image-op preview")
    p.add_argument("--strength", type=float)
    p.add_argument("--grid", help="RxC grid of augmented samples")
    p.add_argument("--fractals")
    _add_augment_flags(p)
    p.set_defaults(fn=cmd_preview)

    p = sub.add_parser("metrics", help="compute a metric from a prediction log")
    p.add_argument("--kind", required=True, choices=("clean", "mce", "rms", "mfr", "aupr"))
    p.add_argument("--log", required=True)
    p.add_argument("--baseline")
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("bench", help="throughput benchmark vs identity baseline")
    p.add_argument("--in", required=True)
    p.add_argument("--fractals")
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--out")
    _add_augment_flags(p)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ParameterError as exc:
        print(f"fractalmix: {exc}", file=sys.stderr)
        return 1
    except (DecodeError, OSError) as exc:
        print(f"fractalmix: {exc}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"fractalmix: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
