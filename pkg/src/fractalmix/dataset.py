"""Dataset enumeration and manifest helpers."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

DEFAULT_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class DatasetSource:
    root: str | Path
    recursive: bool = True
    extensions: tuple[str, ...] = DEFAULT_EXTENSIONS


def enumerate_images(src: DatasetSource) -> list[Path]:
    """Stable, lexicographically sorted listing of matching files."""
    root = Path(src.root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    pattern = "**/*" if src.recursive else "*"
    exts = {e.lower() for e in src.extensions}
    paths = [p for p in root.glob(pattern) if p.is_file() and p.suffix.lower() in exts]
    return sorted(paths, key=lambda p: p.as_posix())


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_manifest(path, header: dict, rows: list[dict]) -> None:
    """JSON-lines manifest: one header object, then one object per item.

    Keys are sorted so equal content is byte-identical.
    """
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_manifest(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    return header, [json.loads(line) for line in lines[1:]]
