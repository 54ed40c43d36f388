"""Flat key-value config files and their merge with CLI flags.

Format: one ``key = value`` pair per line, ``#`` starts a comment. Lists are
comma-separated. Booleans are "true"/"false". CLI flags override file values.

Recognized keys mirror the augment flags: k, t, alpha, framework,
patch_sizes, scar_enabled, mix_ops, op_bank, fractal_prob, methods, seed,
workers.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigurationError
from .pipeline import AugmentConfig

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

_SCHEMA = {
    "k": int,
    "t": int,
    "alpha": float,
    "framework": str,
    "patch_sizes": "int_list",
    "scar_enabled": "bool",
    "mix_ops": "str_list",
    "op_bank": "str_list",
    "fractal_prob": float,
    "methods": "str_list",
    "seed": int,
    "workers": int,
}

_AUGMENT_KEYS = (
    "k",
    "t",
    "alpha",
    "framework",
    "patch_sizes",
    "scar_enabled",
    "mix_ops",
    "op_bank",
    "fractal_prob",
    "methods",
)


def _convert(key: str, raw: str):
    kind = _SCHEMA[key]
    try:
        if kind == "bool":
            return _BOOL[raw.strip().lower()]
        if kind == "int_list":
            return tuple(int(v.strip()) for v in raw.split(",") if v.strip())
        if kind == "str_list":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        return kind(raw.strip())
    except (ValueError, KeyError) as exc:
        raise ConfigurationError(f"bad value for config key {key!r}: {raw!r}") from exc


def load_config_file(path) -> dict:
    """Parse a key-value config file into typed values."""
    values: dict = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigurationError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _convert(key, raw)
    return values


def merge_config(file_values: dict | None, overrides: dict) -> dict:
    """File values first, then non-None CLI overrides."""
    merged = dict(file_values or {})
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return merged


def build_augment_config(values: dict) -> AugmentConfig:
    kwargs = {k: v for k, v in values.items() if k in _AUGMENT_KEYS}
    return AugmentConfig(**kwargs)
