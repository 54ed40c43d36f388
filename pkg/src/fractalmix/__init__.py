"""Three-level image mixing augmentation with fractal mixing sets."""

from .errors import BatchItemError, ConfigurationError, DecodeError, ParameterError
from .fractals import (
    AffineMap,
    EscapeTimeSpec,
    IfsSpec,
    MixingSet,
    Trap,
    build_mixing_set,
    escape_iterations,
    render_escape_time,
    render_ifs,
)
from .image import blend_convex, decode, decode_file, encode_png, ensure_image
from .metrics import (
    PredictionLog,
    PredictionRecord,
    anomaly_scores,
    aupr,
    clean_error,
    mce,
    mfr,
    rms_calibration,
)
from .mixer import MixOperator, MixRegion, mix_in_region, sample_scar_region, sample_square_region
from .ops import OP_BANK, ImageOp, OpDraw, apply_op, sample_op
from .pipeline import (
    AugmentConfig,
    AugmentTrace,
    augment,
    augment_batch,
    ipmix_augment,
    linear_mix_augment,
    mixed_input_augment,
    replay,
)
from .rng import SeededRng, choose_uniform, sample_beta, sample_dirichlet

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "AugmentConfig",
    "AugmentTrace",
    "BatchItemError",
    "ConfigurationError",
    "DecodeError",
    "EscapeTimeSpec",
    "IfsSpec",
    "ImageOp",
    "MixOperator",
    "MixRegion",
    "MixingSet",
    "OP_BANK",
    "OpDraw",
    "ParameterError",
    "PredictionLog",
    "PredictionRecord",
    "SeededRng",
    "Trap",
    "anomaly_scores",
    "apply_op",
    "augment",
    "augment_batch",
    "aupr",
    "blend_convex",
    "build_mixing_set",
    "choose_uniform",
    "clean_error",
    "decode",
    "decode_file",
    "encode_png",
    "ensure_image",
    "escape_iterations",
    "ipmix_augment",
    "linear_mix_augment",
    "mce",
    "mfr",
    "mix_in_region",
    "mixed_input_augment",
    "render_escape_time",
    "render_ifs",
    "replay",
    "rms_calibration",
    "sample_beta",
    "sample_dirichlet",
    "sample_op",
    "sample_scar_region",
    "sample_square_region",
]
