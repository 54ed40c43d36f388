"""Offline robustness and calibration metric calculators.

These consume prediction logs written by any external model run. A log is a
flat list of records (sample_id, pred, true, confidence) with optional
grouping keys: (corruption, severity) for corruption error, and
(perturbation, sequence, frame) for flip-rate consistency.

Metrics:
  clean_error      fraction of records with pred != true
  mce              mean over corruptions of
                   [sum_s E(c, s) / sum_s E_base(c, s)] * 100
  rms_calibration  sqrt of the bin-mass-weighted mean squared gap between
                   per-bin mean confidence and empirical accuracy, with
                   equal-mass binning into ceil(sqrt(N)) bins
  mfr              mean over perturbations of
                   (flip rate / baseline flip rate) * 100, where a flip is a
                   prediction change between consecutive frames
  aupr             area under the precision-recall curve by descending
                   score, ties grouped, area = sum of dRecall * precision

The anomaly score convention is the negative of the maximum softmax
probability, see anomaly_scores().
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParameterError


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    pred: str
    true: str
    confidence: float
    corruption: str | None = None
    severity: int | None = None
    perturbation: str | None = None
    sequence: str | None = None
    frame: int | None = None
    anomaly: int | None = None


class PredictionLog:
    """Validated, immutable list of prediction records."""

    def __init__(self, records):
        records = tuple(records)
        if not records:
            raise ParameterError("prediction log must be nonempty")
        for r in records:
            if not 0.0 <= r.confidence <= 1.0:
                raise ParameterError(f"confidence out of [0, 1]: {r}")
            if r.severity is not None and not 1 <= r.severity <= 5:
                raise ParameterError(f"severity out of 1..5: {r}")
        self.records = records

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


_CSV_FIELDS = {
    "sample_id": str,
    "pred": str,
    "true": str,
    "confidence": float,
    "corruption": str,
    "severity": int,
    "perturbation": str,
    "sequence": str,
    "frame": int,
    "anomaly": int,
}


def load_log_csv(path) -> PredictionLog:
    """Load a prediction log from CSV with header sample_id,pred,true,confidence
    plus any of the optional grouping columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = ("sample_id", "pred", "true", "confidence")
        missing = [c for c in required if c not in header]
        if missing:
            raise ConfigurationError(f"log {path} missing required columns {missing}")
        unknown = [c for c in header if c not in _CSV_FIELDS]
        if unknown:
            raise ConfigurationError(f"log {path} has unknown columns {unknown}")
        records = []
        for row in reader:
            kwargs = {}
            for col, conv in _CSV_FIELDS.items():
                v = row.get(col)
                if v is None or v == "":
                    continue
                kwargs[col] = conv(v)
            records.append(PredictionRecord(**kwargs))
    return PredictionLog(records)


def load_baseline_json(path) -> dict:
    """Baseline tables: {"corruption_errors": {corr: {sev: rate}},
    "flip_rates": {perturbation: rate}} -- either key may be absent."""
    data = json.loads(Path(path).read_text())
    out = {}
    if "corruption_errors" in data:
        out["corruption_errors"] = {
            (corr, int(sev)): float(rate)
            for corr, sevs in data["corruption_errors"].items()
            for sev, rate in sevs.items()
        }
    if "flip_rates" in data:
        out["flip_rates"] = {p: float(r) for p, r in data["flip_rates"].items()}
    return out


def clean_error(log: PredictionLog) -> float:
    """Fraction of records predicted incorrectly."""
    wrong = sum(1 for r in log if r.pred != r.true)
    return wrong / len(log)


def mce(log: PredictionLog, baseline: dict) -> float:
    """Mean corruption error (percent), normalized per corruption by the
    baseline's severity-summed error."""
    groups: dict[tuple[str, int], list[PredictionRecord]] = {}
    for r in log:
        if r.corruption is None or r.severity is None:
            raise ParameterError(f"record lacks corruption/severity keys: {r}")
        groups.setdefault((r.corruption, r.severity), []).append(r)
    corruptions = sorted({c for c, _ in groups})
    ratios = []
    for corr in corruptions:
        err_sum = 0.0
        base_sum = 0.0
        for (c, sev), recs in sorted(groups.items()):
            if c != corr:
                continue
            if (c, sev) not in baseline:
                raise ConfigurationError(f"baseline missing entry for {(c, sev)}")
            err_sum += sum(1 for r in recs if r.pred != r.true) / len(recs)
            base_sum += baseline[(c, sev)]
        if base_sum == 0.0:
            raise ConfigurationError(f"baseline error sum for {corr!r} is zero")
        ratios.append(err_sum / base_sum)
    return 100.0 * sum(ratios) / len(ratios)


def rms_calibration(log: PredictionLog) -> float:
    """RMS gap between confidence and accuracy over equal-mass bins.

    Records are ordered by (confidence, correctness) and split into
    ceil(sqrt(N)) near-equal bins; the squared gap between each bin's mean
    confidence and its accuracy is weighted by bin mass.
    """
    rows = sorted(((r.confidence, 1 if r.pred == r.true else 0) for r in log))
    n = len(rows)
    n_bins = math.ceil(math.sqrt(n))
    conf = np.array([c for c, _ in rows])
    correct = np.array([k for _, k in rows], dtype=np.float64)
    total = 0.0
    for chunk_conf, chunk_cor in zip(np.array_split(conf, n_bins), np.array_split(correct, n_bins)):
        if len(chunk_conf) == 0:
            continue
        gap = chunk_conf.mean() - chunk_cor.mean()
        total += (len(chunk_conf) / n) * gap * gap
    return math.sqrt(total)


def mfr(log: PredictionLog, baseline_flip_rates: dict) -> float:
    """Mean flip rate (percent): per perturbation, prediction changes between
    consecutive frames over consecutive-frame pairs, normalized by the
    baseline's flip rate."""
    seqs: dict[tuple[str, str], list[PredictionRecord]] = {}
    for r in log:
        if r.perturbation is None or r.sequence is None or r.frame is None:
            raise ParameterError(f"record lacks perturbation/sequence/frame keys: {r}")
        seqs.setdefault((r.perturbation, r.sequence), []).append(r)
    flips: dict[str, int] = {}
    pairs: dict[str, int] = {}
    for (pert, _), recs in sorted(seqs.items()):
        recs = sorted(recs, key=lambda r: r.frame)
        if len(recs) < 2:
            raise ParameterError(f"sequence {(pert, recs[0].sequence)} has fewer than 2 frames")
        frames = [r.frame for r in recs]
        if any(b - a != 1 for a, b in zip(frames, frames[1:])):
            raise ParameterError(f"frames not contiguous in sequence {(pert, recs[0].sequence)}")
        flips[pert] = flips.get(pert, 0) + sum(
            1 for a, b in zip(recs, recs[1:]) if a.pred != b.pred
        )
        pairs[pert] = pairs.get(pert, 0) + len(recs) - 1
    ratios = []
    for pert in sorted(flips):
        if pert not in baseline_flip_rates:
            raise ConfigurationError(f"baseline missing flip rate for perturbation {pert!r}")
        base = baseline_flip_rates[pert]
        if base == 0.0:
            raise ConfigurationError(f"baseline flip rate for {pert!r} is zero")
        ratios.append((flips[pert] / pairs[pert]) / base)
    return 100.0 * sum(ratios) / len(ratios)


def aupr(scores, is_anomaly) -> float:
    """Area under the precision-recall curve, positives = anomalies.

    Thresholds sweep the distinct scores in descending order (ties grouped);
    the area is the step sum of dRecall * precision.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(is_anomaly, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ParameterError("scores and is_anomaly must be 1-D and aligned")
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise ParameterError("aupr needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    area = 0.0
    prev_recall = 0.0
    tp = 0
    fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            tp += int(y[j])
            fp += int(1 - y[j])
            j += 1
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
        i = j
    return float(area)


def anomaly_scores(max_softmax_probs) -> np.ndarray:
    """Anomaly score = negative of the maximum softmax probability."""
    return -np.asarray(max_softmax_probs, dtype=np.float64)
