"""Independent brute-force oracles for the metric calculators.

These deliberately re-derive each metric from first principles with plain
loops over records, so they share no code path with the package.
"""

import math

from fractalmix import PredictionRecord


def random_log(gen, with_groups=False, with_frames=False):
    """Randomized small prediction logs (<= 50 records) for oracle sweeps."""
    if with_frames:
        records = []
        for pert in ("tilt", "zoom"):
            for s in range(int(gen.integers(1, 3))):
                length = int(gen.integers(2, 8))
                for f in range(length):
                    records.append(
                        PredictionRecord(
                            sample_id=f"{pert}{s}f{f}",
                            pred=str(gen.integers(3)),
                            true="0",
                            confidence=float(gen.random()),
                            perturbation=pert,
                            sequence=f"s{s}",
                            frame=f,
                        )
                    )
        return records
    corruptions = ["noise", "fog", "blur"]
    records = []
    for i in range(int(gen.integers(4, 51))):
        kw = {}
        if with_groups:
            kw["corruption"] = corruptions[int(gen.integers(len(corruptions)))]
            kw["severity"] = int(gen.integers(1, 6))
        records.append(
            PredictionRecord(
                sample_id=str(i),
                pred=str(gen.integers(3)),
                true=str(gen.integers(3)),
                confidence=float(gen.random()),
                **kw,
            )
        )
    return records


def oracle_clean_error(records):
    wrong = 0
    for r in records:
        if r.pred != r.true:
            wrong += 1
    return wrong / len(records)


def oracle_mce(records, baseline):
    by_group = {}
    for r in records:
        by_group.setdefault((r.corruption, r.severity), []).append(r)
    corruptions = sorted({c for c, _ in by_group})
    total = 0.0
    for corr in corruptions:
        err = 0.0
        base = 0.0
        for (c, sev), recs in by_group.items():
            if c != corr:
                continue
            err += sum(1 for r in recs if r.pred != r.true) / len(recs)
            base += baseline[(c, sev)]
        total += err / base
    return 100.0 * total / len(corruptions)


def oracle_rms_calibration(records):
    rows = sorted((r.confidence, 1 if r.pred == r.true else 0) for r in records)
    n = len(rows)
    n_bins = math.ceil(math.sqrt(n))
    # Mimic numpy.array_split sizing: the first (n % n_bins) bins get one extra.
    base = n // n_bins
    extra = n % n_bins
    sizes = [base + 1] * extra + [base] * (n_bins - extra)
    total = 0.0
    start = 0
    for size in sizes:
        if size == 0:
            continue
        chunk = rows[start : start + size]
        start += size
        mean_conf = sum(c for c, _ in chunk) / size
        acc = sum(k for _, k in chunk) / size
        total += (size / n) * (mean_conf - acc) ** 2
    return math.sqrt(total)


def oracle_mfr(records, baseline):
    seqs = {}
    for r in records:
        seqs.setdefault((r.perturbation, r.sequence), []).append(r)
    flips = {}
    pairs = {}
    for (pert, _), recs in seqs.items():
        recs = sorted(recs, key=lambda r: r.frame)
        for a, b in zip(recs, recs[1:]):
            flips[pert] = flips.get(pert, 0) + (1 if a.pred != b.pred else 0)
            pairs[pert] = pairs.get(pert, 0) + 1
    perts = sorted(flips)
    total = 0.0
    for pert in perts:
        total += (flips[pert] / pairs[pert]) / baseline[pert]
    return 100.0 * total / len(perts)


def oracle_aupr(scores, labels):
    """Threshold enumeration: one PR point per distinct score, area by
    rectangle sum between consecutive recall levels."""
    n_pos = sum(labels)
    thresholds = sorted(set(scores), reverse=True)
    points = []
    for th in thresholds:
        tp = sum(1 for s, y in zip(scores, labels) if s >= th and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= th and y == 0)
        points.append((tp / n_pos, tp / (tp + fp)))
    area = 0.0
    prev_recall = 0.0
    for recall, precision in points:
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area
