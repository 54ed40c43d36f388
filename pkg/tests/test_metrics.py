import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalmix import (
    ConfigurationError,
    ParameterError,
    PredictionLog,
    PredictionRecord,
    anomaly_scores,
    aupr,
    clean_error,
    mce,
    mfr,
    rms_calibration,
)
from oracles import (
    oracle_aupr,
    oracle_clean_error,
    oracle_mce,
    oracle_mfr,
    oracle_rms_calibration,
    random_log,
)


def rec(pred, true, conf, **kw):
    return PredictionRecord(sample_id=kw.pop("sid", "s"), pred=pred, true=true, confidence=conf, **kw)


def test_clean_error_all_correct():
    log = PredictionLog([rec("a", "a", 0.9), rec("b", "b", 0.8)])
    assert clean_error(log) == 0.0


def test_clean_error_all_wrong():
    log = PredictionLog([rec("a", "b", 0.9), rec("b", "c", 0.8)])
    assert clean_error(log) == 1.0


def test_clean_error_hand_count():
    log = PredictionLog([rec("a", "a", 0.9), rec("b", "b", 0.9), rec("c", "c", 0.9), rec("d", "x", 0.9)])
    assert clean_error(log) == 0.25


def test_empty_log_rejected():
    with pytest.raises(ParameterError):
        PredictionLog([])


def test_mce_normalization_identity():
    # Log errors equal to the baseline everywhere: mCE = 100.
    records = []
    for corr in ("noise", "fog"):
        for sev in (1, 2):
            records += [
                rec("a", "a", 0.9, corruption=corr, severity=sev),
                rec("a", "b", 0.9, corruption=corr, severity=sev),
            ]
    baseline = {(c, s): 0.5 for c in ("noise", "fog") for s in (1, 2)}
    assert mce(PredictionLog(records), baseline) == pytest.approx(100.0)


def test_mce_all_correct_is_zero():
    records = [rec("a", "a", 0.9, corruption="noise", severity=1)]
    assert mce(PredictionLog(records), {("noise", 1): 0.5}) == 0.0


def test_mce_hand_case():
    # Two corruptions, one severity: errors (0.2, 0.4), baselines (0.4, 0.8).
    records = []
    for corr, n_wrong in (("c1", 2), ("c2", 4)):
        for i in range(10):
            records.append(
                rec("w" if i < n_wrong else "r", "r", 0.9, corruption=corr, severity=1, sid=f"{corr}{i}")
            )
    value = mce(PredictionLog(records), {("c1", 1): 0.4, ("c2", 1): 0.8})
    assert value == pytest.approx(50.0)


def test_mce_missing_baseline_rejected():
    records = [rec("a", "b", 0.9, corruption="noise", severity=1)]
    with pytest.raises(ConfigurationError):
        mce(PredictionLog(records), {})


def test_mce_zero_baseline_rejected():
    records = [rec("a", "b", 0.9, corruption="noise", severity=1)]
    with pytest.raises(ConfigurationError):
        mce(PredictionLog(records), {("noise", 1): 0.0})


def test_mce_scale_covariance():
    # Multiplying every per-group error by kappa multiplies mCE by kappa.
    gen = np.random.default_rng(0)
    base = {}
    low, high = [], []
    for corr in ("a", "b", "c"):
        for sev in (1, 2, 3):
            base[(corr, sev)] = float(gen.uniform(0.2, 0.9))
            for i in range(20):
                wrong_low = i < 4  # error 0.2
                wrong_high = i < 8  # error 0.4 = 2x
                low.append(rec("w" if wrong_low else "r", "r", 0.5, corruption=corr, severity=sev))
                high.append(rec("w" if wrong_high else "r", "r", 0.5, corruption=corr, severity=sev))
    assert mce(PredictionLog(high), base) == pytest.approx(2.0 * mce(PredictionLog(low), base))


def test_rms_all_confident_correct():
    log = PredictionLog([rec("a", "a", 1.0) for _ in range(8)])
    assert rms_calibration(log) == 0.0


def test_rms_all_confident_wrong():
    log = PredictionLog([rec("a", "b", 1.0) for _ in range(8)])
    assert rms_calibration(log) == pytest.approx(1.0)


def test_rms_hand_binning_case():
    # confidences (0.9, 0.9, 0.1, 0.1), correctness (1, 1, 1, 0), two bins:
    # sqrt(0.5*(0.9-1)^2 + 0.5*(0.1-0.5)^2) = sqrt(0.085)
    log = PredictionLog(
        [rec("a", "a", 0.9), rec("a", "a", 0.9), rec("a", "a", 0.1), rec("a", "b", 0.1)]
    )
    assert rms_calibration(log) == pytest.approx(math.sqrt(0.085))


def test_rms_permutation_invariance_and_range():
    gen = np.random.default_rng(1)
    records = [
        rec("a", "a" if gen.random() < 0.6 else "b", float(gen.random()), sid=str(i))
        for i in range(50)
    ]
    value = rms_calibration(PredictionLog(records))
    assert 0.0 <= value <= 1.0
    for _ in range(5):
        perm = list(gen.permutation(len(records)))
        shuffled = PredictionLog([records[i] for i in perm])
        assert rms_calibration(shuffled) == pytest.approx(value, abs=1e-12)


def test_mfr_constant_predictions():
    records = [
        rec("a", "a", 0.9, perturbation="tilt", sequence="s0", frame=f, sid=f"f{f}")
        for f in range(5)
    ]
    assert mfr(PredictionLog(records), {"tilt": 1.0}) == 0.0


def test_mfr_alternating_predictions():
    records = [
        rec("a" if f % 2 == 0 else "b", "a", 0.9, perturbation="tilt", sequence="s0", frame=f)
        for f in range(6)
    ]
    assert mfr(PredictionLog(records), {"tilt": 1.0}) == pytest.approx(100.0)


def test_mfr_hand_count():
    # 5 frames, 2 flips, baseline 0.5: (2/4)/0.5 * 100 = 100.
    preds = ["a", "a", "b", "b", "a"]
    records = [
        rec(p, "a", 0.9, perturbation="zoom", sequence="s0", frame=f)
        for f, p in enumerate(preds)
    ]
    assert mfr(PredictionLog(records), {"zoom": 0.5}) == pytest.approx(100.0)


def test_mfr_short_sequence_rejected():
    records = [rec("a", "a", 0.9, perturbation="zoom", sequence="s0", frame=0)]
    with pytest.raises(ParameterError):
        mfr(PredictionLog(records), {"zoom": 0.5})


def test_mfr_gap_in_frames_rejected():
    records = [
        rec("a", "a", 0.9, perturbation="zoom", sequence="s0", frame=0),
        rec("a", "a", 0.9, perturbation="zoom", sequence="s0", frame=2),
    ]
    with pytest.raises(ParameterError):
        mfr(PredictionLog(records), {"zoom": 0.5})


def test_mfr_missing_baseline_rejected():
    records = [
        rec("a", "a", 0.9, perturbation="zoom", sequence="s0", frame=f) for f in range(3)
    ]
    with pytest.raises(ConfigurationError):
        mfr(PredictionLog(records), {})


def test_aupr_perfect_separation():
    assert aupr([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == pytest.approx(1.0)


def test_aupr_hand_case():
    assert aupr([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx(0.5 + 0.5 * (2 / 3))


def test_aupr_internal_ties_still_perfect():
    # All positives tied above all negatives (with internal ties) -> 1.0,
    # cross-checked by the brute-force threshold oracle.
    scores = [0.9, 0.9, 0.9, 0.4, 0.4]
    labels = [1, 1, 1, 0, 0]
    assert aupr(scores, labels) == pytest.approx(1.0)
    assert oracle_aupr(scores, labels) == pytest.approx(1.0)


def test_aupr_single_class_rejected():
    with pytest.raises(ParameterError):
        aupr([0.5, 0.4], [1, 1])
    with pytest.raises(ParameterError):
        aupr([0.5, 0.4], [0, 0])


@settings(max_examples=100, deadline=None)
@given(
    data=st.lists(
        st.tuples(st.floats(0, 1, allow_nan=False, width=32), st.booleans()),
        min_size=2,
        max_size=40,
    ).filter(lambda rows: 0 < sum(1 for _, y in rows if y) < len(rows)),
    slope=st.floats(0.1, 5.0, allow_nan=False),
    offset=st.floats(-2.0, 2.0, allow_nan=False),
)
def test_aupr_monotone_transform_invariance(data, slope, offset):
    # Scores are quantized to 1e-3 so the monotone map cannot merge distinct
    # values at float resolution (which would legitimately change the curve).
    scores = [round(float(s), 3) for s, _ in data]
    labels = [int(y) for _, y in data]
    base = aupr(scores, labels)
    # exp is strictly monotone; affine with positive slope preserves order
    transformed = [math.exp(slope * s) + offset for s in scores]
    assert aupr(transformed, labels) == pytest.approx(base, abs=1e-12)


def test_anomaly_scores_negate_confidence():
    np.testing.assert_array_equal(anomaly_scores([0.2, 0.9]), [-0.2, -0.9])


def test_calculators_match_bruteforce_oracles():
    gen = np.random.default_rng(42)
    for _ in range(200):
        plain = random_log(gen)
        log = PredictionLog(plain)
        assert clean_error(log) == pytest.approx(oracle_clean_error(plain), abs=1e-12)
        assert rms_calibration(log) == pytest.approx(oracle_rms_calibration(plain), abs=1e-12)

        grouped = random_log(gen, with_groups=True)
        baseline = {
            (c, s): float(gen.uniform(0.1, 1.0)) for c in ("noise", "fog", "blur") for s in range(1, 6)
        }
        assert mce(PredictionLog(grouped), baseline) == pytest.approx(
            oracle_mce(grouped, baseline), abs=1e-9
        )

        framed = random_log(gen, with_frames=True)
        flip_base = {"tilt": float(gen.uniform(0.1, 1.0)), "zoom": float(gen.uniform(0.1, 1.0))}
        assert mfr(PredictionLog(framed), flip_base) == pytest.approx(
            oracle_mfr(framed, flip_base), abs=1e-9
        )

        n = int(gen.integers(4, 51))
        labels = [int(v) for v in (gen.random(n) < 0.4)]
        if 0 < sum(labels) < n:
            scores = [float(round(v, 2)) for v in gen.random(n)]  # rounding forces ties
            assert aupr(scores, labels) == pytest.approx(oracle_aupr(scores, labels), abs=1e-12)


def test_confidence_validation():
    with pytest.raises(ParameterError):
        PredictionLog([rec("a", "a", 1.5)])
    with pytest.raises(ParameterError):
        PredictionLog([rec("a", "a", 0.5, severity=9, corruption="x")])
