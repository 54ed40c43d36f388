import json
import subprocess
import sys
from pathlib import Path

import pytest

SCRIPT = Path(__file__).parent.parent / "scripts" / "train_toy.py"

RESULT_KEYS = {
    "dataset",
    "subset",
    "epochs",
    "seeds",
    "runs",
    "corruption_wins",
    "directional_pass",
    "clean_within_2_points",
}


def cifar10_available(root: str) -> bool:
    try:
        import torchvision

        torchvision.datasets.CIFAR10(root, train=True, download=True)
        return True
    except Exception:
        return False


def run_script(args):
    return subprocess.run(
        [sys.executable, str(SCRIPT), *args], capture_output=True, text=True, timeout=1800
    )


def test_toy_harness_synthetic_quick(tmp_path):
    # Harness sanity on the offline synthetic set: runs end to end and emits
    # the full result schema. Directionality is not asserted at smoke scale.
    out = tmp_path / "results.json"
    proc = run_script(["--dataset", "synthetic", "--quick", "--out", str(out)])
    assert proc.returncode == 0, proc.stderr
    result = json.loads(out.read_text())
    assert set(result) == RESULT_KEYS
    assert len(result["runs"]) == 1
    run = result["runs"][0]
    for arm in ("ipmix", "control"):
        assert 0.0 <= run[arm]["clean_error"] <= 1.0
        assert set(run[arm]["corruption_errors"]) == {
            "gaussian_noise",
            "brightness_shift",
            "pixelate",
            "contrast",
        }


@pytest.mark.slow
def test_directional_robustness_cifar10(tmp_path):
    # [SECONDARY acceptance] 5k CIFAR-10 subset, 10 epochs, 3 seeds: the
    # augmented model beats the control's mean desk-suite corruption error in
    # >= 2 of 3 seeds, with clean error within +2 points.
    data_root = tmp_path / "data"
    if not cifar10_available(str(data_root)):
        pytest.skip("CIFAR-10 unavailable (no dataset network access in this environment)")
    out = tmp_path / "results.json"
    proc = run_script(
        ["--dataset", "cifar10", "--data", str(data_root), "--out", str(out)]
    )
    assert proc.returncode == 0, proc.stderr
    result = json.loads(out.read_text())
    assert result["directional_pass"], result
    assert result["clean_within_2_points"], result
