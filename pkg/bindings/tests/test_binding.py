import threading
import time

import numpy as np
import pytest

import fractalmix
from fractalmix.cli import main as cli_main
from fractalmix.dataset import read_manifest, sha256_bytes
from fractalmix_bindings import BindingError, augment_batch, build_mixing_set


@pytest.fixture(scope="session")
def mixing_set():
    return build_mixing_set(3, 3, size=(32, 32), seed=99)


def make_batch(n=4, h=32, w=32, dtype=np.float64, seed=0):
    batch = np.random.default_rng(seed).random((n, h, w, 3))
    if dtype == np.uint8:
        return np.floor(batch * 255.0 + 0.5).astype(np.uint8)
    return batch.astype(dtype)


def test_single_item_matches_core_call(mixing_set):
    batch = make_batch(n=1)
    out = augment_batch(batch, mixing_set, seed=7)
    core, _ = fractalmix.augment(
        batch[0], mixing_set, fractalmix.AugmentConfig(), fractalmix.SeededRng(7).child(0)
    )
    np.testing.assert_array_equal(out[0], core)


def test_output_dtype_mirrors_input(mixing_set):
    for dtype in (np.uint8, np.float32, np.float64):
        out = augment_batch(make_batch(dtype=dtype), mixing_set, seed=1)
        assert out.dtype == dtype
        assert out.shape == (4, 32, 32, 3)


def test_uint8_round_trip_within_one_level(mixing_set):
    base = make_batch(n=3, seed=5)
    u8 = np.floor(base * 255.0 + 0.5).astype(np.uint8)
    out_u8 = augment_batch(u8, mixing_set, seed=11)
    # Same augmentation on the dequantized floats, quantized at the end.
    out_float = augment_batch(u8.astype(np.float64) / 255.0, mixing_set, seed=11)
    requant = np.floor(out_float * 255.0 + 0.5).astype(np.int16)
    assert np.max(np.abs(out_u8.astype(np.int16) - requant)) <= 1


def test_batch_determinism(mixing_set):
    batch = make_batch(n=6, seed=2)
    a = augment_batch(batch, mixing_set, seed=3)
    b = augment_batch(batch, mixing_set, seed=3, workers=4)
    np.testing.assert_array_equal(a, b)


def test_invalid_batches_rejected(mixing_set):
    with pytest.raises(BindingError):
        augment_batch(np.zeros((4, 32, 32)), mixing_set)
    with pytest.raises(BindingError):
        augment_batch(np.zeros((0, 32, 32, 3)), mixing_set)
    with pytest.raises(BindingError):
        augment_batch(np.zeros((2, 8, 8, 3), dtype=np.int32), mixing_set)
    with pytest.raises(BindingError):
        augment_batch(np.full((2, 8, 8, 3), 3.5), mixing_set)
    with pytest.raises(BindingError):
        augment_batch([np.zeros((8, 8, 3))], mixing_set)


def test_binding_matches_cli_golden_manifest(tmp_path):
    # [SECONDARY acceptance] binding vs CLI hashes on 16 images.
    corpus = tmp_path / "in"
    corpus.mkdir()
    gen = np.random.default_rng(42)
    images = []
    for i in range(16):
        img = gen.random((32, 32, 3))
        images.append(img)
        (corpus / f"img_{i:02d}.png").write_bytes(fractalmix.encode_png(img))
    fractals = tmp_path / "fractals"
    assert cli_main(
        ["fractal-gen", "--n-escape", "3", "--n-ifs", "3", "--size", "32x32",
         "--out", str(fractals), "--seed", "9"]
    ) == 0
    out_dir = tmp_path / "out"
    assert cli_main(
        ["augment", "--in", str(corpus), "--out", str(out_dir),
         "--fractals", str(fractals), "--seed", "21"]
    ) == 0
    _, rows = read_manifest(out_dir / "manifest.jsonl")
    cli_hashes = [r["sha256"] for r in sorted(rows, key=lambda r: r["seed_index"])]

    # Rebuild the same mixing set the CLI loaded (decoded PNGs, sorted order).
    mixing_set = fractalmix.build_mixing_set(
        0, 0, external_dir=fractals, size=(32, 32), rng=fractalmix.SeededRng(0)
    )
    decoded = np.stack([fractalmix.decode(fractalmix.encode_png(img)) for img in images])
    out = augment_batch(decoded, mixing_set, seed=21)
    binding_hashes = [sha256_bytes(fractalmix.encode_png(out[i])) for i in range(16)]
    assert binding_hashes == cli_hashes


def _two_thread_ratio(work, repeats=5):
    """Median wall time of two concurrent workers over one worker's time."""
    work()  # warm-up
    singles = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        work()
        singles.append(time.perf_counter() - t0)
    walls = []
    for _ in range(repeats):
        threads = [threading.Thread(target=work) for _ in range(2)]
        t0 = time.perf_counter()
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        walls.append(time.perf_counter() - t0)
    return sorted(walls)[repeats // 2] / sorted(singles)[repeats // 2]


def test_concurrent_callers_overlap():
    # Two host threads each augmenting a full batch must take well under 2x
    # the single-thread wall: the binding's hot kernels release the GIL.
    #
    # Wall-clock overlap can only show up on hardware that actually runs two
    # CPU-bound threads concurrently, so first calibrate the machine with a
    # workload that is GIL-free by construction (stdlib zlib). Unless that
    # baseline overlaps decisively (well under the bound, stable across
    # repeats), the environment cannot express the property.
    import zlib

    payload = np.random.default_rng(0).random(600_000).tobytes()
    ceiling = _two_thread_ratio(lambda: zlib.compress(payload, 6), repeats=5)
    if ceiling >= 1.3:
        pytest.skip(
            f"no decisive thread parallelism here: GIL-free zlib baseline "
            f"ran at {ceiling:.2f}x with two workers (need < 1.3x headroom)"
        )

    ms = build_mixing_set(4, 4, size=(224, 224), seed=5)
    batch = make_batch(n=6, h=224, w=224, seed=8)
    ratio = _two_thread_ratio(lambda: augment_batch(batch, ms, seed=13))
    assert ratio < 1.6, f"2-worker wall ran at {ratio:.2f}x single-worker"
