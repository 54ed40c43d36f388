import numpy as np
import pytest

from fractalmix import SeededRng, build_mixing_set, encode_png


def random_image(rng: np.random.Generator, h: int = 32, w: int = 32) -> np.ndarray:
    return rng.random((h, w, 3))


@pytest.fixture(scope="session")
def mixing_set_32():
    return build_mixing_set(3, 3, size=(32, 32), rng=SeededRng(99))


@pytest.fixture()
def np_rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def corpus_dir(tmp_path):
    """Write a small deterministic PNG corpus and return its directory."""

    def build(n: int = 8, h: int = 32, w: int = 32, subdir: str = "corpus"):
        root = tmp_path / subdir
        root.mkdir(parents=True, exist_ok=True)
        gen = np.random.default_rng(2024)
        for i in range(n):
            img = gen.random((h, w, 3))
            (root / f"img_{i:03d}.png").write_bytes(encode_png(img))
        return root

    return build
