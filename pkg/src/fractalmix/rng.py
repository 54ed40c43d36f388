"""Deterministic, seedable random streams.

Every stochastic choice in the pipeline flows through :class:`SeededRng`, a
thin wrapper around numpy's Philox counter-based bit generator. A stream is
addressed by ``(seed, path)``: ``child(i)`` extends the path tuple, and
numpy's ``SeedSequence`` spawn keys guarantee the derived streams do not
overlap. Replaying the same ``(seed, path)`` reproduces the exact draw
sequence on any platform.

Dirichlet and Beta sampling go through inverse-CDF gamma draws
(``scipy.special.gammaincinv``), so each call consumes a fixed number of
uniforms: ``k`` for a k-dimensional Dirichlet, 2 for a Beta.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .errors import ParameterError

# Raw gamma draws are floored so normalized weights stay strictly inside the
# open simplex even when tiny alphas drive a draw toward underflow.
_GAMMA_FLOOR = 1e-12

_MAX_SEED = 2**64


class SeededRng:
    """Single-owner random stream keyed by (seed, path).

    Not shareable across workers: give each parallel work item its own
    ``child(index)`` stream instead.
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= int(seed) < _MAX_SEED:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "SeededRng":
        """Derive the independent stream at (seed, path + (index,))."""
        return SeededRng(self.seed, self.path + (int(index),))

    def uniform(self, size=None):
        """Uniform float64 draw(s) in [0, 1)."""
        return self._gen.random(size)

    def integers(self, n: int, size=None):
        """Uniform integer draw(s) in [0, n)."""
        if n < 1:
            raise ParameterError(f"integers() needs n >= 1, got {n}")
        return self._gen.integers(0, n, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, path={self.path})"


def _gamma_icdf(alpha: float, u: np.ndarray) -> np.ndarray:
    # Inverse of the regularized lower incomplete gamma = unit-scale Gamma ppf.
    return special.gammaincinv(alpha, u)


def sample_dirichlet(alpha: float, k: int, rng: SeededRng) -> np.ndarray:
    """Draw k weights from Dirichlet(alpha, ..., alpha) via normalized gammas.

    Consumes exactly k uniforms. The result sums to 1 and every component is
    positive; for k = 1 the draw is the one-point simplex [1.0].
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    u = rng.uniform(size=k)
    g = np.maximum(_gamma_icdf(alpha, u), _GAMMA_FLOOR)
    return g / g.sum()


def sample_beta(alpha: float, rng: SeededRng) -> float:
    """Draw m ~ Beta(alpha, alpha) as g1 / (g1 + g2) from two gamma draws."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    u = rng.uniform(size=2)
    g = np.maximum(_gamma_icdf(alpha, u), _GAMMA_FLOOR)
    return float(g[0] / (g[0] + g[1]))


def choose_uniform(items, rng: SeededRng):
    """Pick one item uniformly. Consumes one integer draw."""
    if len(items) == 0:
        raise ParameterError("choose_uniform() needs a nonempty sequence")
    return items[int(rng.integers(len(items)))]
