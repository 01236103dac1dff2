"""Product distributions D_mu over {-1,1}^n and their orthonormal bases."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ptflearn.bits import EXACT_MAX_N, all_points, bit_indices, check_dimension


@dataclass(frozen=True)
class ProductDistribution:
    """D_mu: coordinate i equals +1 with probability (1 + mu_i) / 2."""

    mu: tuple[float, ...]

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        object.__setattr__(self, "mu", mu)
        check_dimension(len(mu))
        for m in mu:
            if not math.isfinite(m) or abs(m) >= 1.0:
                raise ValueError(f"mean {m!r} outside (-1, 1)")

    @classmethod
    def uniform(cls, n: int) -> ProductDistribution:
        return cls((0.0,) * n)

    @property
    def n(self) -> int:
        return len(self.mu)

    @property
    def c_bound(self) -> float:
        """Largest c with every mu_i in [-1 + c, 1 - c]."""
        return 1.0 - max(abs(m) for m in self.mu)

    @property
    def is_uniform(self) -> bool:
        return all(m == 0.0 for m in self.mu)

    @cached_property
    def mu_array(self) -> np.ndarray:
        return np.array(self.mu)

    @cached_property
    def sigma(self) -> np.ndarray:
        return np.sqrt(1.0 - self.mu_array ** 2)

    @cached_property
    def phi_plus(self) -> np.ndarray:
        """Single-coordinate basis value at x_i = +1."""
        return (1.0 - self.mu_array) / self.sigma

    @cached_property
    def phi_minus(self) -> np.ndarray:
        return (-1.0 - self.mu_array) / self.sigma

    @cached_property
    def p_plus(self) -> np.ndarray:
        return (1.0 + self.mu_array) / 2.0

    @cached_property
    def p_minus(self) -> np.ndarray:
        return (1.0 - self.mu_array) / 2.0

    def sub(self, variables: list[int]) -> ProductDistribution:
        """Marginal on the listed coordinates (renumbered 0..k-1)."""
        return ProductDistribution(tuple(self.mu[v] for v in variables))

    @cached_property
    def _probability_table(self) -> np.ndarray:
        if self.n > EXACT_MAX_N:
            raise ValueError(f"n={self.n} too large for a 2^n probability table")
        if self.is_uniform:
            return np.full(1 << self.n, 2.0 ** -self.n)
        return coordinate_product(self.p_minus, self.p_plus)

    def probabilities(self) -> np.ndarray:
        """Point probabilities of all 2^n points, indexed by point mask."""
        return self._probability_table


def coordinate_product(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Table over {0,1}^k of prod_i (hi[i] if bit i set else lo[i])."""
    table = np.ones(1)
    for a, b in zip(lo, hi):
        table = np.concatenate([table * a, table * b])
    return table


def point_probability(mu: ProductDistribution, x):
    """prod_i (1 + mu_i x_i) / 2 for a point mask or an array of them."""
    x = np.asarray(x, dtype=np.int64)
    out = np.ones(x.shape)
    for i in range(mu.n):
        out *= np.where((x >> i) & 1, mu.p_plus[i], mu.p_minus[i])
    return float(out) if out.ndim == 0 else out


def basis_eval(mu: ProductDistribution, a: int, x):
    """phi_{mu,a}(x) = prod_{i in a} (x_i - mu_i) / sqrt(1 - mu_i^2)."""
    if a >> mu.n:
        raise ValueError(f"index {a:#x} does not fit in n={mu.n}")
    x = np.asarray(x, dtype=np.int64)
    if np.any(x >> mu.n):
        raise ValueError(f"point does not fit in n={mu.n}")
    out = np.ones(x.shape)
    for i in bit_indices(a):
        out *= np.where((x >> i) & 1, mu.phi_plus[i], mu.phi_minus[i])
    return float(out) if out.ndim == 0 else out


def sample_points(mu: ProductDistribution, size: int, rng: np.random.Generator) -> np.ndarray:
    """`size` independent points from D_mu as int64 masks."""
    bits = rng.random((size, mu.n)) < mu.p_plus
    weights = np.left_shift(np.int64(1), np.arange(mu.n, dtype=np.int64))
    return bits.astype(np.int64) @ weights


def sample_counts(mu: ProductDistribution, size: int, rng: np.random.Generator) -> np.ndarray:
    """Histogram over all 2^n points of `size` independent draws from D_mu.

    The histogram is a sufficient statistic for any estimator that averages a
    per-example statistic, and it is drawn directly from its multinomial law,
    so the cost is O(2^n) however large `size` is.
    """
    p = mu.probabilities()
    return rng.multinomial(int(size), p / p.sum())


def perturb(mu_bar, c: float, rng: np.random.Generator) -> ProductDistribution:
    """Smoothed model: mu uniform in the cube mu_bar + [-c, c]^n."""
    mu_bar = np.asarray(mu_bar, dtype=float)
    if not 0.0 < c <= 0.5:
        raise ValueError(f"perturbation radius c={c} outside (0, 1/2]")
    if np.any(np.abs(mu_bar) > 1.0 - 2.0 * c + 1e-12):
        raise ValueError("mu_bar is not 2c-bounded")
    mu = mu_bar + rng.uniform(-c, c, size=mu_bar.shape)
    return ProductDistribution(tuple(np.clip(mu, -1.0 + c, 1.0 - c)))


def mean_sample_size(n: int, accuracy: float, delta: float) -> int:
    """Examples needed so every coordinate mean is within `accuracy` w.p. 1 - delta."""
    return math.ceil(2.0 * math.log(2.0 * n / delta) / accuracy ** 2)


def estimate_means(n: int, counts: np.ndarray) -> np.ndarray:
    """Empirical E[x_i] from a histogram over all 2^n points."""
    total = counts.sum()
    points = all_points(n)
    out = np.empty(n)
    for i in range(n):
        ones = counts[(points >> i) & 1 == 1].sum()
        out[i] = (2.0 * ones - total) / total
    return out
