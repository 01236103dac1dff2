"""Simulated access to a target function and the estimators built on it.

Counters record *logical* accesses: the number of queries or examples a
literal implementation of each algorithm would issue.  For n <= 24 the
example oracle can hand out the histogram of N draws instead of the draws
themselves; the histogram has exactly the law of N i.i.d. examples.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ptflearn.bits import EXACT_MAX_N, all_points, bit_indices, compress, popcount
from ptflearn.dist import ProductDistribution, basis_eval, sample_counts, sample_points
from ptflearn.errors import BudgetExhausted
from ptflearn.spectrum import basis_sum_maps, kron_apply, truth_table


class MembershipOracle:
    """Answers f(x) for any chosen point x."""

    def __init__(self, target: Callable, n: int, budget: int | None = None):
        self.target = target
        self.n = n
        self.budget = budget
        self.query_count = 0

    def charge(self, queries: int) -> None:
        if self.budget is not None and self.query_count + queries > self.budget:
            raise BudgetExhausted(
                f"membership budget {self.budget} exceeded ({self.query_count} + {queries})"
            )
        self.query_count += int(queries)

    def query(self, points, multiplicity=None) -> np.ndarray:
        """Values at `points`; `multiplicity[j]` repeats of point j are charged."""
        points = np.asarray(points, dtype=np.int64)
        if multiplicity is None:
            self.charge(points.size)
        else:
            self.charge(int(np.sum(multiplicity, dtype=object)))
        return np.asarray(self.target(points), dtype=float)

    def clone(self) -> MembershipOracle:
        return MembershipOracle(self.target, self.n, self.budget)


class ExampleOracle:
    """EX(D_mu, f): labelled examples with x drawn from D_mu."""

    def __init__(
        self,
        target: Callable,
        mu: ProductDistribution,
        rng: np.random.Generator | int | None = None,
        budget: int | None = None,
    ):
        self.target = target
        self.mu = mu
        self.rng = np.random.default_rng(rng)
        self.budget = budget
        self.sample_count = 0
        self._labels = None

    @property
    def n(self) -> int:
        return self.mu.n

    def _charge(self, size: int) -> None:
        if size < 0:
            raise ValueError("negative sample size")
        if self.budget is not None and self.sample_count + size > self.budget:
            raise BudgetExhausted(
                f"example budget {self.budget} exceeded ({self.sample_count} + {size})"
            )
        if size >= 2 ** 63:
            raise BudgetExhausted(f"sample size {size} does not fit a 64-bit counter")
        self.sample_count += int(size)

    def sample(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        self._charge(size)
        points = sample_points(self.mu, size, self.rng)
        return points, np.asarray(self.target(points), dtype=float)

    def sample_counts(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Histogram of `size` examples over all 2^n points, with their labels.

        Labels of points that were never drawn are reported as 0.
        """
        if self.n > EXACT_MAX_N:
            raise ValueError(f"histogram sampling needs n <= {EXACT_MAX_N}")
        self._charge(size)
        counts = sample_counts(self.mu, size, self.rng)
        if self._labels is None:
            self._labels = truth_table(self.target, self.n)
        return counts, np.where(counts > 0, self._labels, 0.0)

    def clone(self, seed) -> ExampleOracle:
        """Same target and distribution, independent random stream."""
        return ExampleOracle(self.target, self.mu, np.random.default_rng(seed), self.budget)


def expectation_sample_size(bound: float, accuracy: float, delta: float) -> int:
    """Hoeffding size for a statistic with |value| <= bound."""
    _check_accuracy(accuracy, delta)
    return math.ceil(bound * bound * 2.0 * math.log(2.0 / delta) / accuracy ** 2)


def coefficient_sample_size(
    mu: ProductDistribution, degree: int, accuracy: float, delta: float, refined: bool = False
) -> int:
    """Examples for one degree-`degree` coefficient to `accuracy` w.p. 1 - delta.

    The default bound uses sup |phi_{mu,a}|^2 <= ((2 - c)/c)^degree; the refined
    rule drops the dependence on degree and mu.
    """
    _check_accuracy(accuracy, delta)
    if refined:
        return math.ceil(8.0 * math.log(2.0 / delta) / accuracy ** 2)
    c = mu.c_bound
    base = math.ceil(2.0 * math.log(2.0 / delta) / accuracy ** 2)
    return math.ceil(base * ((2.0 - c) / c) ** degree)


def _check_accuracy(accuracy: float, delta: float) -> None:
    if not accuracy > 0 or not 0 < delta < 1:
        raise ValueError(f"need accuracy > 0 and delta in (0,1), got {accuracy}, {delta}")


def estimate_expectation(
    src: ExampleOracle,
    statistic: Callable[[np.ndarray, np.ndarray], np.ndarray],
    bound: float,
    accuracy: float,
    delta: float,
) -> float:
    """Empirical mean of statistic(x, f(x)); within `accuracy` w.p. >= 1 - delta."""
    size = expectation_sample_size(bound, accuracy, delta)
    if src.n <= EXACT_MAX_N:
        counts, labels = src.sample_counts(size)
        hit = np.flatnonzero(counts)
        values = np.asarray(statistic(hit.astype(np.int64), labels[hit]), dtype=float)
        values = np.broadcast_to(values, hit.shape)
        return float(np.dot(counts[hit].astype(float), values) / size)
    points, labels = src.sample(size)
    return float(np.mean(statistic(points, labels)))


def empirical_coefficients(
    counts: np.ndarray, labels: np.ndarray, mu: ProductDistribution, variables: list[int]
) -> np.ndarray:
    """(1/N) sum_j f(x_j) phi_{mu,a}(x_j) for every a within `variables`.

    Returned array is indexed by masks compressed onto `variables`.
    """
    n = mu.n
    total = counts.sum()
    weighted = counts.astype(float) * labels
    if not variables:
        return np.array([weighted.sum() / float(total)])
    if len(variables) < n:
        keys = compress(all_points(n), variables)
        weighted = np.bincount(keys, weights=weighted, minlength=1 << len(variables))
    sums = kron_apply(weighted, basis_sum_maps(mu.sub(variables), len(variables)))
    return sums / float(total)


def estimate_coefficients(
    src: ExampleOracle,
    masks,
    accuracy: float,
    delta: float,
    refined: bool = False,
) -> dict[int, float]:
    """Shared-sample estimates of several mu-coefficients; joint confidence 1 - delta."""
    masks = [int(a) for a in masks]
    if not masks:
        return {}
    degree = max(popcount(a) for a in masks)
    size = coefficient_sample_size(src.mu, degree, accuracy, delta / len(masks), refined)
    variables = bit_indices(int(np.bitwise_or.reduce(np.array(masks, dtype=np.int64))))
    if src.n <= EXACT_MAX_N:
        counts, labels = src.sample_counts(size)
        table = empirical_coefficients(counts, labels, src.mu, variables)
        return {a: float(table[compress(a, variables)]) for a in masks}
    points, labels = src.sample(size)
    return {a: float(np.mean(labels * basis_eval(src.mu, a, points))) for a in masks}


def estimate_coefficient(
    src: ExampleOracle, a: int, accuracy: float, delta: float, refined: bool = False
) -> float:
    return estimate_coefficients(src, [a], accuracy, delta, refined)[a]


def influence_sample_sizes(
    mu: ProductDistribution, accuracy: float, delta: float, variables: list[int]
) -> tuple[int, int]:
    """(examples needed on each side of x_i, examples to draw up front)."""
    _check_accuracy(accuracy, delta)
    per_side = math.ceil(2.0 * math.log(4.0 * len(variables) / delta) / accuracy ** 2)
    rarest = max(abs(mu.mu[i]) for i in variables)
    return per_side, math.ceil(per_side * 2.0 / (1.0 - rarest))


def estimate_influences(
    src: ExampleOracle,
    accuracy: float,
    delta: float,
    variables: list[int] | None = None,
) -> dict[int, float]:
    """Influence of each variable of a monotone target, jointly w.p. >= 1 - delta.

    I_i = (E[f | x_i = 1] - E[f | x_i = -1]) / 2, each conditional mean taken
    over the received examples with that value of x_i.  Monotonicity is the
    caller's promise; it is not checked.
    """
    variables = list(range(src.n)) if variables is None else list(variables)
    if not variables:
        return {}
    per_side, first = influence_sample_sizes(src.mu, accuracy, delta, variables)
    n = src.n
    if n > EXACT_MAX_N:
        raise ValueError(f"influence estimation here needs n <= {EXACT_MAX_N}")
    points = all_points(n)
    counts = np.zeros(1 << n, dtype=np.int64)
    sums = np.zeros(1 << n)
    draw = first
    while True:
        c, labels = src.sample_counts(draw)
        counts += c
        sums += c * labels
        ones = np.array([counts[(points >> i) & 1 == 1].sum() for i in variables])
        total = counts.sum()
        short = np.maximum(per_side - ones, per_side - (total - ones))
        if short.max() <= 0:
            break
        rarest = max(abs(src.mu.mu[i]) for i in variables)
        draw = math.ceil(short.max() * 2.0 / (1.0 - rarest))
    out = {}
    for i in variables:
        hi = (points >> i) & 1 == 1
        n1, n0 = counts[hi].sum(), counts[~hi].sum()
        out[i] = 0.5 * (sums[hi].sum() / n1 - sums[~hi].sum() / n0)
    return {i: float(v) for i, v in out.items()}


def estimate_influence(src: ExampleOracle, i: int, accuracy: float, delta: float) -> float:
    return estimate_influences(src, accuracy, delta, [i])[i]


def exact_influence(f: Callable, n: int, i: int, mu: ProductDistribution | None = None) -> float:
    """Pr_mu[f(x with x_i=1) != f(x with x_i=-1)] by enumeration."""
    mu = mu or ProductDistribution.uniform(n)
    x = all_points(n)
    up = np.asarray(f(x | (1 << i)))
    down = np.asarray(f(x & ~(1 << i)))
    return float(np.dot(mu.probabilities(), up != down))
