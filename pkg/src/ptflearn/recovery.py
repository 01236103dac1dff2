"""Heavy-coefficient recovery: KM / EKM with membership queries, the Low Degree
algorithm and greedy feature construction from random examples.

All four run at desk scale (n <= 24) and share one convention: a returned
spectrum is a SparseSpectrum in the basis of the distribution they were given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from ptflearn.bits import (
    EXACT_MAX_N,
    all_points,
    bit_indices,
    expand,
    popcount,
    popcount_array,
)
from ptflearn.dist import ProductDistribution, coordinate_product
from ptflearn.errors import FrontierExceeded
from ptflearn.oracles import (
    ExampleOracle,
    MembershipOracle,
    coefficient_sample_size,
    empirical_coefficients,
)
from ptflearn.spectrum import (
    SparseSpectrum,
    forward_maps,
    kron_apply,
    mu_transform_dense,
    restrict,
    truth_table,
)

BACKENDS = ("sampled", "exact")


@dataclass(frozen=True)
class RecoveryParams:
    theta: float
    delta: float = 0.05
    degree_cap: int | None = None
    variable_set: int | None = None
    backend: str = "sampled"
    refined_sampling: bool = True
    frontier_cap: int | None = None

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta={self.theta} outside (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta={self.delta} outside (0, 1)")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")


def bucket_sample_size(accuracy: float, delta: float) -> int:
    """Hoeffding size for a statistic in [0, 1]."""
    return math.ceil(math.log(2.0 / delta) / (2.0 * accuracy ** 2))


def _exact_bucket_weights(coeff_sq: np.ndarray, n: int, k: int) -> np.ndarray:
    """W(alpha) for every prefix alpha of length k: sum over suffix extensions."""
    return coeff_sq.reshape(1 << (n - k), 1 << k).sum(axis=0)


def _sampled_bucket_weights(
    mq: MembershipOracle,
    mu: ProductDistribution,
    k: int,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Estimate W(alpha) = E_z[f_alpha(z)^2] for all prefixes of length k.

    z (the last n-k coordinates) is drawn `size` times from D_mu; for each drawn
    z the prefix block f(., z) is queried in full and f_alpha(z) = E_x[f(x z) phi_alpha(x)]
    is computed exactly, so the per-sample statistic lies in [0, 1].
    """
    n = mu.n
    suffix = list(range(k, n))
    if suffix:
        sub = mu.sub(suffix)
        probs = coordinate_product(sub.p_minus, sub.p_plus)
        counts = rng.multinomial(size, probs / probs.sum())
    else:
        counts = np.array([size], dtype=np.int64)
    occupied = np.flatnonzero(counts)
    block = np.arange(1 << k, dtype=np.int64)
    points = (occupied[:, None] << k) | block[None, :]
    mult = np.repeat(counts[occupied], 1 << k)
    values = mq.query(points.ravel(), multiplicity=mult).reshape(len(occupied), 1 << k)
    f_alpha = kron_apply(values, forward_maps(mu.sub(list(range(k))), k) if k else [])
    weights = counts[occupied].astype(float) @ (f_alpha ** 2)
    return weights / float(size)


def ekm_product(
    mq: MembershipOracle,
    mu: ProductDistribution,
    params: RecoveryParams,
    rng: np.random.Generator | int | None = None,
    trace: list | None = None,
) -> SparseSpectrum:
    """Recover every mu-coefficient of magnitude >= theta using membership queries.

    Prefix-bucket search: a bucket is a fixed assignment alpha of the first k
    index bits, with weight W(alpha) = sum of squared coefficients extending it.
    Buckets whose (estimated) weight falls below theta^2/2 are pruned.
    """
    n = mu.n
    if n > EXACT_MAX_N:
        raise ValueError(f"n={n} exceeds the desk-scale limit {EXACT_MAX_N}")
    rng = np.random.default_rng(rng)
    theta = params.theta
    cut = theta * theta / 2.0

    if params.backend == "exact":
        coeffs = mu_transform_dense(mq.query(all_points(n)), mu)
        coeff_sq = coeffs ** 2

    survivors = np.zeros(1, dtype=np.int64)
    level_delta = params.delta / 2.0 / n
    for k in range(1, n + 1):
        candidates = np.concatenate([survivors, survivors | (1 << (k - 1))])
        if params.backend == "exact":
            weights = _exact_bucket_weights(coeff_sq, n, k)[candidates]
        else:
            size = bucket_sample_size(cut / 2.0, level_delta / len(candidates))
            weights = _sampled_bucket_weights(mq, mu, k, size, rng)[candidates]
        keep = weights >= cut
        if trace is not None:
            trace.append({"level": k, "candidates": candidates, "weights": weights})
        survivors = np.sort(candidates[keep])

    if params.backend == "exact":
        values = coeffs[survivors]
    else:
        values = _estimate_by_queries(mq, mu, survivors, theta / 2.0, params, rng)
    kept = np.abs(values) >= theta / 2.0
    spectrum = SparseSpectrum(n, dict(zip(survivors[kept].tolist(), values[kept].tolist())), mu)
    if params.degree_cap is not None:
        spectrum = restrict(spectrum, degree_cap=params.degree_cap)
    return spectrum


def _estimate_by_queries(mq, mu, masks, accuracy, params, rng) -> np.ndarray:
    """Shared-sample empirical coefficients at random query points x ~ D_mu."""
    if len(masks) == 0:
        return np.zeros(0)
    n = mu.n
    degree = int(popcount_array(masks).max())
    size = coefficient_sample_size(
        mu, degree, accuracy, params.delta / 2.0 / len(masks), params.refined_sampling
    )
    probs = mu.probabilities()
    counts = rng.multinomial(size, probs / probs.sum())
    occupied = np.flatnonzero(counts)
    labels = np.zeros(1 << n)
    labels[occupied] = mq.query(occupied, multiplicity=counts[occupied])
    table = empirical_coefficients(counts, labels, mu, list(range(n)))
    return table[masks]


def km_uniform(
    mq: MembershipOracle,
    params: RecoveryParams,
    rng: np.random.Generator | int | None = None,
    trace: list | None = None,
) -> SparseSpectrum:
    """Parity-basis heavy coefficients; the uniform case of `ekm_product`."""
    return ekm_product(mq, ProductDistribution.uniform(mq.n), params, rng, trace)


def _variable_list(n: int, variable_set: int | None) -> list[int]:
    return list(range(n)) if variable_set is None else bit_indices(variable_set)


def low_degree(ex: ExampleOracle, params: RecoveryParams) -> SparseSpectrum:
    """Estimate every coefficient of degree <= d within the variable set from examples.

    Estimates are taken to accuracy theta/4 and kept when at least 3*theta/4
    in magnitude, so dropped coefficients are below theta and at most 4/theta^2
    survive.
    """
    mu = ex.mu
    n = mu.n
    variables = _variable_list(n, params.variable_set)
    d = len(variables) if params.degree_cap is None else min(params.degree_cap, len(variables))
    theta = params.theta
    if params.backend == "exact":
        full = mu_transform_dense(truth_table(ex.target, n), mu)
        masks = expand(all_points(len(variables)), variables)
        masks = masks[popcount_array(masks) <= d]
        vals = full[masks]
        kept = np.abs(vals) >= theta / 2.0
        return SparseSpectrum(n, dict(zip(masks[kept].tolist(), vals[kept].tolist())), mu)

    count = sum(math.comb(len(variables), j) for j in range(d + 1))
    size = coefficient_sample_size(
        mu, d, theta / 4.0, params.delta / count, params.refined_sampling
    )
    counts, labels = ex.sample_counts(size)
    table = empirical_coefficients(counts, labels, mu, variables)
    local = all_points(len(variables)) if variables else np.zeros(1, dtype=np.int64)
    ok = (popcount_array(local) <= d) & (np.abs(table) >= 0.75 * theta)
    idx = np.flatnonzero(ok)
    masks = expand(idx.astype(np.int64), variables)
    return SparseSpectrum(n, dict(zip(masks.tolist(), table[idx].tolist())), mu)


def gfc(
    ex: ExampleOracle,
    params: RecoveryParams,
    basis: ProductDistribution | None = None,
    trace: list | None = None,
) -> SparseSpectrum:
    """Greedy feature construction over downward-closed candidate families.

    Candidates grow one variable at a time from the empty set; a set becomes a
    candidate only when all of its immediate subsets survived (estimate of
    magnitude >= theta/2).  Estimates share one sample at accuracy theta/4;
    the output keeps estimates of magnitude >= 3*theta/4.

    `basis` is the distribution whose basis is used (the learner's estimate of
    the example distribution); it defaults to the oracle's own.
    """
    basis = basis or ex.mu
    n = basis.n
    d = n if params.degree_cap is None else min(params.degree_cap, n)
    theta = params.theta
    cap = params.frontier_cap or math.ceil(16 * 2 ** d / theta ** 2)
    size = coefficient_sample_size(
        basis, d, theta / 4.0, params.delta / cap, params.refined_sampling
    )
    if params.backend == "exact":
        table = mu_transform_dense(truth_table(ex.target, n), basis)
    else:
        counts, labels = ex.sample_counts(size)
        table = empirical_coefficients(counts, labels, basis, list(range(n)))

    explored = 0
    output = {}
    level = [0]
    for k in range(d + 1):
        explored += len(level)
        if explored > cap:
            raise FrontierExceeded(f"explored {explored} candidates, cap {cap}")
        survivors = {a for a in level if abs(table[a]) >= theta / 2.0}
        for a in level:
            if abs(table[a]) >= 0.75 * theta:
                output[a] = float(table[a])
        if trace is not None:
            trace.append({"degree": k, "candidates": list(level), "survivors": sorted(survivors)})
        if k == d:
            break
        nxt = set()
        for a in survivors:
            for j in range(n):
                b = a | (1 << j)
                if b == a or b in nxt:
                    continue
                if all((b & ~(1 << i)) in survivors for i in bit_indices(b)):
                    nxt.add(b)
        level = sorted(nxt)
        if not level:
            break
    return SparseSpectrum(n, output, basis)
