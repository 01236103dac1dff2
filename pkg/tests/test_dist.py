import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptflearn.bits import all_points
from ptflearn.dist import (
    ProductDistribution,
    basis_eval,
    estimate_means,
    mean_sample_size,
    perturb,
    point_probability,
    sample_counts,
    sample_points,
)

means = st.lists(st.floats(-0.9, 0.9), min_size=1, max_size=6)


def test_rejects_bad_means():
    for bad in [(1.0,), (-1.0,), (float("nan"),), (0.2, 1.5)]:
        with pytest.raises(ValueError):
            ProductDistribution(bad)


def test_c_bound_and_uniform():
    mu = ProductDistribution((0.5, -0.25))
    assert mu.c_bound == pytest.approx(0.5)
    assert not mu.is_uniform
    assert ProductDistribution.uniform(3).is_uniform
    assert ProductDistribution.uniform(3).c_bound == 1.0


@given(means)
def test_probabilities_sum_to_one(mu):
    d = ProductDistribution(tuple(mu))
    p = d.probabilities()
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.allclose(p, point_probability(d, all_points(d.n)))


def test_point_probability_by_hand():
    d = ProductDistribution((0.5, -0.5))
    # x = (+1, -1) is mask 0b01: (1.5/2) * (1.5/2)
    assert point_probability(d, 0b01) == pytest.approx(0.5625)
    assert point_probability(d, 0b10) == pytest.approx(0.0625)


@given(means)
def test_basis_is_orthonormal(mu):
    d = ProductDistribution(tuple(mu))
    x = all_points(d.n)
    p = d.probabilities()
    phis = np.array([basis_eval(d, a, x) for a in range(1 << d.n)])
    gram = (phis * p) @ phis.T
    assert np.allclose(gram, np.eye(1 << d.n), atol=1e-9)


def test_uniform_basis_is_parity():
    d = ProductDistribution.uniform(3)
    # chi_a(x) = (-1)^{|a & ~x|}
    for a in range(8):
        for x in range(8):
            assert basis_eval(d, a, x) == (-1) ** bin(a & ~x & 7).count("1")


def test_basis_eval_rejects_wide_index():
    with pytest.raises(ValueError):
        basis_eval(ProductDistribution.uniform(2), 0b100, 0)


def test_sampling_matches_means(rng):
    d = ProductDistribution((0.6, -0.3, 0.0))
    pts = sample_points(d, 200000, rng)
    emp = [(2 * ((pts >> i) & 1) - 1).mean() for i in range(3)]
    assert np.allclose(emp, d.mu, atol=0.01)
    counts = sample_counts(d, 10 ** 12, rng)
    assert counts.sum() == 10 ** 12
    assert np.allclose(estimate_means(3, counts), d.mu, atol=1e-4)


def test_perturb_stays_in_cube(rng):
    bar = np.array([0.5, -0.5, 0.0, 0.2])
    for _ in range(50):
        mu = perturb(bar, 0.25, rng)
        assert np.all(np.abs(mu.mu_array - bar) <= 0.25 + 1e-12)
        assert mu.c_bound >= 0.25 - 1e-12


def test_perturb_rejects_unbounded_center(rng):
    with pytest.raises(ValueError):
        perturb(np.array([0.6]), 0.25, rng)
    with pytest.raises(ValueError):
        perturb(np.array([0.0]), 0.75, rng)


def test_mean_sample_size_formula():
    assert mean_sample_size(10, 0.01, 0.1) == math.ceil(2 * math.log(200) / 1e-4)
