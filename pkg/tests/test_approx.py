import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_mu
from ptflearn.approx import (
    ClippedChain,
    ProperChain,
    format_chain,
    parse_chain,
    potential,
    ptf_approx,
    ptf_approx_prod,
    ptf_construct_prod,
    step_cap,
)
from ptflearn.bits import all_points, popcount_array
from ptflearn.boolcore import parse_dnf, random_dnf
from ptflearn.dist import ProductDistribution, basis_eval
from ptflearn.errors import ContractViolation
from ptflearn.spectrum import SparseSpectrum, exact_mu_transform, mu_transform_dense, truth_table


def _gap(chain, f, mu, d):
    n = mu.n
    pts = all_points(n)
    diff = mu_transform_dense(truth_table(f, n), mu) - mu_transform_dense(chain(pts), mu)
    return np.abs(diff[popcount_array(pts) <= d]).max()


def test_step_caps():
    assert step_cap(0.1, proper=False) == math.ceil(4 / (7 * 0.01))
    assert step_cap(0.1, proper=True) == 50


def test_small_target_gives_empty_chain():
    target = SparseSpectrum(5, {0: 0.1, 3: -0.2})
    res = ptf_approx(target, gamma=0.1)
    assert res.steps == 0 and len(res.chain) == 0
    assert np.all(res.chain(all_points(5)) == 0)


def test_empty_target():
    res = ptf_approx_prod(SparseSpectrum(4, {}, ProductDistribution((0.2,) * 4)), ProductDistribution((0.2,) * 4), 0.1)
    assert res.steps == 0


def test_or_within_five_gamma():
    f = parse_dnf("n=4; 0 | 1")
    U = ProductDistribution.uniform(4)
    res = ptf_approx(exact_mu_transform(f, U), gamma=0.05)
    assert _gap(res.chain, f, U, 4) <= 0.25


def test_random_dnfs_improper_and_proper(rng):
    for seed in range(10):
        n = 8
        mu = random_mu(n, 0.5, rng)
        f = random_dnf(n, 3, 3, seed=seed)
        d, gamma = 3, 0.05
        target = exact_mu_transform(f, mu, degree_cap=d)
        a = ptf_approx_prod(target, mu, gamma, degree_cap=d, reference=f)
        b = ptf_construct_prod(target, mu, gamma, degree_cap=d, reference=f)
        assert _gap(a.chain, f, mu, d) <= 5 * gamma
        assert _gap(b.chain, f, mu, d) <= 5 * gamma
        assert a.steps <= step_cap(gamma, False) and b.steps <= step_cap(gamma, True)


def test_sampled_backend_guarantee(rng):
    mu = random_mu(8, 0.5, rng)
    f = random_dnf(8, 2, 3, seed=3)
    target = exact_mu_transform(f, mu, degree_cap=2)
    res = ptf_approx_prod(target, mu, 0.1, 0.05, degree_cap=2, backend="sampled", rng=1)
    assert _gap(res.chain, f, mu, 2) <= 0.5


def test_improper_l2_drop(rng):
    for seed in range(10):
        mu = random_mu(8, 0.5, rng)
        f = random_dnf(8, 3, 3, seed=seed)
        gamma = 0.04
        res = ptf_approx_prod(exact_mu_transform(f, mu, 3), mu, gamma, degree_cap=3, reference=f)
        l2 = [r["l2"] for r in res.trace]
        assert l2[0] == pytest.approx(1.0)
        assert all(x - y >= 7 * gamma ** 2 / 4 - 1e-9 for x, y in zip(l2, l2[1:]))


def test_proper_potential_drop(rng):
    for seed in range(10):
        mu = random_mu(8, 0.5, rng)
        f = random_dnf(8, 3, 3, seed=seed)
        gamma = 0.05
        res = ptf_construct_prod(exact_mu_transform(f, mu, 3), mu, gamma, degree_cap=3, reference=f)
        e = [r["potential"] for r in res.trace]
        assert e[0] == pytest.approx(1.0, abs=1e-9)
        assert min(e) >= -1e-12
        assert all(x - y >= 2 * gamma ** 2 - 1e-9 for x, y in zip(e, e[1:]))


def test_potential_at_start():
    f = parse_dnf("n=5; 0&1 | !2")
    zero = np.zeros(32)
    assert potential(f, zero, zero, ProductDistribution((0.3, 0.1, -0.4, 0.0, 0.2)), 5) == pytest.approx(1.0)


def test_proper_weights_are_integers(rng):
    mu = random_mu(8, 0.5, rng)
    f = random_dnf(8, 3, 3, seed=2)
    gamma = 0.05
    chain = ptf_construct_prod(exact_mu_transform(f, mu, 3), mu, gamma, degree_cap=3).chain
    assert all(isinstance(k, int) for k in chain.weights.values())
    l1 = sum(abs(v) for v in chain.gprime.coeffs.values())
    assert l1 == pytest.approx(gamma * chain.total_weight)
    assert l1 <= 1 / (2 * gamma) + 1e-9
    pts = all_points(8)
    assert np.array_equal(chain.classify(pts), np.where(chain.gprime(pts) >= 0, 1.0, -1.0))


def test_proper_pointwise_update_bound(rng):
    mu = random_mu(7, 0.5, rng)
    f = random_dnf(7, 3, 3, seed=8)
    gamma = 0.1
    res = ptf_construct_prod(exact_mu_transform(f, mu, 3), mu, gamma, degree_cap=3)
    pts = all_points(7)
    gp = np.zeros(len(pts))
    for r in res.trace[:-1]:
        phi = basis_eval(mu, r["mask"], pts)
        nxt = gp + np.sign(r["diff"]) * gamma * phi
        step = np.abs(np.clip(nxt, -1, 1) - np.clip(gp, -1, 1))
        assert np.all(step <= np.abs(gamma * phi) + 1e-12)
        gp = nxt


def test_parity_proper_trace():
    a = 0b101
    U = ProductDistribution.uniform(4)
    target = SparseSpectrum(4, {a: 1.0})
    res = ptf_construct_prod(target, U, 0.25)
    assert [r["mask"] for r in res.trace[:-1]] == [a]
    assert res.chain.weights == {a: 1}
    ghat = mu_transform_dense(res.chain(all_points(4)), U)
    assert abs(ghat[a] - 1) <= 5 * 0.25


def test_uniform_prod_matches_parity_trace():
    f = random_dnf(8, 3, 3, seed=4)
    U = ProductDistribution.uniform(8)
    target = exact_mu_transform(f, U, 3)
    a = ptf_approx(target, 0.05, degree_cap=3, backend="sampled", rng=5)
    b = ptf_approx_prod(target, U, 0.05, degree_cap=3, backend="sampled", rng=5)
    assert a.trace == b.trace
    assert a.chain == b.chain


def test_outputs_bounded(rng):
    mu = random_mu(10, 0.5, rng)
    f = random_dnf(10, 4, 3, seed=1)
    target = exact_mu_transform(f, mu, 2)
    pts = all_points(10)
    for build in (ptf_approx_prod, ptf_construct_prod):
        values = build(target, mu, 0.05, degree_cap=2).chain(pts)
        assert np.all(np.abs(values) <= 1.0)


@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.integers(0, 255))
def test_clipping_never_hurts(h, fbits):
    h = np.array(h)
    f = np.where((fbits >> np.arange(8)) & 1, 1.0, -1.0)
    assert np.all((f - np.clip(h, -1, 1)) ** 2 <= (f - h) ** 2)


def test_cap_overflow_is_reported():
    # a target far outside the reachable range cannot be met
    target = SparseSpectrum(3, {0: 5.0})
    with pytest.raises(ContractViolation):
        ptf_approx(target, gamma=0.5)


def test_chain_roundtrip(rng):
    mu = random_mu(6, 0.5, rng)
    f = random_dnf(6, 2, 3, seed=0)
    target = exact_mu_transform(f, mu)
    pts = all_points(6)
    for build in (ptf_approx_prod, ptf_construct_prod):
        chain = build(target, mu, 0.1).chain
        back = parse_chain(format_chain(chain))
        assert type(back) is type(chain)
        assert np.array_equal(back(pts), chain(pts))


def test_chain_file_layout():
    text = format_chain(ClippedChain(3, ((5, 0.5), (1, -0.25))))
    lines = text.splitlines()
    assert lines[0].endswith("kind=clipped")
    assert lines[1:] == ["0x5 0.5", "0x1 -0.25"]
    proper = parse_chain(format_chain(ProperChain(3, {2: -3}, 0.125)))
    assert proper.weights == {2: -3} and proper.gamma == 0.125
