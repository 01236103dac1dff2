"""End-to-end learners: DNF with membership queries over product distributions,
DNF over smoothed product distributions, and monotone DNF from random examples.

Each learner has two phases: collect an approximation of the target's low-degree
spectrum, then build a bounded function with nearly the same spectrum and
return its sign.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ptflearn.approx import ClippedChain, ProperChain, ptf_approx_prod, ptf_construct_prod
from ptflearn.bits import EXACT_MAX_N, all_points, mask_of
from ptflearn.boolcore import sign
from ptflearn.dist import ProductDistribution, estimate_means, mean_sample_size
from ptflearn.errors import ContractViolation
from ptflearn.oracles import ExampleOracle, MembershipOracle, estimate_influences
from ptflearn.recovery import RecoveryParams, ekm_product, gfc, low_degree
from ptflearn.spectrum import SparseSpectrum, restrict
from ptflearn.structural import degree_for

# Verified identity: I_i * (1 - mu_i^2) = ||f_hat_mu(S_i)||_2^2 for monotone f.
INFLUENCE_KAPPA = "1 - mu_i^2"


@dataclass(frozen=True)
class LearnerConfig:
    s: int
    epsilon: float
    delta: float = 0.1
    c: float | None = None
    recovery_backend: str = "sampled"
    chain_backend: str = "exact"
    phase_delta: float = 0.25
    proper: bool = False
    amplify: bool = True
    repetitions: int | None = None
    query_budget: int | None = None
    sample_budget: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1 or not 0 < self.delta < 1:
            raise ValueError("epsilon and delta must lie in (0, 1)")
        if self.s < 1:
            raise ValueError("s must be at least 1")
        if self.c is not None and not 0 < self.c <= 1:
            raise ValueError("c must lie in (0, 1]")
        for name in ("recovery_backend", "chain_backend"):
            if getattr(self, name) not in ("exact", "sampled"):
                raise ValueError(f"{name} must be 'exact' or 'sampled'")

    @property
    def attempts(self) -> int:
        if not self.amplify:
            return 1
        if self.repetitions is not None:
            return self.repetitions
        return max(1, math.ceil(math.log2(1.0 / self.delta)))


@dataclass(frozen=True)
class Hypothesis:
    """sign(g) for a bounded chain g; `provenance` records how it was built."""

    chain: ClippedChain | ProperChain
    provenance: dict = field(default_factory=dict)
    target: SparseSpectrum | None = None

    @property
    def kind(self) -> str:
        return "sign-of-ProperChain" if isinstance(self.chain, ProperChain) else "sign-of-ClippedChain"

    @property
    def n(self) -> int:
        return self.chain.n

    def real(self, x):
        return self.chain(x)

    def __call__(self, x):
        if isinstance(self.chain, ProperChain):
            return self.chain.classify(x)
        return sign(self.chain(x))


@dataclass(frozen=True)
class LearnerParameters:
    eps_prime: float
    d: int
    d_eff: int
    gamma: float


def learner_parameters(s: int, epsilon: float, c: float, n: int | None = None) -> LearnerParameters:
    """eps' = eps/9, d = floor(log(s/eps')/log(2/(2-c))), gamma = eps'/(2(2-c)^(d/2) s + 1).

    With n given, the degree used for execution is min(d, n) and gamma follows it:
    no term is longer than n, so nothing is truncated at d = n.
    """
    eps_prime = epsilon / 9.0
    d = degree_for(s, c, eps_prime)
    d_eff = d if n is None else min(d, n)
    gamma = eps_prime / (2.0 * (2.0 - c) ** (d_eff / 2.0) * s + 1.0)
    return LearnerParameters(eps_prime, d, d_eff, gamma)


def mdnf_variable_bound(s: int, gamma: float, c: float) -> int:
    """Most variables that can survive influence elimination: s * floor(log(3s/gamma^2)/log(2/(2-c)))."""
    return s * math.floor(math.log2(3 * s / gamma ** 2) / math.log2(2.0 / (2.0 - c)) + 1e-12)


@dataclass(frozen=True)
class ErrorMeasurement:
    value: float
    band: float
    mode: str


def measure_error(h: Callable, f: Callable, n: int, mu: ProductDistribution | None = None, mode="exact", rng=None) -> ErrorMeasurement:
    """Pr_mu[h != f]: exact by enumeration, or empirical over `mode` examples (+-3/sqrt(N))."""
    mu = mu or ProductDistribution.uniform(n)
    if mode == "exact":
        if n > EXACT_MAX_N:
            raise ValueError("exact error measurement needs n <= 24")
        x = all_points(n)
        wrong = np.asarray(h(x)) != np.asarray(f(x))
        return ErrorMeasurement(float(np.dot(mu.probabilities(), wrong)), 0.0, "exact")
    size = int(mode)
    ex = ExampleOracle(f, mu, np.random.default_rng(rng))
    value = _empirical_error(h, ex, size)
    return ErrorMeasurement(value, 3.0 / math.sqrt(size), f"sampled({size})")


def _empirical_error(h: Callable, source, size: int) -> float:
    if isinstance(source, ExampleOracle):
        if source.n <= EXACT_MAX_N:
            counts, labels = source.sample_counts(size)
            seen = np.flatnonzero(counts)
            wrong = np.asarray(h(seen)) != labels[seen]
            return float(counts[seen][wrong].sum() / size)
        points, labels = source.sample(size)
        return float(np.mean(np.asarray(h(points)) != labels))
    raise TypeError("validation needs an example source")


class _QuerySampler:
    """Random labelled points for validation, drawn through a membership oracle."""

    def __init__(self, mq: MembershipOracle, mu: ProductDistribution, rng):
        self.mq, self.mu, self.rng = mq, mu, rng
        self.n = mu.n

    def error(self, h: Callable, size: int) -> float:
        probs = self.mu.probabilities()
        counts = self.rng.multinomial(size, probs / probs.sum())
        seen = np.flatnonzero(counts)
        labels = self.mq.query(seen, multiplicity=counts[seen])
        wrong = np.asarray(h(seen)) != labels
        return float(counts[seen][wrong].sum() / size)


def _amplify(attempt: Callable[[np.random.Generator], Hypothesis], validate, cfg: LearnerConfig, rng):
    """Run up to cfg.attempts independent attempts; keep the first that validates."""
    tries = cfg.attempts
    if tries == 1:
        h = attempt(rng)
        h.provenance["attempts"] = 1
        return h
    slack = cfg.epsilon / 10.0
    size = math.ceil(math.log(2.0 * tries / cfg.delta) / (2.0 * slack * slack))
    best = None
    for k in range(tries):
        h = attempt(rng)
        err = validate(h, size)
        h.provenance.update(attempts=k + 1, validation_error=err, validation_size=size)
        if err <= cfg.epsilon + slack:
            return h
        if best is None or err < best.provenance["validation_error"]:
            best = h
    best.provenance["validated"] = False
    return best


def _construct(target: SparseSpectrum, mu: ProductDistribution, params: LearnerParameters, cfg: LearnerConfig, rng):
    build = ptf_construct_prod if cfg.proper else ptf_approx_prod
    return build(
        target,
        mu,
        params.gamma,
        cfg.phase_delta,
        degree_cap=params.d_eff,
        backend=cfg.chain_backend,
        rng=rng,
    )


def _provenance(learner: str, params: LearnerParameters, cfg: LearnerConfig, c: float, **extra) -> dict:
    out = {
        "learner": learner,
        "s": cfg.s,
        "epsilon": cfg.epsilon,
        "c": c,
        "eps_prime": params.eps_prime,
        "d": params.d,
        "d_eff": params.d_eff,
        "gamma": params.gamma,
    }
    out.update(extra)
    return out


def learn_dnf_mq_prod(
    mq: MembershipOracle, mu: ProductDistribution, cfg: LearnerConfig, rng=None
) -> Hypothesis:
    """EKM for the heavy mu-coefficients (theta = gamma), then the clipped chain."""
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    c = mu.c_bound if cfg.c is None else cfg.c
    if c > mu.c_bound + 1e-12:
        raise ValueError(f"distribution is not {c}-bounded")
    params = learner_parameters(cfg.s, cfg.epsilon, c, mu.n)

    def attempt(r):
        t0 = time.perf_counter()
        q0 = mq.query_count
        found = ekm_product(
            mq,
            mu,
            RecoveryParams(params.gamma, cfg.phase_delta, backend=cfg.recovery_backend),
            r,
        )
        target = restrict(found, degree_cap=params.d_eff)
        result = _construct(target, mu, params, cfg, r)
        return Hypothesis(
            result.chain,
            _provenance(
                "dnf_mq_prod",
                params,
                cfg,
                c,
                recovered=len(found),
                target_size=len(target),
                steps=result.steps,
                queries=mq.query_count - q0,
                seconds=time.perf_counter() - t0,
            ),
            target,
        )

    sampler = _QuerySampler(mq, mu, rng)
    return _amplify(attempt, lambda h, size: sampler.error(h, size), cfg, rng)


def learn_dnf_smoothed(ex: ExampleOracle, cfg: LearnerConfig, rng=None) -> Hypothesis:
    """Estimate mu from examples, run GFC in the estimated basis, then the clipped chain.

    cfg.c is the smoothing radius; the perturbed distribution is c-bounded.
    """
    if cfg.c is None:
        raise ValueError("the smoothed learner needs the smoothing radius c")
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    n = ex.n
    params = learner_parameters(cfg.s, cfg.epsilon, cfg.c, n)

    def attempt(r):
        t0 = time.perf_counter()
        s0 = ex.sample_count
        accuracy = params.gamma * cfg.c / (8.0 * n)
        counts, _ = ex.sample_counts(mean_sample_size(n, accuracy, cfg.phase_delta))
        mu_hat = ProductDistribution(tuple(np.clip(estimate_means(n, counts), -1 + cfg.c, 1 - cfg.c)))
        found = gfc(
            ex,
            RecoveryParams(params.gamma, cfg.phase_delta, degree_cap=params.d_eff),
            basis=mu_hat,
        )
        result = _construct(found, mu_hat, params, cfg, r)
        return Hypothesis(
            result.chain,
            _provenance(
                "dnf_smoothed",
                params,
                cfg,
                cfg.c,
                mu_hat=list(mu_hat.mu),
                recovered=len(found),
                steps=result.steps,
                samples=ex.sample_count - s0,
                seconds=time.perf_counter() - t0,
            ),
            found,
        )

    return _amplify(attempt, lambda h, size: _empirical_error(h, ex, size), cfg, rng)


def learn_mdnf_prod(
    ex: ExampleOracle,
    cfg: LearnerConfig,
    rng=None,
    influences: dict | None = None,
) -> Hypothesis:
    """Monotone DNF over a known c-bounded product distribution from random examples.

    Variables whose influence estimate (accuracy gamma^2/3) falls below
    2 gamma^2/3 are eliminated; the Low Degree algorithm then runs on the
    survivors M only.  `influences` replaces the estimates (for injection tests).
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    mu = ex.mu
    n = mu.n
    c = mu.c_bound if cfg.c is None else cfg.c
    if c > mu.c_bound + 1e-12:
        raise ValueError(f"distribution is not {c}-bounded")
    params = learner_parameters(cfg.s, cfg.epsilon, c, n)
    gamma = params.gamma
    bound = mdnf_variable_bound(cfg.s, gamma, c)

    def attempt(r):
        t0 = time.perf_counter()
        s0 = ex.sample_count
        est = influences
        if est is None:
            est = estimate_influences(ex, gamma ** 2 / 3.0, cfg.phase_delta / 2.0)
        survivors = sorted(i for i, v in est.items() if v >= 2.0 * gamma ** 2 / 3.0)
        if len(survivors) > bound:
            raise ContractViolation(
                f"{len(survivors)} variables survived elimination, bound is {bound}"
            )
        found = low_degree(
            ex,
            RecoveryParams(
                gamma,
                cfg.phase_delta / 2.0,
                degree_cap=params.d_eff,
                variable_set=mask_of(survivors),
                backend=cfg.recovery_backend,
            ),
        )
        result = _construct(found, mu, params, cfg, r)
        return Hypothesis(
            result.chain,
            _provenance(
                "mdnf_prod" if not mu.is_uniform else "mdnf_uniform",
                params,
                cfg,
                c,
                variables=survivors,
                variable_bound=bound,
                influence_kappa=INFLUENCE_KAPPA,
                recovered=len(found),
                steps=result.steps,
                samples=ex.sample_count - s0,
                seconds=time.perf_counter() - t0,
            ),
            found,
        )

    return _amplify(attempt, lambda h, size: _empirical_error(h, ex, size), cfg, rng)


def learn_mdnf_uniform(ex: ExampleOracle, cfg: LearnerConfig, rng=None, influences=None) -> Hypothesis:
    """Uniform case: d = floor(log2(s/eps')), gamma = eps'/(2s + 1)."""
    if not ex.mu.is_uniform:
        raise ValueError("learn_mdnf_uniform needs the uniform distribution")
    if cfg.c not in (None, 1.0):
        raise ValueError("the uniform distribution is 1-bounded; leave c unset")
    return learn_mdnf_prod(ex, cfg, rng, influences)
