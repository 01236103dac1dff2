"""Sign-representing polynomials for DNFs and thresholds of terms, term L1 norms,
and exact checks of the error-versus-spectrum-gap bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ptflearn.bits import EXACT_MAX_N, all_points, bit_indices, expand, popcount_array
from ptflearn.boolcore import DnfFormula, SparsePolynomial, Term, TermThresholdFunction, eval_term
from ptflearn.dist import ProductDistribution
from ptflearn.errors import ContractViolation
from ptflearn.spectrum import mu_transform_dense

TOL = 1e-9
VERIFY_MAX_N = 20


def _basis(mu: ProductDistribution | None, n: int) -> ProductDistribution:
    return mu if mu is not None else ProductDistribution.uniform(n)


def degree_for(weight: float, c: float, eps: float) -> int:
    """floor(log(weight/eps) / log(2/(2-c))); both logs in base 2."""
    if not 0 < c <= 1 or eps <= 0 or weight <= 0:
        raise ValueError("need c in (0, 1], eps > 0 and a positive weight")
    ratio = math.log2(weight / eps) / math.log2(2.0 / (2.0 - c))
    return max(0, math.floor(ratio + 1e-12))


def dnf_degree(s: int, c: float, eps: float) -> int:
    return degree_for(s, c, eps)


def _degree_is_enough(d: int, weight: float, c: float, eps: float) -> bool:
    # terms longer than d have Pr[t = 1] <= (1 - c/2)^(d+1) <= eps / weight
    return (1.0 - c / 2.0) ** (d + 1) <= eps / weight * (1 + 1e-12)


def term_probability(t: Term, mu: ProductDistribution) -> float:
    """Pr_mu[t(x) = 1]."""
    out = 1.0
    for i in bit_indices(t.positives):
        out *= mu.p_plus[i]
    for i in bit_indices(t.negatives):
        out *= mu.p_minus[i]
    return float(out)


def term_spectrum(t: Term, mu: ProductDistribution) -> dict[int, float]:
    """Exact mu-coefficients of the {0,1} term, by transform over its own variables."""
    variables = bit_indices(t.variables)
    if not variables:
        return {0: 1.0}
    if len(variables) > EXACT_MAX_N:
        raise ValueError("term too long for an exact transform")
    local = Term(
        sum(1 << j for j, v in enumerate(variables) if t.positives >> v & 1),
        sum(1 << j for j, v in enumerate(variables) if t.negatives >> v & 1),
    )
    k = len(variables)
    table = eval_term(local, all_points(k))
    values = mu_transform_dense(np.atleast_1d(table), mu.sub(variables))
    return {int(expand(a, variables)): float(v) for a, v in enumerate(values) if v != 0.0}


def term_spectrum_closed_form(t: Term, mu: ProductDistribution) -> dict[int, float]:
    """Coefficient of b (subset of the term's variables): prod over j not in b of
    (1 +- mu_j)/2, times prod over j in b of +-sigma_j/2."""
    out = {}
    variables = bit_indices(t.variables)
    for r in range(len(variables) + 1):
        for chosen in itertools.combinations(variables, r):
            v = 1.0
            for j in variables:
                pos = bool(t.positives >> j & 1)
                if j in chosen:
                    v *= (mu.sigma[j] if pos else -mu.sigma[j]) / 2.0
                else:
                    v *= (1.0 + mu.mu_array[j] if pos else 1.0 - mu.mu_array[j]) / 2.0
            out[sum(1 << j for j in chosen)] = v
    return out


def term_mu_l1(t: Term, mu: ProductDistribution) -> float:
    """||t_hat_mu||_1 of the {0,1} term, checked against (2 - c)^(len/2)."""
    value = math.fsum(abs(v) for v in term_spectrum(t, mu).values())
    bound = (2.0 - mu.c_bound) ** (len(t) / 2.0)
    if value > bound + TOL:
        raise ContractViolation(f"term L1 {value} exceeds (2-c)^(d/2) = {bound}")
    return value


def _add(acc: dict, entries: dict, scale: float) -> None:
    for a, v in entries.items():
        acc[a] = acc.get(a, 0.0) + scale * v


def dnf_sign_polynomial(f: DnfFormula, mu: ProductDistribution | None = None) -> SparsePolynomial:
    """p = 2 * sum_i t_i - 1, which 1-sign-represents f."""
    basis = _basis(mu, f.n)
    acc: dict = {0: -1.0}
    for t in f.terms:
        _add(acc, term_spectrum(t, basis), 2.0)
    return SparsePolynomial(f.n, acc, mu)


@dataclass(frozen=True)
class Truncation:
    poly: SparsePolynomial
    l1: float
    l1_bound: float
    error: float
    dropped: tuple


def truncated_dnf_polynomial(
    f: DnfFormula, mu: ProductDistribution | None, d: int, eps: float | None = None
) -> Truncation:
    """p' = 2 * sum over terms of length <= d of t_i, minus 1.

    `error` is the exact E_mu|p' - p| = 2 * sum of Pr[t_i = 1] over dropped terms.
    With `eps`, also checks error <= 2 eps whenever d is large enough for (s, c, eps).
    """
    basis = _basis(mu, f.n)
    c = basis.c_bound
    acc: dict = {0: -1.0}
    dropped = []
    for i, t in enumerate(f.terms):
        if len(t) > d:
            dropped.append(i)
        else:
            _add(acc, term_spectrum(t, basis), 2.0)
    poly = SparsePolynomial(f.n, acc, mu)
    error = 2.0 * math.fsum(term_probability(f.terms[i], basis) for i in dropped)
    bound = 2.0 * (2.0 - c) ** (d / 2.0) * f.s + 1.0
    if poly.l1 > bound + TOL:
        raise ContractViolation(f"truncated L1 {poly.l1} exceeds {bound}")
    if eps is not None and _degree_is_enough(d, f.s, c, eps) and error > 2 * eps + TOL:
        raise ContractViolation(f"truncation error {error} exceeds 2*eps = {2 * eps}")
    return Truncation(poly, poly.l1, bound, error, tuple(dropped))


def check_sign_representation(F: TermThresholdFunction) -> None:
    """The linear form q(y) = w.y + w_0 must satisfy |q(y)| >= 1 on all of {-1,1}^s."""
    if F.s > VERIFY_MAX_N:
        raise ValueError("too many terms for an exhaustive check")
    w = np.asarray(F.weights)
    ys = np.where((all_points(F.s)[:, None] >> np.arange(F.s)) & 1, 1.0, -1.0)
    q = ys @ w + F.bias
    if np.min(np.abs(q)) < 1.0 - 1e-12:
        raise ValueError("weights do not 1-sign-represent the threshold function")


def threshold_truncated_polynomial(
    F: TermThresholdFunction, mu: ProductDistribution | None, d: int, eps: float | None = None
) -> Truncation:
    """p' = sum_{i not in M} w_i u_i + w_0 - sum_{i in M} w_i, M = terms longer than d."""
    check_sign_representation(F)
    basis = _basis(mu, F.n)
    c = basis.c_bound
    acc: dict = {0: F.bias}
    dropped = []
    for i, (w, t) in enumerate(zip(F.weights, F.terms)):
        if len(t) > d:
            dropped.append(i)
            acc[0] -= w
        else:
            _add(acc, term_spectrum(t, basis), 2.0 * w)
            acc[0] -= w
    poly = SparsePolynomial(F.n, acc, mu)
    if dropped and F.n <= EXACT_MAX_N:
        x = all_points(F.n)
        diff = sum(2.0 * F.weights[i] * eval_term(F.terms[i], x) for i in dropped)
        error = float(np.dot(basis.probabilities(), np.abs(diff)))
    else:
        error = math.fsum(
            2.0 * abs(F.weights[i]) * term_probability(F.terms[i], basis) for i in dropped
        )
    w1 = F.total_weight
    bound = w1 * (2.0 * (2.0 - c) ** (d / 2.0) + 1.0)
    if poly.l1 > bound + TOL:
        raise ContractViolation(f"truncated L1 {poly.l1} exceeds {bound}")
    if eps is not None and _degree_is_enough(d, w1, c, eps) and error > 2 * eps + TOL:
        raise ContractViolation(f"truncation error {error} exceeds 2*eps = {2 * eps}")
    return Truncation(poly, poly.l1, bound, error, tuple(dropped))


# Bound families ---------------------------------------------------------------


@dataclass(frozen=True)
class DnfBound:
    """E|f - g| <= (2 (2-c)^(d/2) s + 1) * gap_d + 4 eps for an s-term DNF f."""

    s: int
    c: float
    eps: float
    name: str = "dnf"


@dataclass(frozen=True)
class UniformDnfBound:
    """E|f - g| <= (2s + 1) * ||f_hat - g_hat||_inf under the uniform distribution."""

    s: int
    name: str = "dnf_uniform"


@dataclass(frozen=True)
class LtfBound:
    """E|f - g| <= (2 (2-c)^(d/2) + 1) * W1 * gap_d + 4 eps for a threshold of terms."""

    w1: float
    c: float
    eps: float
    name: str = "ltf"


@dataclass(frozen=True)
class ExactLemmaBound:
    """E|f - g| <= gap_d * ||p'_hat(B_d)||_1 + 2 E|p' - p| for a p that 1-sign-represents f.

    Without `p_prime` this is the p' = p special case.
    """

    p: SparsePolynomial
    p_prime: SparsePolynomial | None = None
    name: str = "exact-lemma"


BOUND_CSV_COLUMNS = ["family", "s", "w1", "c", "d", "eps", "gap", "lhs", "rhs", "slack", "passed"]


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= -TOL

    def row(self) -> dict:
        out = {k: self.params.get(k, "") for k in BOUND_CSV_COLUMNS}
        out.update(lhs=self.lhs, rhs=self.rhs, slack=self.slack, passed=self.passed)
        return out


def _table(h, n: int) -> np.ndarray:
    if isinstance(h, np.ndarray):
        if h.shape != (1 << n,):
            raise ValueError("table has the wrong length")
        return h.astype(float)
    return np.asarray(h(all_points(n)), dtype=float)


def spectrum_gap(tf: np.ndarray, tg: np.ndarray, mu: ProductDistribution | None, d: int | None) -> float:
    """||f_hat_mu(B_d) - g_hat_mu(B_d)||_inf from two truth tables."""
    n = int(np.log2(len(tf)))
    diff = np.abs(mu_transform_dense(tf - tg, mu))
    if d is not None and d < n:
        diff = diff[popcount_array(all_points(n)) <= d]
    return float(diff.max())


def verify_error_bound(
    f: Callable | np.ndarray,
    g: Callable | np.ndarray,
    n: int,
    mu: ProductDistribution | None,
    d: int | None,
    family,
) -> BoundReport:
    """Both sides of the chosen error bound, computed exactly by enumeration."""
    if n > VERIFY_MAX_N:
        raise ValueError(f"exact verification needs n <= {VERIFY_MAX_N}")
    basis = _basis(mu, n)
    tf, tg = _table(f, n), _table(g, n)
    if np.any(np.abs(tg) > 1.0 + 1e-12):
        raise ValueError("g must be bounded in [-1, 1]")
    w = basis.probabilities()
    lhs = float(np.dot(w, np.abs(tf - tg)))
    params = {"family": family.name, "d": d}

    if isinstance(family, UniformDnfBound):
        if mu is not None and not mu.is_uniform:
            raise ValueError("the uniform DNF family needs the uniform distribution")
        gap = spectrum_gap(tf, tg, None, None)
        rhs = (2 * family.s + 1) * gap
        params.update(s=family.s, c=1.0, d=n)
    elif isinstance(family, (DnfBound, LtfBound)):
        if family.c > basis.c_bound + 1e-12:
            raise ValueError(f"distribution is not {family.c}-bounded")
        weight = family.s if isinstance(family, DnfBound) else family.w1
        if d is None:
            d = degree_for(weight, family.c, family.eps)
        if not _degree_is_enough(d, weight, family.c, family.eps):
            raise ValueError(f"d={d} is too small for the requested eps")
        gap = spectrum_gap(tf, tg, mu, d)
        grow = (2.0 - family.c) ** (d / 2.0)
        if isinstance(family, DnfBound):
            rhs = (2.0 * grow * family.s + 1.0) * gap + 4.0 * family.eps
            params.update(s=family.s)
        else:
            rhs = (2.0 * grow + 1.0) * family.w1 * gap + 4.0 * family.eps
            params.update(w1=family.w1)
        params.update(c=family.c, eps=family.eps, d=d)
    elif isinstance(family, ExactLemmaBound):
        p = family.p
        pp = family.p_prime or p
        for poly in (p, pp):
            if (poly.mu is None) != (mu is None or mu.is_uniform) or (
                poly.mu is not None and poly.mu != mu
            ):
                raise ValueError("polynomial basis differs from the distribution")
        tp = _table(p, n)
        if np.any(np.abs(tp) < 1.0 - 1e-9) or np.any(np.where(tp >= 0, 1.0, -1.0) != tf):
            raise ValueError("p does not 1-sign-represent f")
        if d is None:
            d = pp.degree
        if pp.degree > d:
            raise ValueError("p' has degree above d")
        gap = spectrum_gap(tf, tg, mu, d)
        rhs = gap * pp.l1 + 2.0 * float(np.dot(w, np.abs(_table(pp, n) - tp)))
    else:
        raise TypeError(f"unknown bound family {family!r}")
    params.update(gap=gap, d=d)
    return BoundReport(lhs, rhs, params)
