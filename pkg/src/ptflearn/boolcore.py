"""Boolean concepts over {-1,1}^n and their evaluation.

Every concept is a vectorized callable: it takes an int64 array of point masks
and returns a float array of values.  Scalars are accepted and returned as
Python floats.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from ptflearn.bits import bit_indices, check_dimension, check_mask, popcount
from ptflearn.dist import ProductDistribution, basis_eval


def _as_points(x, n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64)
    if np.any(arr < 0) or np.any(arr >> n):
        raise ValueError(f"point does not fit in n={n}")
    return arr


def _out(values: np.ndarray):
    return float(values) if values.ndim == 0 else values


def sign(values):
    """sign with sign(0) = +1, the toolkit-wide convention."""
    v = np.asarray(values, dtype=float)
    return _out(np.where(v >= 0.0, 1.0, -1.0))


def project_unit(v):
    """P_1: identity on [-1, 1], sign(v) outside."""
    arr = np.asarray(v, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError("cannot project NaN")
    return _out(np.clip(arr, -1.0, 1.0))


@dataclass(frozen=True)
class Term:
    """AND of literals: `positives` un-negated, `negatives` negated."""

    positives: int = 0
    negatives: int = 0

    def __post_init__(self):
        if self.positives < 0 or self.negatives < 0:
            raise ValueError("negative mask")
        if self.positives & self.negatives:
            raise ValueError("a variable appears both negated and un-negated")

    @property
    def variables(self) -> int:
        return self.positives | self.negatives

    def __len__(self) -> int:
        return popcount(self.positives) + popcount(self.negatives)


def eval_term(t: Term, x, n: int | None = None):
    """{0,1} value of the term at x."""
    if n is not None:
        check_mask(t.variables, n)
        x = _as_points(x, n)
    else:
        x = np.asarray(x, dtype=np.int64)
    hit = ((x & t.positives) == t.positives) & ((x & t.negatives) == 0)
    return _out(hit.astype(float))


@dataclass(frozen=True)
class DnfFormula:
    n: int
    terms: tuple[Term, ...]

    def __post_init__(self):
        check_dimension(self.n)
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("a DNF needs at least one term")
        for t in self.terms:
            check_mask(t.variables, self.n)

    @property
    def s(self) -> int:
        return len(self.terms)

    @property
    def monotone(self) -> bool:
        return all(t.negatives == 0 for t in self.terms)

    @property
    def max_len(self) -> int:
        return max(len(t) for t in self.terms)

    def __call__(self, x):
        return eval_dnf(self, x)

    def __str__(self) -> str:
        return format_dnf(self)


def eval_dnf(f: DnfFormula, x):
    x = _as_points(x, f.n)
    hit = np.zeros(x.shape, dtype=bool)
    for t in f.terms:
        hit |= ((x & t.positives) == t.positives) & ((x & t.negatives) == 0)
    return _out(np.where(hit, 1.0, -1.0))


@dataclass(frozen=True)
class TermThresholdFunction:
    """f(x) = sign(sum_i w_i u_i(x) + w_0) where u_i = 2 t_i - 1 are +-1 terms."""

    n: int
    terms: tuple[Term, ...]
    weights: tuple[float, ...]
    bias: float = 0.0

    def __post_init__(self):
        check_dimension(self.n)
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.terms) != len(self.weights) or not self.terms:
            raise ValueError("need one weight per term and at least one term")
        for t in self.terms:
            check_mask(t.variables, self.n)

    @property
    def s(self) -> int:
        return len(self.terms)

    @property
    def total_weight(self) -> float:
        """||w||_1 including the bias; equals W_1^1(h) for a minimal representation."""
        return sum(abs(w) for w in self.weights) + abs(self.bias)

    def margin(self, x):
        """q(u(x)) = sum_i w_i u_i(x) + w_0."""
        x = _as_points(x, self.n)
        q = np.full(x.shape, self.bias)
        for w, t in zip(self.weights, self.terms):
            q = q + w * (2.0 * eval_term(t, x) - 1.0)
        return _out(q)

    def __call__(self, x):
        return sign(self.margin(x))


@dataclass(frozen=True)
class SparsePolynomial:
    """p(x) = sum_a coeffs[a] * basis_a(x); parity basis when mu is None."""

    n: int
    coeffs: dict[int, float] = field(default_factory=dict)
    mu: ProductDistribution | None = None

    def __post_init__(self):
        check_dimension(self.n)
        if self.mu is not None and self.mu.n != self.n:
            raise ValueError("basis distribution has the wrong dimension")
        if self.mu is not None and self.mu.is_uniform:
            object.__setattr__(self, "mu", None)
        clean = {}
        for a, v in self.coeffs.items():
            check_mask(int(a), self.n)
            if v != 0.0:
                clean[int(a)] = float(v)
        object.__setattr__(self, "coeffs", clean)

    @property
    def degree(self) -> int:
        return max((popcount(a) for a in self.coeffs), default=0)

    @property
    def l1(self) -> float:
        return math.fsum(abs(v) for v in self.coeffs.values())

    def __call__(self, x):
        return eval_sparse_poly(self, x)


def eval_sparse_poly(p: SparsePolynomial, x, mu: ProductDistribution | None = None):
    """Exact sum of stored coefficients times basis values at x.

    `mu`, when passed, must name the polynomial's own basis.
    """
    if mu is not None and (p.mu is None or p.mu != mu):
        raise ValueError("basis of the polynomial does not match the given distribution")
    x = _as_points(x, p.n)
    basis = p.mu if p.mu is not None else ProductDistribution.uniform(p.n)
    total = np.zeros(x.shape)
    for a, v in p.coeffs.items():
        total = total + v * basis_eval(basis, a, x)
    return _out(total)


def random_dnf(n: int, s: int, max_len: int, monotone: bool = False, seed=None) -> DnfFormula:
    """s terms; each length uniform in [1, max_len] over distinct variables."""
    check_dimension(n)
    if s < 1 or not 1 <= max_len <= n:
        raise ValueError(f"infeasible DNF shape n={n}, s={s}, max_len={max_len}")
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(s):
        length = int(rng.integers(1, max_len + 1))
        chosen = rng.choice(n, size=length, replace=False)
        pos = neg = 0
        for v in chosen:
            if monotone or rng.random() < 0.5:
                pos |= 1 << int(v)
            else:
                neg |= 1 << int(v)
        terms.append(Term(pos, neg))
    return DnfFormula(n, tuple(terms))


# Text format: "n=<int>; <term> | <term> ..." with terms like "0&!3&5".
# Variable indices are 0-based bit positions; the empty term is "true".

_HEADER = re.compile(r"^\s*n\s*=\s*(\d+)\s*;(.*)$", re.S)


def format_term(t: Term) -> str:
    if not t.variables:
        return "true"
    return "&".join(
        ("" if t.positives >> i & 1 else "!") + str(i) for i in bit_indices(t.variables)
    )


def format_dnf(f: DnfFormula) -> str:
    return f"n={f.n}; " + " | ".join(format_term(t) for t in f.terms)


def parse_dnf(text: str) -> DnfFormula:
    m = _HEADER.match(text.strip())
    if not m:
        raise ValueError("DNF text must start with 'n=<int>;'")
    n = int(m.group(1))
    terms = []
    for chunk in m.group(2).split("|"):
        chunk = chunk.strip()
        if chunk == "true":
            terms.append(Term())
            continue
        pos = neg = 0
        for lit in chunk.split("&"):
            lit = lit.strip()
            negated = lit.startswith("!")
            body = lit[1:].strip() if negated else lit
            if not body.isdigit():
                raise ValueError(f"bad literal {lit!r}")
            bit = 1 << int(body)
            if (pos | neg) & bit:
                raise ValueError(f"variable {body} repeated in a term")
            if negated:
                neg |= bit
            else:
                pos |= bit
        terms.append(Term(pos, neg))
    return DnfFormula(n, tuple(terms))
