"""Bounded approximations of a target low-degree spectrum by clipped update chains.

Each step compares the chain's current spectrum against the target, picks the
smallest violating index and moves the chain toward it, clipping into [-1, 1].
The improper variant steps by the observed difference; the proper variant
steps by +-gamma so the pre-clip polynomial keeps integer weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ptflearn.bits import (
    EXACT_MAX_N,
    all_points,
    bit_indices,
    compress,
    expand,
    mask_of,
    popcount_array,
)
from ptflearn.boolcore import SparsePolynomial, project_unit, sign
from ptflearn.dist import ProductDistribution, basis_eval
from ptflearn.errors import ContractViolation
from ptflearn.oracles import MembershipOracle
from ptflearn.recovery import RecoveryParams, ekm_product
from ptflearn.spectrum import (
    SparseSpectrum,
    format_basis_header,
    mu_transform_dense,
    parse_basis_header,
    truth_table,
)

STOP_FACTOR = 3.5


def _basis(mu: ProductDistribution | None, n: int) -> ProductDistribution:
    return mu if mu is not None else ProductDistribution.uniform(n)


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if np.any(x < 0) or np.any(x >> n):
        raise ValueError(f"point does not fit in n={n}")
    return x


@dataclass(frozen=True)
class ClippedChain:
    """h_0 = 0, h_{t+1} = P1(h_t + c_t * phi_{a_t}); the value is h_T."""

    n: int
    updates: tuple = ()
    mu: ProductDistribution | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.mu is not None and self.mu.is_uniform:
            object.__setattr__(self, "mu", None)
        object.__setattr__(self, "updates", tuple((int(a), float(c)) for a, c in self.updates))

    @property
    def variables(self) -> list[int]:
        return bit_indices(mask_of(i for a, _ in self.updates for i in bit_indices(a))) or [0]

    def __len__(self) -> int:
        return len(self.updates)

    def local_table(self) -> np.ndarray:
        """Chain values over the 2^|V| assignments of its own variables V."""
        if "table" not in self._cache:
            v = self.variables
            if len(v) > EXACT_MAX_N:
                raise ValueError("chain touches too many variables for a dense table")
            sub = _basis(self.mu, self.n).sub(v)
            pts = all_points(len(v))
            h = np.zeros(len(pts))
            for a, c in self.updates:
                h = np.clip(h + c * basis_eval(sub, compress(a, v), pts), -1.0, 1.0)
            self._cache["table"] = h
        return self._cache["table"]

    def __call__(self, x):
        x = _as_points(x, self.n)
        if len(self.variables) <= EXACT_MAX_N:
            out = self.local_table()[compress(x, self.variables)]
        else:
            basis = _basis(self.mu, self.n)
            out = np.zeros(x.shape)
            for a, c in self.updates:
                out = np.clip(out + c * basis_eval(basis, a, x), -1.0, 1.0)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ProperChain:
    """g' = gamma * sum_a k_a phi_a with integer k_a; hypothesis P1(g'), classifier sign(g')."""

    n: int
    weights: dict = field(default_factory=dict)
    gamma: float = 0.1
    mu: ProductDistribution | None = None

    def __post_init__(self):
        if self.mu is not None and self.mu.is_uniform:
            object.__setattr__(self, "mu", None)
        object.__setattr__(
            self, "weights", {int(a): int(k) for a, k in self.weights.items() if k != 0}
        )

    @property
    def gprime(self) -> SparsePolynomial:
        return SparsePolynomial(
            self.n, {a: self.gamma * k for a, k in self.weights.items()}, self.mu
        )

    @property
    def total_weight(self) -> int:
        return sum(abs(k) for k in self.weights.values())

    def __call__(self, x):
        return project_unit(self.gprime(x))

    def classify(self, x):
        return sign(self.gprime(x))


@dataclass
class ConstructionResult:
    chain: ClippedChain | ProperChain
    steps: int
    trace: list


def step_cap(gamma: float, proper: bool) -> int:
    return math.ceil(1.0 / (2 * gamma * gamma)) if proper else math.ceil(4.0 / (7 * gamma * gamma))


def potential(f, g, gprime, mu: ProductDistribution | None, n: int) -> float:
    """E_mu[(f - g)^2] + 2 E_mu[(f - g)(g - g')] by enumeration (n <= 24).

    Each of f, g, gprime is a callable on point arrays or a truth table.
    """
    pts = all_points(n)
    tf, tg, tp = (
        np.asarray(h, dtype=float) if isinstance(h, np.ndarray) else np.asarray(h(pts), dtype=float)
        for h in (f, g, gprime)
    )
    w = _basis(mu, n).probabilities()
    return float(np.dot(w, (tf - tg) * (tf + tg - 2.0 * tp)))


def _chain_spectrum_sampled(h, sub, gamma, delta, rng) -> np.ndarray:
    k = sub.n
    mq = MembershipOracle(lambda p: h[p], k)
    found = ekm_product(mq, sub, RecoveryParams(gamma / 2.0, delta, backend="sampled"), rng)
    out = np.zeros(1 << k)
    for a, v in found.items():
        out[a] = v
    return out


def _construct(
    target: SparseSpectrum,
    mu: ProductDistribution | None,
    gamma: float,
    delta: float,
    degree_cap: int | None,
    backend: str,
    proper: bool,
    rng,
    reference: Callable | None,
) -> ConstructionResult:
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma={gamma} outside (0, 1]")
    if backend not in ("exact", "sampled"):
        raise ValueError(f"unknown backend {backend!r}")
    n = target.n
    basis = _basis(mu, n)
    if target.mu != (None if basis.is_uniform else basis):
        raise ValueError("target spectrum is not in the requested basis")
    rng = np.random.default_rng(rng)
    entries = {
        a: v
        for a, v in target.items()
        if degree_cap is None or bin(a).count("1") <= degree_cap
    }
    # a constant-only target still gets one coordinate so local tables are nonempty
    variables = bit_indices(mask_of(i for a in entries for i in bit_indices(a))) or [0]
    k = len(variables)
    if k > EXACT_MAX_N:
        raise ValueError(f"target touches {k} variables; at most {EXACT_MAX_N} supported")
    sub = basis.sub(variables)
    pts = all_points(k)
    goal = np.zeros(1 << k)
    for a, v in entries.items():
        goal[compress(a, variables)] = v
    in_scope = (
        np.ones(1 << k, dtype=bool)
        if degree_cap is None
        else popcount_array(pts) <= degree_cap
    )

    cap = step_cap(gamma, proper)
    step_delta = delta / cap
    h = np.zeros(1 << k)
    gp = np.zeros(1 << k)
    updates: list = []
    ints: dict = {}
    trace: list = []

    if reference is not None:
        if n > EXACT_MAX_N:
            raise ValueError("reference tracking needs n <= 24")
        ref = truth_table(reference, n)
        idx = compress(all_points(n), variables)
        w = basis.probabilities()

    steps = 0
    while True:
        if steps == 0:
            current = np.zeros(1 << k)
        elif backend == "exact":
            current = mu_transform_dense(h, sub)
        else:
            current = _chain_spectrum_sampled(h, sub, gamma, step_delta, rng)
        diff = np.where(in_scope, goal - current, 0.0)
        record = {"step": steps, "max_diff": float(np.max(np.abs(diff)))}
        if reference is not None:
            g_full, p_full = h[idx], (gp if proper else h)[idx]
            record["l2"] = float(np.dot(w, (ref - g_full) ** 2))
            record["potential"] = float(np.dot(w, (ref - g_full) * (ref + g_full - 2 * p_full)))
        violating = np.flatnonzero(np.abs(diff) > STOP_FACTOR * gamma)
        if violating.size == 0:
            trace.append(record)
            break
        if steps >= cap:
            raise ContractViolation(
                f"{steps} steps without meeting the stop rule (cap {cap}); "
                "the spectrum estimates violated their accuracy contract"
            )
        a = int(violating[0])
        phi = basis_eval(sub, a, pts)
        record["mask"] = int(expand(a, variables))
        record["diff"] = float(diff[a])
        if proper:
            step = 1 if diff[a] > 0 else -1
            ints[a] = ints.get(a, 0) + step
            gp = gp + step * gamma * phi
            h = np.clip(gp, -1.0, 1.0)
        else:
            updates.append((int(expand(a, variables)), float(diff[a])))
            h = np.clip(h + diff[a] * phi, -1.0, 1.0)
        trace.append(record)
        steps += 1

    if proper:
        chain = ProperChain(
            n, {int(expand(a, variables)): c for a, c in ints.items()}, gamma, mu
        )
    else:
        chain = ClippedChain(n, tuple(updates), mu)
    return ConstructionResult(chain, steps, trace)


def ptf_approx(
    target: SparseSpectrum,
    gamma: float,
    delta: float = 0.05,
    degree_cap: int | None = None,
    backend: str = "exact",
    rng=None,
    reference: Callable | None = None,
) -> ConstructionResult:
    """Parity-basis chain g with ||f_hat(B_d) - g_hat(B_d)||_inf <= 5 gamma."""
    if target.mu is not None:
        raise ValueError("ptf_approx works in the parity basis; use ptf_approx_prod")
    return _construct(target, None, gamma, delta, degree_cap, backend, False, rng, reference)


def ptf_approx_prod(
    target: SparseSpectrum,
    mu: ProductDistribution,
    gamma: float,
    delta: float = 0.05,
    degree_cap: int | None = None,
    backend: str = "exact",
    rng=None,
    reference: Callable | None = None,
) -> ConstructionResult:
    return _construct(target, mu, gamma, delta, degree_cap, backend, False, rng, reference)


def ptf_construct_prod(
    target: SparseSpectrum,
    mu: ProductDistribution,
    gamma: float,
    delta: float = 0.05,
    degree_cap: int | None = None,
    backend: str = "exact",
    rng=None,
    reference: Callable | None = None,
) -> ConstructionResult:
    """Proper variant: integer weights on the pre-clip polynomial."""
    return _construct(target, mu, gamma, delta, degree_cap, backend, True, rng, reference)


# Chain file: a header line "<basis header> kind=clipped" or
# "<basis header> kind=proper gamma=<g>", then one "<mask-hex> <coefficient>" line
# per update (clipped, in application order) or per integer weight (proper).


def format_chain(chain: ClippedChain | ProperChain) -> str:
    head = format_basis_header(chain.n, chain.mu)
    if isinstance(chain, ProperChain):
        lines = [f"{head} kind=proper gamma={chain.gamma!r}"]
        lines += [f"{a:#x} {k}" for a, k in sorted(chain.weights.items())]
    else:
        lines = [f"{head} kind=clipped"]
        lines += [f"{a:#x} {c!r}" for a, c in chain.updates]
    return "\n".join(lines) + "\n"


def parse_chain(text: str) -> ClippedChain | ProperChain:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty chain file")
    n, mu, fields = parse_basis_header(lines[0])
    rows = [ln.split() for ln in lines[1:]]
    kind = fields.get("kind")
    if kind == "proper":
        return ProperChain(n, {int(a, 16): int(k) for a, k in rows}, float(fields["gamma"]), mu)
    if kind == "clipped":
        return ClippedChain(n, tuple((int(a, 16), float(c)) for a, c in rows), mu)
    raise ValueError(f"unknown chain kind {kind!r}")
