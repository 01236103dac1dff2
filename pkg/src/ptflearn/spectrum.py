"""Exact Fourier transforms over the parity basis and product bases.

All transforms are Kronecker products of per-coordinate 2x2 maps, so each one
runs as an O(k 2^k) butterfly over the last axis of an array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ptflearn.bits import EXACT_MAX_N, all_points, check_mask, compress, popcount, popcount_array
from ptflearn.dist import ProductDistribution

ZERO_DROP = 1e-12
BRUTE_FORCE_MAX_N = 13


def _normalize_basis(mu: ProductDistribution | None) -> ProductDistribution | None:
    return None if mu is None or mu.is_uniform else mu


@dataclass(frozen=True)
class SparseSpectrum:
    """Succinct coefficient vector; mu None means the parity basis."""

    n: int
    entries: dict[int, float] = field(default_factory=dict)
    mu: ProductDistribution | None = None

    def __post_init__(self):
        mu = _normalize_basis(self.mu)
        if mu is not None and mu.n != self.n:
            raise ValueError("basis distribution has the wrong dimension")
        object.__setattr__(self, "mu", mu)
        clean = {}
        for a, v in self.entries.items():
            a = check_mask(int(a), self.n)
            if v != 0.0:
                clean[a] = float(v)
        object.__setattr__(self, "entries", clean)

    @property
    def basis(self) -> str:
        return "uniform" if self.mu is None else "product"

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, a: int) -> float:
        return self.entries.get(a, 0.0)

    def items(self):
        return sorted(self.entries.items())


@dataclass(frozen=True)
class DenseSpectrum:
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.n > EXACT_MAX_N or len(self.values) != 1 << self.n:
            raise ValueError("dense spectrum needs exactly 2^n values, n <= 24")

    def to_sparse(self, degree_cap: int | None = None) -> SparseSpectrum:
        return to_sparse(self.values, self.n, None, degree_cap)


def kron_apply(values: np.ndarray, mats) -> np.ndarray:
    """Apply the Kronecker product of 2x2 maps (one per coordinate) along the last axis.

    mats[i][b][x] maps input bit x of coordinate i to output bit b.
    """
    values = np.asarray(values, dtype=float)
    k = len(mats)
    if values.shape[-1] != 1 << k:
        raise ValueError(f"last axis has length {values.shape[-1]}, expected 2^{k}")
    lead = values.shape[:-1]
    out = values
    for i, m in enumerate(mats):
        v = out.reshape(lead + (1 << (k - i - 1), 2, 1 << i))
        lo = v[..., 0, :]
        hi = v[..., 1, :]
        out = np.stack([m[0][0] * lo + m[0][1] * hi, m[1][0] * lo + m[1][1] * hi], axis=-2)
    return out.reshape(values.shape)


def forward_maps(mu: ProductDistribution | None, k: int | None = None):
    """Per-coordinate maps f -> (E[f], E[f phi_i])."""
    if mu is None or mu.is_uniform:
        return [((0.5, 0.5), (-0.5, 0.5))] * (k if mu is None else mu.n)
    return [
        ((pm, pp), (pm * fm, pp * fp))
        for pm, pp, fm, fp in zip(mu.p_minus, mu.p_plus, mu.phi_minus, mu.phi_plus)
    ]


def inverse_maps(mu: ProductDistribution | None, k: int | None = None):
    """Per-coordinate maps coefficients -> values."""
    if mu is None or mu.is_uniform:
        return [((1.0, -1.0), (1.0, 1.0))] * (k if mu is None else mu.n)
    return [((1.0, fm), (1.0, fp)) for fm, fp in zip(mu.phi_minus, mu.phi_plus)]


def basis_sum_maps(mu: ProductDistribution | None, k: int | None = None):
    """Per-coordinate maps v -> (sum v, sum v phi_i), unweighted."""
    if mu is None or mu.is_uniform:
        return [((1.0, 1.0), (-1.0, 1.0))] * (k if mu is None else mu.n)
    return [((1.0, 1.0), (fm, fp)) for fm, fp in zip(mu.phi_minus, mu.phi_plus)]


def _check_table(table) -> tuple[np.ndarray, int]:
    table = np.asarray(table, dtype=float)
    size = len(table)
    n = size.bit_length() - 1
    if size < 2 or size != 1 << n:
        raise ValueError(f"table length {size} is not a power of two >= 2")
    if n > EXACT_MAX_N:
        raise ValueError(f"n={n} exceeds the exact-transform limit {EXACT_MAX_N}")
    return table, n


def fwht(truth_table) -> DenseSpectrum:
    """Parity-basis coefficients 2^-n sum_x f(x) chi_a(x) for every a."""
    table, n = _check_table(truth_table)
    return DenseSpectrum(n, kron_apply(table, forward_maps(None, n)))


def inverse_fwht(spectrum: DenseSpectrum) -> np.ndarray:
    return kron_apply(spectrum.values, inverse_maps(None, spectrum.n))


def mu_transform_dense(table, mu: ProductDistribution | None) -> np.ndarray:
    """All 2^n coefficients E_mu[f phi_{mu,a}] of a truth table."""
    table, n = _check_table(table)
    if mu is not None and mu.n != n:
        raise ValueError("distribution and table disagree on n")
    return kron_apply(table, forward_maps(mu, n))


def inverse_mu_transform(values, mu: ProductDistribution | None) -> np.ndarray:
    values, n = _check_table(values)
    return kron_apply(values, inverse_maps(mu, n))


def to_sparse(
    values: np.ndarray,
    n: int,
    mu: ProductDistribution | None,
    degree_cap: int | None = None,
    tol: float = ZERO_DROP,
) -> SparseSpectrum:
    keep = np.abs(values) >= tol
    if degree_cap is not None and degree_cap < n:
        keep &= popcount_array(all_points(n)) <= degree_cap
    idx = np.flatnonzero(keep)
    return SparseSpectrum(n, dict(zip(idx.tolist(), values[idx].tolist())), mu)


def truth_table(f: Callable, n: int) -> np.ndarray:
    return np.asarray(f(all_points(n)), dtype=float)


def exact_mu_transform(
    f: Callable, mu: ProductDistribution, degree_cap: int | None = None
) -> SparseSpectrum:
    """Exact mu-Fourier coefficients of f, entries below 1e-12 dropped."""
    if mu.n > EXACT_MAX_N:
        raise ValueError(f"n={mu.n} exceeds the exact-transform limit {EXACT_MAX_N}")
    values = mu_transform_dense(truth_table(f, mu.n), mu)
    return to_sparse(values, mu.n, mu, degree_cap)


def brute_force_transform(table, mu: ProductDistribution | None = None) -> np.ndarray:
    """O(4^n) reference: sum_x Pr[x] f(x) phi_a(x) for every a, via the full basis matrix."""
    table, n = _check_table(table)
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute-force transform holds a 4^n matrix; n <= {BRUTE_FORCE_MAX_N}")
    mu = mu or ProductDistribution.uniform(n)
    x = all_points(n)
    prob = mu.probabilities()
    bits = (x[:, None] >> np.arange(n)) & 1
    factor = np.where(bits == 1, mu.phi_plus, mu.phi_minus)  # (2^n points, n)
    # row a of phi holds phi_a at every point; rows with bit i set are the
    # rows below 2^i times coordinate i's factor
    phi = np.ones((1 << n, 1 << n))
    for i in range(n):
        phi[1 << i : 2 << i] = phi[: 1 << i] * factor[:, i]
    return phi @ (prob * table)


def norms(v: SparseSpectrum) -> tuple[int, float, float, float]:
    """(l0, l1, l2, linf) over stored entries."""
    vals = [abs(x) for x in v.entries.values()]
    if not vals:
        return 0, 0.0, 0.0, 0.0
    return len(vals), math.fsum(vals), math.sqrt(math.fsum(x * x for x in vals)), max(vals)


def _same_basis(u: SparseSpectrum, v: SparseSpectrum) -> None:
    if u.n != v.n or u.mu != v.mu:
        raise ValueError("spectra live in different bases or dimensions")


def diff_inf_norm(u: SparseSpectrum, v: SparseSpectrum, degree_cap: int | None = None) -> float:
    """max |u(a) - v(a)| over the union of supports, optionally degree-capped."""
    _same_basis(u, v)
    worst = 0.0
    for a in u.entries.keys() | v.entries.keys():
        if degree_cap is not None and popcount(a) > degree_cap:
            continue
        worst = max(worst, abs(u[a] - v[a]))
    return worst


def restrict(
    v: SparseSpectrum,
    degree_cap: int | None = None,
    variables: int | None = None,
    containing: int | None = None,
) -> SparseSpectrum:
    """Keep entries with degree <= cap, mask within `variables`, mask meeting `containing`."""
    out = {}
    for a, x in v.entries.items():
        if degree_cap is not None and popcount(a) > degree_cap:
            continue
        if variables is not None and a & ~variables:
            continue
        if containing is not None and not a & containing:
            continue
        out[a] = x
    return SparseSpectrum(v.n, out, v.mu)


def heavy_coefficients(v: SparseSpectrum | DenseSpectrum, theta: float) -> SparseSpectrum:
    if theta <= 0:
        raise ValueError("theta must be positive")
    if isinstance(v, DenseSpectrum):
        return to_sparse(v.values, v.n, None, tol=theta)
    return SparseSpectrum(v.n, {a: x for a, x in v.entries.items() if abs(x) >= theta}, v.mu)


def spectrum_table(v: SparseSpectrum, variables: list[int] | None = None) -> np.ndarray:
    """Dense coefficient array of a sparse spectrum (optionally over a variable subset)."""
    k = v.n if variables is None else len(variables)
    out = np.zeros(1 << k)
    if v.entries:
        masks = np.fromiter(v.entries.keys(), dtype=np.int64)
        if variables is not None:
            masks = compress(masks, variables)
        out[masks] = list(v.entries.values())
    return out


# Wire format: header "basis=uniform n=<n>" or "basis=product n=<n> mu=<m1>,<m2>,...",
# then one "<mask-hex> <value>" line per entry in increasing mask order.


def format_basis_header(n: int, mu: ProductDistribution | None) -> str:
    if mu is None:
        return f"basis=uniform n={n}"
    return f"basis=product n={n} mu=" + ",".join(repr(m) for m in mu.mu)


def parse_basis_header(line: str) -> tuple[int, ProductDistribution | None, dict[str, str]]:
    fields = dict(tok.split("=", 1) for tok in line.split())
    n = int(fields["n"])
    if fields.get("basis") == "uniform":
        return n, None, fields
    if fields.get("basis") == "product":
        mu = ProductDistribution(tuple(float(t) for t in fields["mu"].split(",")))
        if mu.n != n:
            raise ValueError("mu length disagrees with n")
        return n, mu, fields
    raise ValueError(f"unknown basis in header {line!r}")


def format_spectrum(v: SparseSpectrum) -> str:
    lines = [format_basis_header(v.n, v.mu)]
    lines += [f"{a:#x} {x!r}" for a, x in v.items()]
    return "\n".join(lines) + "\n"


def parse_spectrum(text: str) -> SparseSpectrum:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty spectrum file")
    n, mu, _ = parse_basis_header(lines[0])
    entries = {}
    for ln in lines[1:]:
        mask, value = ln.split()
        entries[int(mask, 16)] = float(value)
    return SparseSpectrum(n, entries, mu)
