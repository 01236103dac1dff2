"""Bit-mask helpers shared by every module.

Points x in {-1,1}^n and coefficient indices a in {0,1}^n are both plain
Python ints (or int64 numpy arrays of them).  Bit i of a point is set when
x_i = +1; bit i of an index is set when variable i belongs to the monomial.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

MAX_N = 63
EXACT_MAX_N = 24


def check_dimension(n: int, limit: int = MAX_N) -> None:
    if not 1 <= n <= limit:
        raise ValueError(f"dimension n={n} outside [1, {limit}]")


def check_mask(bits: int, n: int) -> int:
    if bits < 0 or bits >> n:
        raise ValueError(f"mask {bits:#x} does not fit in {n} bits")
    return bits


def popcount(mask: int) -> int:
    return mask.bit_count()


def popcount_array(masks: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(masks, dtype=np.int64)).astype(np.int64)


def bit_indices(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def all_points(n: int) -> np.ndarray:
    check_dimension(n, EXACT_MAX_N)
    return np.arange(1 << n, dtype=np.int64)


def masks_up_to_degree(n: int, d: int | None = None) -> np.ndarray:
    """All masks over n variables with popcount <= d, in increasing order."""
    masks = all_points(n)
    if d is None or d >= n:
        return masks
    return masks[popcount_array(masks) <= d]


def compress(masks: np.ndarray | int, variables: list[int]):
    """Map masks supported on `variables` to masks over range(len(variables)).

    Numeric order is preserved for masks contained in the variable set.
    """
    scalar = isinstance(masks, (int, np.integer))
    arr = np.asarray(masks, dtype=np.int64)
    out = np.zeros_like(arr)
    for j, v in enumerate(variables):
        out |= ((arr >> v) & 1) << j
    return int(out) if scalar else out


def expand(masks: np.ndarray | int, variables: list[int]):
    """Inverse of `compress`."""
    scalar = isinstance(masks, (int, np.integer))
    arr = np.asarray(masks, dtype=np.int64)
    out = np.zeros_like(arr)
    for j, v in enumerate(variables):
        out |= ((arr >> j) & 1) << v
    return int(out) if scalar else out


def signs(points: np.ndarray, i: int) -> np.ndarray:
    """Coordinate i of each point as +1.0 / -1.0."""
    return np.where((np.asarray(points) >> i) & 1, 1.0, -1.0)
