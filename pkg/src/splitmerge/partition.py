"""Partitioning samples into disjoint groups, and sampling random subsets.

A :class:`Partition` stores a permutation of item indices plus group
boundaries; group j is a contiguous slice of the permuted order.  Group
sizes are as equal as possible: with ``n = q*k + r`` the first ``r`` groups
get ``q + 1`` items and the rest get ``q``, so sizes never differ by more
than one and every item lands in exactly one group.

:func:`sample_subsets` draws uniform random size-``n`` subsets (without
replacement within each subset) using Floyd's algorithm, for estimators
built on subset statistics rather than disjoint groups.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "Partition",
    "SubsetFamily",
    "group_offsets",
    "partition_disjoint",
    "contiguous_partition",
    "sample_subsets",
]


def _check_n_k(n_items: int, k: int) -> tuple[int, int]:
    for name, value in (("n_items", n_items), ("k", k)):
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise ValueError(f"{name} must be an integer, got {value!r}")
    n_items, k = int(n_items), int(k)
    if n_items < 1:
        raise ValueError(f"n_items must be >= 1, got {n_items}")
    if not 1 <= k <= n_items:
        raise ValueError(f"k must satisfy 1 <= k <= n_items={n_items}, got {k}")
    return n_items, k


def group_offsets(n_items: int, k: int) -> np.ndarray:
    """Group boundaries for k near-equal groups: the first ``n_items % k``
    groups get the extra item.  Returns k + 1 offsets starting at 0."""
    n_items, k = _check_n_k(n_items, k)
    q, r = divmod(n_items, k)
    sizes = np.full(k, q, dtype=np.int64)
    sizes[:r] += 1
    offsets = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    return offsets


@dataclass(frozen=True)
class Partition:
    """A disjoint grouping of ``n_items`` items into ``k`` near-equal groups.

    ``order`` is a permutation of ``arange(n_items)``; group ``j`` consists
    of ``order[offsets[j]:offsets[j+1]]``.
    """

    n_items: int
    order: np.ndarray
    offsets: np.ndarray

    def __post_init__(self) -> None:
        if self.order.shape != (self.n_items,):
            raise ValueError("order must be a permutation of arange(n_items)")
        if self.offsets[0] != 0 or self.offsets[-1] != self.n_items:
            raise ValueError("offsets must start at 0 and end at n_items")

    @property
    def k(self) -> int:
        return len(self.offsets) - 1

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def groups(self) -> Iterator[np.ndarray]:
        """Yield the k index arrays, in group order."""
        for j in range(self.k):
            yield self.order[self.offsets[j] : self.offsets[j + 1]]

    def assignments(self) -> np.ndarray:
        """Group id (0-based) of each item, indexed by item."""
        out = np.empty(self.n_items, dtype=np.int64)
        for j, group in enumerate(self.groups()):
            out[group] = j
        return out


def partition_disjoint(n_items: int, k: int, rng: np.random.Generator) -> Partition:
    """Uniformly random partition of ``n_items`` items into ``k`` groups."""
    n_items, k = _check_n_k(n_items, k)
    order = rng.permutation(n_items)
    return Partition(n_items, order, group_offsets(n_items, k))


def contiguous_partition(n_items: int, k: int) -> Partition:
    """Deterministic partition into k consecutive blocks (no shuffling)."""
    n_items, k = _check_n_k(n_items, k)
    return Partition(n_items, np.arange(n_items, dtype=np.int64), group_offsets(n_items, k))


@dataclass(frozen=True)
class SubsetFamily:
    """``ell`` random subsets of size ``n`` drawn from ``n_items`` items."""

    n_items: int
    subset_size: int
    indices: np.ndarray  # shape (ell, subset_size), each row sorted

    @property
    def ell(self) -> int:
        return self.indices.shape[0]


def sample_subsets(
    n_items: int, subset_size: int, ell: int, rng: np.random.Generator
) -> SubsetFamily:
    """Draw ``ell`` independent uniform subsets of size ``subset_size``.

    Each subset is drawn by Floyd's algorithm: exactly ``subset_size``
    uniform integers per subset, no rejection, uniform over all
    ``C(n_items, subset_size)`` subsets.  Subsets are independent of each
    other (duplicates across draws are allowed).
    """
    n_items, subset_size = _check_n_k(n_items, subset_size)
    if not isinstance(ell, (int, np.integer)) or isinstance(ell, bool) or ell < 1:
        raise ValueError(f"ell must be a positive integer, got {ell!r}")
    ell = int(ell)
    out = np.empty((ell, subset_size), dtype=np.int64)
    for row in range(ell):
        chosen: set[int] = set()
        for j in range(n_items - subset_size, n_items):
            t = int(rng.integers(0, j + 1))
            chosen.add(j if t in chosen else t)
        out[row] = sorted(chosen)
    return SubsetFamily(n_items, subset_size, out)
