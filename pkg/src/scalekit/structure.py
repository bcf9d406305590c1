"""Nonnegative containers, zero patterns and combinatorial structure.

Everything here works on the exact support ``A > 0``. Thresholding small
entries is the caller's business.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .config import DimensionError

Block = Tuple[Tuple[int, ...], Tuple[int, ...]]


def as_nonneg(A, name="A"):
    """Validate and copy a dense nonnegative matrix (float64, 2-D)."""
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    neg = np.argwhere(A < 0)
    if len(neg):
        i, j = neg[0]
        raise ValueError(f"{name}[{i},{j}] = {A[i, j]!r} is negative")
    return A


def as_nonneg_tensor(T, name="T"):
    T = np.array(T, dtype=float)
    if T.ndim < 2 or min(T.shape) < 1:
        raise DimensionError(f"{name} needs at least two non-empty axes, got {T.shape}")
    if not np.all(np.isfinite(T)) or np.any(T < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    return T


@dataclass(frozen=True)
class Pattern:
    mask: np.ndarray

    @property
    def shape(self):
        return self.mask.shape

    @property
    def support(self):
        return {(int(i), int(j)) for i, j in np.argwhere(self.mask)}

    def __len__(self):
        return int(self.mask.sum())

    def __le__(self, other):
        # subpattern relation B < A
        return self.shape == other.shape and not np.any(self.mask & ~other.mask)

    def __eq__(self, other):
        if not isinstance(other, Pattern):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.shape, self.mask.tobytes()))


def pattern_of(A):
    A = as_nonneg(A)
    mask = A > 0
    mask.setflags(write=False)
    return Pattern(mask)


@dataclass(frozen=True)
class StructureReport:
    """Structure predicates. ``None`` marks a field that is not applicable
    (everything except ``has_support`` for rectangular input)."""

    has_support: bool
    has_total_support: Optional[bool]
    fully_indecomposable: Optional[bool]
    irreducible: Optional[bool]
    completely_reducible: Optional[bool]
    block_decomposition: Optional[List[Block]] = field(default=None)


def max_matching(mask, forced=None):
    """Maximum bipartite matching by augmenting paths (Kuhn).

    ``forced=(i, j)`` pins row i to column j first. Returns (size, match)
    where match[j] is the row matched to column j, or -1.
    """
    m, n = mask.shape
    adj = [np.flatnonzero(mask[i]) for i in range(m)]
    match = [-1] * n
    blocked_row = blocked_col = -1
    size = 0
    if forced is not None:
        blocked_row, blocked_col = forced
        if not mask[blocked_row, blocked_col]:
            return 0, match
        match[blocked_col] = blocked_row
        size = 1

    def augment(i, seen):
        for j in adj[i]:
            if j == blocked_col or seen[j]:
                continue
            seen[j] = True
            if match[j] == -1 or augment(match[j], seen):
                match[j] = i
                return True
        return False

    for i in range(m):
        if i == blocked_row:
            continue
        if augment(i, [False] * n):
            size += 1
    return size, match


def has_perfect_matching(mask, forced=None):
    m, n = mask.shape
    return m == n and max_matching(mask, forced)[0] == n


def _total_support(mask):
    if not has_perfect_matching(mask):
        return False
    for i, j in np.argwhere(mask):
        if not has_perfect_matching(mask, forced=(int(i), int(j))):
            return False
    return True


def _bipartite_components(mask):
    m, n = mask.shape
    rows, cols = np.nonzero(mask)
    g = csr_matrix((np.ones(len(rows)), (rows, cols + m)), shape=(m + n, m + n))
    k, labels = connected_components(g, directed=False)
    blocks = []
    for c in range(k):
        r = tuple(int(i) for i in np.flatnonzero(labels[:m] == c))
        s = tuple(int(j) for j in np.flatnonzero(labels[m:] == c))
        blocks.append((r, s))
    return blocks


def strong_components(mask):
    """Labels of the strongly connected components of the support digraph."""
    n = mask.shape[0]
    rows, cols = np.nonzero(mask)
    g = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return connected_components(g, directed=True, connection="strong")


def analyze_structure(A):
    mask = pattern_of(A).mask
    m, n = mask.shape
    if m != n:
        # rectangular: support means a matching saturating the smaller side
        return StructureReport(max_matching(mask)[0] == min(m, n), None, None, None, None)
    support = has_perfect_matching(mask)
    total = support and _total_support(mask)
    k, labels = strong_components(mask)
    irreducible = k == 1
    rows, cols = np.nonzero(mask)
    completely_reducible = bool(np.all(labels[rows] == labels[cols]))
    blocks = None
    fully = False
    if total:
        # with total support the connected components of the bipartite
        # support graph are the fully indecomposable blocks
        blocks = _bipartite_components(mask)
        fully = len(blocks) == 1
    return StructureReport(
        has_support=support,
        has_total_support=total,
        fully_indecomposable=fully,
        irreducible=irreducible,
        completely_reducible=completely_reducible,
        block_decomposition=blocks,
    )
