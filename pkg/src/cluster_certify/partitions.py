"""Partitions, optimal label matching, and the label-invariant Hamming distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class Partition:
    """A hard clustering of n points into k groups, labels in 1..k.

    Empty groups are tolerated (solver intermediates); callers that need
    every group populated check ``has_empty``.
    """

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a nonempty 1-d sequence")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if labels.min() < 1 or labels.max() > self.k:
            raise ValueError(f"labels must lie in 1..{self.k}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.labels.size

    @property
    def cluster_sizes(self):
        return np.bincount(self.labels - 1, minlength=self.k)

    @property
    def has_empty(self):
        return bool(np.any(self.cluster_sizes == 0))

    def indices_of(self, j):
        """Row indices of cluster j (1-based)."""
        return np.flatnonzero(self.labels == j)


@dataclass(frozen=True)
class Matching:
    """Overlap-maximizing cluster correspondence.

    ``permutation[j]`` is the 0-based cluster of the second partition matched
    to 0-based cluster j of the first; lexicographically smallest among all
    agreement-maximizing permutations.
    """

    permutation: tuple
    agreement_count: int


def overlap_matrix(a: Partition, b: Partition):
    """k x k matrix of |A_i intersect B_j| counts."""
    _check_comparable(a, b)
    k = a.k
    flat = (a.labels - 1) * k + (b.labels - 1)
    return np.bincount(flat, minlength=k * k).reshape(k, k)


def best_label_matching(overlap):
    """Agreement-maximizing permutation of an overlap-count matrix.

    Exact assignment optimization; ties broken toward the lexicographically
    smallest permutation by greedily pinning each row to the smallest column
    that preserves the optimal total.
    """
    overlap = np.asarray(overlap, dtype=np.int64)
    k = overlap.shape[0]
    best_total = _assignment_max(overlap)
    perm = []
    used = set()
    remaining_rows = list(range(k))
    pinned = 0
    for row in range(k):
        remaining_rows.remove(row)
        for col in range(k):
            if col in used:
                continue
            sub = overlap[np.ix_(remaining_rows, [c for c in range(k) if c not in used and c != col])]
            total = pinned + overlap[row, col] + (_assignment_max(sub) if sub.size else 0)
            if total == best_total:
                perm.append(col)
                used.add(col)
                pinned += overlap[row, col]
                break
    return tuple(perm), int(best_total)


def _assignment_max(matrix):
    if matrix.size == 0:
        return 0
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    return int(matrix[rows, cols].sum())


def misclassification_rate(hat: Partition, star: Partition):
    """Fraction of points assigned to the wrong group after optimal matching.

    Returns ``(rate, matching)``; the rate is always an integer multiple of
    1/n and invariant to relabeling either argument.
    """
    _check_comparable(hat, star)
    perm, agreement = best_label_matching(overlap_matrix(hat, star))
    rate = 1.0 - agreement / hat.n
    return rate, Matching(permutation=perm, agreement_count=agreement)


def hamming_distance(a: Partition, b: Partition):
    """Label-invariant Hamming distance; equals the misclassification rate."""
    rate, _ = misclassification_rate(a, b)
    return rate


def align(hat: Partition, star: Partition):
    """Relabel ``hat`` by the optimal matching so labels compare directly to ``star``."""
    _, matching = misclassification_rate(hat, star)
    perm = np.asarray(matching.permutation)
    new_labels = perm[hat.labels - 1] + 1
    return Partition(new_labels, hat.k)


def brute_force_matching(overlap):
    """Enumerate all k! permutations; exact oracle for ``best_label_matching``."""
    from itertools import permutations

    overlap = np.asarray(overlap)
    k = overlap.shape[0]
    best_perm, best_total = None, -1
    for perm in permutations(range(k)):
        total = sum(overlap[j, perm[j]] for j in range(k))
        if total > best_total:
            best_perm, best_total = perm, total
    return best_perm, int(best_total)


def _check_comparable(a: Partition, b: Partition):
    if a.n != b.n:
        raise ValueError(f"partitions compare only at equal n ({a.n} != {b.n})")
    if a.k != b.k:
        raise ValueError(f"partitions compare only at equal k ({a.k} != {b.k})")
