"""Item-item similarity structures built from binary attribute vectors.

Two kinds of structure feed the content-boosted objectives: hard neighbor
sets (items sharing at least a threshold number of attributes) and soft
weight matrices, either a logistic function of the shared-attribute count or
the cosine similarity of attribute vectors.  Soft weights are row-normalized
to sum to one; rows with no raw weight stay all-zero so that isolated items
degrade gracefully to the plain factorization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import expit

from .datasets import AttributeMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NeighborSets:
    """Per-item neighbor lists under a shared-attribute threshold."""

    neighbors: tuple[np.ndarray, ...]
    min_shared: int
    pair_fraction: float

    @property
    def n_items(self) -> int:
        return len(self.neighbors)

    @cached_property
    def centroid_matrix(self) -> np.ndarray:
        """Row-stochastic matrix C with C[i, i'] = 1/|S(i)| over neighbors.

        C @ Q gives each item's neighbor centroid; rows without neighbors are
        zero, so the centroid of an isolated item is the zero vector.
        """
        m = self.n_items
        c = np.zeros((m, m))
        for i, nbrs in enumerate(self.neighbors):
            if len(nbrs):
                c[i, nbrs] = 1.0 / len(nbrs)
        return c


@dataclass(frozen=True)
class WeightMatrix:
    """Nonnegative item-item weights with a zero diagonal."""

    matrix: np.ndarray
    row_normalized: bool

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("weight matrix must be square")
        if np.any(np.diagonal(m) != 0.0):
            raise ValueError("weight matrix diagonal must be zero")
        if m.size and m.min() < 0.0:
            raise ValueError("weights must be nonnegative")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n_items(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)


def shared_count(attrs: AttributeMatrix, i: int, j: int) -> int:
    """Number of attributes items i and j have in common."""
    return int(attrs.matrix[i] @ attrs.matrix[j])


def shared_count_matrix(attrs: AttributeMatrix) -> np.ndarray:
    s = attrs.matrix @ attrs.matrix.T
    np.fill_diagonal(s, 0.0)
    return s


def neighbor_sets(attrs: AttributeMatrix, min_shared: int) -> NeighborSets:
    """Neighbor lists of items sharing at least min_shared attributes.

    Also records the activation fraction: the share of unordered item pairs
    that meet the threshold.
    """
    if min_shared < 1:
        raise ValueError("min_shared must be at least 1")
    s = shared_count_matrix(attrs)
    active = s >= min_shared
    m = attrs.n_items
    lists = tuple(np.flatnonzero(active[i]) for i in range(m))
    n_pairs = m * (m - 1) // 2
    fraction = float(np.triu(active, k=1).sum() / n_pairs) if n_pairs else 0.0
    return NeighborSets(neighbors=lists, min_shared=min_shared, pair_fraction=fraction)


def logistic_kernel(shared, min_shared: int, sharpness: float):
    """Logistic weight of a shared-attribute count: exactly 0.5 at the threshold."""
    return expit(sharpness * (np.asarray(shared, dtype=np.float64) - min_shared))


def _normalize_rows(raw: np.ndarray) -> np.ndarray:
    sums = raw.sum(axis=1, keepdims=True)
    out = np.divide(raw, sums, out=np.zeros_like(raw), where=sums > 0)
    return out


def logistic_weights(attrs: AttributeMatrix, min_shared: int, sharpness: float) -> WeightMatrix:
    """Row-normalized logistic weights of shared-attribute counts.

    The raw weight is a smooth, monotone function of the number of shared
    attributes that approaches the hard neighbor indicator as sharpness grows.
    """
    if sharpness <= 0:
        raise ValueError("sharpness must be positive")
    raw = logistic_kernel(shared_count_matrix(attrs), min_shared, sharpness)
    np.fill_diagonal(raw, 0.0)
    return WeightMatrix(_normalize_rows(raw), row_normalized=True)


def raw_cosine_matrix(attrs: AttributeMatrix) -> np.ndarray:
    """Pairwise cosine of attribute rows; zero where either row is all-zero."""
    norms = np.linalg.norm(attrs.matrix, axis=1)
    denom = np.outer(norms, norms)
    raw = np.divide(attrs.matrix @ attrs.matrix.T, denom,
                    out=np.zeros((attrs.n_items, attrs.n_items)), where=denom > 0)
    np.fill_diagonal(raw, 0.0)
    if logger.isEnabledFor(logging.DEBUG):
        shared = shared_count_matrix(attrs)
        sizes = attrs.matrix.sum(axis=1)
        logger.debug(
            "cosine of binary rows = shared / sqrt(sizes): "
            "mean shared %.3f, mean size %.3f", shared.mean(), sizes.mean()
        )
    return raw


def cosine_weights(attrs: AttributeMatrix) -> WeightMatrix:
    """Row-normalized cosine similarity of attribute vectors."""
    return WeightMatrix(_normalize_rows(raw_cosine_matrix(attrs)), row_normalized=True)


def write_weights_tsv(weights: WeightMatrix, path) -> None:
    """Dump nonzero weights as "i <tab> i' <tab> weight" lines for inspection."""
    rows, cols = np.nonzero(weights.matrix)
    with open(path, "w") as fh:
        for i, j in zip(rows, cols):
            fh.write(f"{i}\t{j}\t{weights.matrix[i, j]:.17g}\n")
