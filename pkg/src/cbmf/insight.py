"""Interpretability by-products of trained factor models.

Attribute-factor rows admit a cosine similarity that reflects shared user
preference rather than mere co-occurrence; item factors can be projected
onto their two leading principal components for 2-D display.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SimilarityReport:
    """Ranked attribute pairs with their cosine similarity."""

    pairs: tuple[tuple[str, str, float], ...]
    n_factors: int
    direction: str

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("label1,label2,cosine\n")
            for a, b, value in self.pairs:
                fh.write(f"{a},{b},{value:.17g}\n")


def attribute_cosine(b_matrix: np.ndarray, d: int, d2: int) -> float:
    """Cosine similarity between attribute-factor rows d and d2."""
    row_a, row_b = b_matrix[d], b_matrix[d2]
    na, nb = np.linalg.norm(row_a), np.linalg.norm(row_b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("similarity is undefined for a zero attribute factor")
    return float(row_a @ row_b / (na * nb))


def top_pairs(b_matrix: np.ndarray, labels, count: int, direction: str = "similar") -> SimilarityReport:
    """The most similar (or dissimilar) attribute pairs by factor cosine.

    Pairs involving all-zero factor rows are skipped, since their similarity
    is undefined.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if direction not in ("similar", "dissimilar"):
        raise ValueError("direction must be 'similar' or 'dissimilar'")
    b_matrix = np.asarray(b_matrix, dtype=np.float64)
    d = b_matrix.shape[0]
    if d < 2:
        raise ValueError("need at least two attributes to form pairs")
    labels = list(labels)
    if len(labels) != d:
        raise ValueError("label count must match the attribute-factor rows")
    norms = np.linalg.norm(b_matrix, axis=1)
    valid = np.flatnonzero(norms > 0)
    unit = b_matrix[valid] / norms[valid][:, None]
    cos = unit @ unit.T
    scored = []
    for a_pos in range(len(valid)):
        for b_pos in range(a_pos + 1, len(valid)):
            scored.append((labels[valid[a_pos]], labels[valid[b_pos]], float(cos[a_pos, b_pos])))
    scored.sort(key=lambda t: t[2], reverse=(direction == "similar"))
    return SimilarityReport(
        pairs=tuple(scored[:count]),
        n_factors=b_matrix.shape[1],
        direction=direction,
    )


@dataclass(frozen=True)
class ItemMap:
    """2-D principal-component coordinates for a selection of items."""

    labels: tuple[str, ...]
    coords: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("label,pc1,pc2\n")
            for label, (x, y) in zip(self.labels, self.coords):
                fh.write(f"{label},{x:.17g},{y:.17g}\n")


def item_map(q_matrix: np.ndarray, labels, selection) -> ItemMap:
    """Project selected item factors onto the two leading principal components.

    The components are fitted on all items; only the selected rows are
    projected.  Component signs follow a fixed convention (the largest-loading
    coordinate is nonnegative) so the map is reproducible.
    """
    q_matrix = np.asarray(q_matrix, dtype=np.float64)
    if q_matrix.shape[1] < 2:
        raise ValueError("item factors must have at least two dimensions")
    selection = np.asarray(selection, dtype=np.int64)
    if selection.size == 0:
        raise ValueError("selection must not be empty")
    if selection.min() < 0 or selection.max() >= q_matrix.shape[0]:
        raise IndexError("selection index out of range")
    labels = tuple(str(x) for x in labels)
    if len(labels) != selection.size:
        raise ValueError("need one label per selected item")
    center = q_matrix.mean(axis=0)
    _, _, vt = np.linalg.svd(q_matrix - center, full_matrices=False)
    components = vt[:2].copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    coords = (q_matrix[selection] - center) @ components.T
    return ItemMap(labels=labels, coords=coords)
