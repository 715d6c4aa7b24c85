"""Cross-object input validation helpers."""

from __future__ import annotations

from .datasets import AttributeMatrix, RatingsDataset


def check_ratings(obj) -> RatingsDataset:
    if not isinstance(obj, RatingsDataset):
        raise TypeError(f"expected a RatingsDataset, got {type(obj).__name__}")
    if len(obj) == 0:
        raise ValueError("ratings dataset is empty")
    return obj


def check_paired(ds: RatingsDataset, attrs) -> AttributeMatrix:
    if not isinstance(attrs, AttributeMatrix):
        raise TypeError(f"expected an AttributeMatrix, got {type(attrs).__name__}")
    if attrs.n_items != ds.n_items:
        raise ValueError(
            f"attribute matrix covers {attrs.n_items} items but the ratings "
            f"dataset has {ds.n_items}"
        )
    return attrs
