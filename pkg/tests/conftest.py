"""Shared fixtures and small data builders for the test suite."""

import os
from pathlib import Path

import numpy as np
import pytest

import cbmf

ML100K_ENV = "CBMF_ML100K_DIR"

MINI_GENRE_FLAGS = "0" * 19


def find_ml100k():
    """Locate a MovieLens 100K directory, if one is available."""
    candidates = []
    env = os.environ.get(ML100K_ENV)
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parents[1] / "data" / "ml-100k")
    for cand in candidates:
        if (cand / "u.data").is_file() and (cand / "u.item").is_file():
            return cand
    return None


@pytest.fixture(scope="session")
def ml100k_dir():
    found = find_ml100k()
    if found is None:
        pytest.fail(
            "MovieLens 100K data is not available in this environment. "
            f"Download the ml-100k archive and set {ML100K_ENV} to the "
            "extracted directory (or place it at data/ml-100k). The archive "
            "contains real user data and is not bundled with the repository."
        )
    return found


@pytest.fixture(scope="session")
def ml100k(ml100k_dir):
    return cbmf.parse_movielens(ml100k_dir)


def make_dataset(n_users, n_items, triples, lo=-10.0, hi=10.0):
    """RatingsDataset from a list of (user, item, rating) tuples."""
    users = np.array([t[0] for t in triples], dtype=np.int64)
    items = np.array([t[1] for t in triples], dtype=np.int64)
    ratings = np.array([t[2] for t in triples], dtype=np.float64)
    return cbmf.RatingsDataset(n_users, n_items, users, items, ratings, lo, hi)


def random_dataset(rng, n_users, n_items, n_ratings=None, density=0.6, lo=-5.0, hi=5.0):
    total = n_users * n_items
    count = n_ratings if n_ratings is not None else max(1, int(density * total))
    cells = rng.choice(total, size=count, replace=False)
    return cbmf.RatingsDataset(
        n_users, n_items, cells // n_items, cells % n_items,
        rng.uniform(lo, hi, count), lo, hi,
    )


def random_attrs(rng, n_items, n_attrs, p=0.4):
    matrix = (rng.random((n_items, n_attrs)) < p).astype(float)
    # every item gets at least one attribute so cosine rows are nonzero
    empty = np.flatnonzero(matrix.sum(axis=1) == 0)
    for i in empty:
        matrix[i, rng.integers(n_attrs)] = 1.0
    return cbmf.AttributeMatrix(matrix)


def clustered_attrs(n_items, n_clusters=3):
    """Attribute matrix where pairs share exactly 2 attributes or none.

    With a shared-attribute threshold of 1 no pair sits exactly at the
    threshold, which the saturation checks need.
    """
    matrix = np.zeros((n_items, 2 * n_clusters))
    for i in range(n_items):
        g = i % n_clusters
        matrix[i, 2 * g] = 1.0
        matrix[i, 2 * g + 1] = 1.0
    return cbmf.AttributeMatrix(matrix)


def write_mini_movielens(directory, ratings_lines=None, n_items=2):
    """Write a minimal MovieLens-style directory and return its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if ratings_lines is None:
        ratings_lines = ["1\t1\t5\t874965758", "2\t1\t3\t876893171"]
    (directory / "u.data").write_text("\n".join(ratings_lines) + "\n")
    item_lines = []
    for i in range(1, n_items + 1):
        flags = ["0"] * 19
        flags[i % 19] = "1"
        item_lines.append(
            f"{i}|Movie {i} (1995)|01-Jan-1995||http://example.org|" + "|".join(flags)
        )
    (directory / "u.item").write_text("\n".join(item_lines) + "\n")
    return directory
