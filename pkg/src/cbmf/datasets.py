"""Rating and item-attribute data: parsing, validation, splitting, synthesis.

All loaders produce dense 0-based user/item indices regardless of the ids
used in the source files.  Datasets are immutable; every function here is
pure and safe to call concurrently.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DataFormatError

# Genre columns of the MovieLens 100K item file, in file order.  The "unknown"
# flag counts as a genre, giving 19 attributes total.
ML100K_GENRES = (
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
)


@dataclass(frozen=True)
class RatingsDataset:
    """Sparse (user, item, rating) triplets over an N x M index space.

    Users or items may have no ratings at all (they still occupy an index);
    duplicate (user, item) pairs are rejected.
    """

    n_users: int
    n_items: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    rating_min: float
    rating_max: float

    def __post_init__(self):
        users = np.ascontiguousarray(self.users, dtype=np.int64)
        items = np.ascontiguousarray(self.items, dtype=np.int64)
        ratings = np.ascontiguousarray(self.ratings, dtype=np.float64)
        if not (len(users) == len(items) == len(ratings)):
            raise ValueError("users, items and ratings must have equal length")
        if len(users) and (users.min() < 0 or users.max() >= self.n_users):
            raise ValueError("user index out of range")
        if len(items) and (items.min() < 0 or items.max() >= self.n_items):
            raise ValueError("item index out of range")
        if len(ratings):
            lo, hi = float(ratings.min()), float(ratings.max())
            if lo < self.rating_min - 1e-12 or hi > self.rating_max + 1e-12:
                raise ValueError(
                    f"rating outside [{self.rating_min}, {self.rating_max}]: "
                    f"observed range [{lo}, {hi}]"
                )
        keys = users * self.n_items + items
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate (user, item) pair")
        for arr in (users, items, ratings):
            arr.flags.writeable = False
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "ratings", ratings)

    def __len__(self) -> int:
        return len(self.ratings)

    @property
    def density(self) -> float:
        return len(self) / (self.n_users * self.n_items)

    @cached_property
    def _user_order(self) -> np.ndarray:
        return np.argsort(self.users, kind="stable")

    @cached_property
    def _user_starts(self) -> np.ndarray:
        counts = np.bincount(self.users, minlength=self.n_users)
        return np.concatenate(([0], np.cumsum(counts)))

    @cached_property
    def _item_order(self) -> np.ndarray:
        return np.argsort(self.items, kind="stable")

    @cached_property
    def _item_starts(self) -> np.ndarray:
        counts = np.bincount(self.items, minlength=self.n_items)
        return np.concatenate(([0], np.cumsum(counts)))

    def rated_by(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Items rated by user u and the corresponding ratings."""
        if not 0 <= u < self.n_users:
            raise IndexError(f"user index {u} out of range")
        sel = self._user_order[self._user_starts[u]:self._user_starts[u + 1]]
        return self.items[sel], self.ratings[sel]

    def raters_of(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Users who rated item i and the corresponding ratings."""
        if not 0 <= i < self.n_items:
            raise IndexError(f"item index {i} out of range")
        sel = self._item_order[self._item_starts[i]:self._item_starts[i + 1]]
        return self.users[sel], self.ratings[sel]

    def triplets(self) -> list[tuple[int, int, float]]:
        return list(zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()))

    def fingerprint(self) -> str:
        """SHA-256 over dimensions, rating range and canonically ordered triplets."""
        h = hashlib.sha256()
        h.update(f"{self.n_users} {self.n_items} {self.rating_min!r} {self.rating_max!r}\n".encode())
        order = np.lexsort((self.items, self.users))
        h.update(self.users[order].tobytes())
        h.update(self.items[order].tobytes())
        h.update(self.ratings[order].tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class AttributeMatrix:
    """Binary M x D item-attribute incidence with one label per attribute."""

    matrix: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("attribute matrix must be 2-dimensional")
        if not np.isin(m, (0.0, 1.0)).all():
            raise ValueError("attribute matrix entries must be 0 or 1")
        labels = tuple(self.labels) if self.labels else tuple(f"a{d}" for d in range(m.shape[1]))
        if len(labels) != m.shape[1]:
            raise ValueError("label count must equal the number of attributes")
        if len(set(labels)) != len(labels):
            raise ValueError("attribute labels must be unique")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)

    @property
    def n_items(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_attrs(self) -> int:
        return self.matrix.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.matrix[i]


@dataclass(frozen=True)
class DatasetSummary:
    n_users: int
    n_items: int
    n_attrs: int
    n_ratings: int
    density: float

    def __post_init__(self):
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must lie in (0, 1]")


def _dense_index(ids: list[int]) -> dict[int, int]:
    return {orig: dense for dense, orig in enumerate(sorted(set(ids)))}


def parse_movielens(directory) -> tuple[RatingsDataset, AttributeMatrix]:
    """Load a MovieLens 100K-style directory (u.data ratings, u.item genres).

    Source ids are 1-based; they are mapped onto dense 0-based indices.  The
    rating scale is fixed at [1, 5] and the 19 genre flags at the end of each
    u.item line become the attribute matrix.
    """
    directory = Path(directory)
    ratings_path = directory / "u.data"
    item_path = directory / "u.item"
    if not ratings_path.is_file():
        raise DataFormatError(f"missing ratings file: {ratings_path}")
    if not item_path.is_file():
        raise DataFormatError(f"missing attribute file: {item_path}")

    item_ids: list[int] = []
    flag_rows: list[list[int]] = []
    with open(item_path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("|")
            if len(parts) < 20:
                raise DataFormatError(f"{item_path}:{lineno}: expected at least 20 fields")
            try:
                item_id = int(parts[0])
                flags = [int(v) for v in parts[-19:]]
            except ValueError as exc:
                raise DataFormatError(f"{item_path}:{lineno}: {exc}") from exc
            if any(v not in (0, 1) for v in flags):
                raise DataFormatError(f"{item_path}:{lineno}: genre flag not in {{0,1}}")
            item_ids.append(item_id)
            flag_rows.append(flags)
    if not item_ids:
        raise DataFormatError(f"{item_path}: no items")
    item_map = _dense_index(item_ids)
    if len(item_map) != len(item_ids):
        raise DataFormatError(f"{item_path}: duplicate item id")

    matrix = np.zeros((len(item_map), 19))
    for item_id, flags in zip(item_ids, flag_rows):
        matrix[item_map[item_id]] = flags

    labels = ML100K_GENRES
    genre_path = directory / "u.genre"
    if genre_path.is_file():
        parsed = []
        with open(genre_path, encoding="latin-1") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    parsed.append(line.split("|")[0])
        if len(parsed) == 19:
            labels = tuple(parsed)

    users_raw: list[int] = []
    items_raw: list[int] = []
    values: list[float] = []
    with open(ratings_path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise DataFormatError(f"{ratings_path}:{lineno}: expected user, item, rating")
            try:
                u, i, r = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise DataFormatError(f"{ratings_path}:{lineno}: {exc}") from exc
            if not 1.0 <= r <= 5.0:
                raise DataFormatError(f"{ratings_path}:{lineno}: rating {r} outside [1, 5]")
            if i not in item_map:
                raise DataFormatError(f"{ratings_path}:{lineno}: unknown item id {i}")
            users_raw.append(u)
            items_raw.append(i)
            values.append(r)
    if not values:
        raise DataFormatError(f"{ratings_path}: no ratings")

    user_map = _dense_index(users_raw)
    ds = RatingsDataset(
        n_users=len(user_map),
        n_items=len(item_map),
        users=np.array([user_map[u] for u in users_raw]),
        items=np.array([item_map[i] for i in items_raw]),
        ratings=np.array(values),
        rating_min=1.0,
        rating_max=5.0,
    )
    return ds, AttributeMatrix(matrix, labels)


def _split_fields(line: str) -> list[str]:
    sep = "\t" if "\t" in line else ","
    return [f.strip() for f in line.split(sep)]


def parse_triplets_indexed(
    path, rating_min: float, rating_max: float
) -> tuple[RatingsDataset, dict[int, int], dict[int, int]]:
    """Parse "user, item, rating" lines; also return the id-to-index maps."""
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"missing ratings file: {path}")
    users_raw: list[int] = []
    items_raw: list[int] = []
    values: list[float] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = _split_fields(line)
            if len(parts) < 3:
                raise DataFormatError(f"{path}:{lineno}: expected user, item, rating")
            try:
                u, i, r = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
            if not rating_min <= r <= rating_max:
                raise DataFormatError(
                    f"{path}:{lineno}: rating {r} outside [{rating_min}, {rating_max}]"
                )
            users_raw.append(u)
            items_raw.append(i)
            values.append(r)
    if not values:
        raise DataFormatError(f"{path}: no ratings")

    user_map = _dense_index(users_raw)
    item_map = _dense_index(items_raw)
    users = np.array([user_map[u] for u in users_raw])
    items = np.array([item_map[i] for i in items_raw])
    keys = users * len(item_map) + items
    uniq, first = np.unique(keys, return_index=True)
    if len(uniq) != len(keys):
        dup = np.setdiff1d(np.arange(len(keys)), first)[0]
        raise DataFormatError(
            f"{path}: duplicate (user, item) pair ({users_raw[dup]}, {items_raw[dup]})"
        )
    ds = RatingsDataset(
        n_users=len(user_map),
        n_items=len(item_map),
        users=users,
        items=items,
        ratings=np.array(values),
        rating_min=float(rating_min),
        rating_max=float(rating_max),
    )
    return ds, user_map, item_map


def parse_triplets(path, rating_min: float, rating_max: float) -> RatingsDataset:
    return parse_triplets_indexed(path, rating_min, rating_max)[0]


def parse_attributes(path, item_map: dict[int, int]) -> AttributeMatrix:
    """Parse item attributes for the items indexed by item_map.

    Two formats are auto-detected from the first line.  A dense grid starts
    with a header line "item,<label>,...,<label>" (first field "item" or
    "item_id") followed by one 0/1 row per item.  Anything else is read as
    incidence lines "item_id, attr_label", one incidence per line.  Items
    never mentioned get an all-zero row.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"missing attribute file: {path}")
    n_items = max(item_map.values()) + 1 if item_map else 0
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    content = [(no, ln.strip()) for no, ln in enumerate(lines, start=1)
               if ln.strip() and not ln.strip().startswith("#")]
    if not content:
        raise DataFormatError(f"{path}: empty attribute file")

    first = _split_fields(content[0][1])
    if first and first[0].lower() in ("item", "item_id"):
        labels = tuple(first[1:])
        if not labels:
            raise DataFormatError(f"{path}: grid header has no attribute labels")
        matrix = np.zeros((n_items, len(labels)))
        for lineno, line in content[1:]:
            parts = _split_fields(line)
            if len(parts) != len(labels) + 1:
                raise DataFormatError(f"{path}:{lineno}: expected {len(labels) + 1} fields")
            try:
                item_id = int(parts[0])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: bad item id ({exc})") from exc
            if item_id not in item_map:
                raise DataFormatError(f"{path}:{lineno}: unknown item id {item_id}")
            for cell in parts[1:]:
                if cell not in ("0", "1"):
                    raise DataFormatError(f"{path}:{lineno}: non-binary cell {cell!r}")
            matrix[item_map[item_id]] = [int(c) for c in parts[1:]]
        return AttributeMatrix(matrix, labels)

    incidences: list[tuple[int, str]] = []
    for lineno, line in content:
        parts = _split_fields(line)
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected item_id, attr_label")
        try:
            item_id = int(parts[0])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: bad item id ({exc})") from exc
        if item_id not in item_map:
            raise DataFormatError(f"{path}:{lineno}: unknown item id {item_id}")
        incidences.append((item_map[item_id], parts[1]))
    labels = tuple(sorted({label for _, label in incidences}))
    col = {label: d for d, label in enumerate(labels)}
    matrix = np.zeros((n_items, len(labels)))
    for idx, label in incidences:
        matrix[idx, col[label]] = 1.0
    return AttributeMatrix(matrix, labels)


def split_holdout(
    ds: RatingsDataset, fraction: float, seed: int
) -> tuple[RatingsDataset, RatingsDataset]:
    """Split the observed pairs into train/validation halves.

    The validation set gets round(fraction * |T|) pairs (round half to even)
    sampled uniformly without replacement; both halves keep the full index
    space, so users or items may end up with no training ratings.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("holdout fraction must lie strictly between 0 and 1")
    n = len(ds)
    n_val = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    val_pos = rng.choice(n, size=n_val, replace=False)
    mask = np.zeros(n, dtype=bool)
    mask[val_pos] = True

    def subset(m):
        return RatingsDataset(
            n_users=ds.n_users,
            n_items=ds.n_items,
            users=ds.users[m],
            items=ds.items[m],
            ratings=ds.ratings[m],
            rating_min=ds.rating_min,
            rating_max=ds.rating_max,
        )

    return subset(~mask), subset(mask)


def summarize(ds: RatingsDataset, attrs: AttributeMatrix | None = None) -> DatasetSummary:
    if attrs is not None and attrs.n_items != ds.n_items:
        raise ValueError("attribute matrix item count differs from the ratings dataset")
    return DatasetSummary(
        n_users=ds.n_users,
        n_items=ds.n_items,
        n_attrs=attrs.n_attrs if attrs is not None else 0,
        n_ratings=len(ds),
        density=ds.density,
    )


def synth_recipes(
    seed: int,
    n_users: int,
    n_items: int,
    n_attrs: int,
    density: float,
    attrs_per_item: int,
) -> tuple[RatingsDataset, AttributeMatrix]:
    """Generate a recipes-shaped synthetic dataset, fully determined by seed.

    Ratings come from a planted rank-5 structure plus user/item main effects,
    rounded to integers and clamped to [0, 5].  Item attributes are sparse
    random binary rows; the planted item factors are driven by the attributes
    so that content carries genuine signal about preferences, as it does in
    real rating data.
    """
    if min(n_users, n_items, n_attrs, attrs_per_item) <= 0:
        raise ValueError("all size parameters must be positive")
    if not 0.0 < density < 1.0:
        raise ValueError("density must lie strictly between 0 and 1")
    if attrs_per_item > n_attrs:
        raise ValueError("attrs_per_item cannot exceed the number of attributes")
    rng = np.random.default_rng(seed)

    attrs = np.zeros((n_items, n_attrs))
    for i in range(n_items):
        attrs[i, rng.choice(n_attrs, size=attrs_per_item, replace=False)] = 1.0

    rank = 5
    mixing = rng.normal(0.0, 1.0, (n_attrs, rank))
    item_f = attrs @ mixing / np.sqrt(attrs_per_item)
    item_f += rng.normal(0.0, 0.3, (n_items, rank))
    item_f /= np.maximum(np.linalg.norm(item_f, axis=1, keepdims=True), 1e-12)
    user_f = rng.normal(0.0, 0.9, (n_users, rank))

    mu = 2.5
    user_eff = rng.normal(0.0, 0.5, n_users)
    item_eff = rng.normal(0.0, 0.5, n_items)

    n_ratings = int(round(density * n_users * n_items))
    if n_ratings == 0:
        raise ValueError("density yields zero ratings")
    cells = rng.choice(n_users * n_items, size=n_ratings, replace=False)
    users = cells // n_items
    items = cells % n_items
    values = mu + user_eff[users] + item_eff[items] + np.einsum(
        "ij,ij->i", user_f[users], item_f[items]
    )
    values = np.clip(np.round(values), 0.0, 5.0)

    ds = RatingsDataset(
        n_users=n_users,
        n_items=n_items,
        users=users,
        items=items,
        ratings=values,
        rating_min=0.0,
        rating_max=5.0,
    )
    labels = tuple(f"attr{d:04d}" for d in range(n_attrs))
    return ds, AttributeMatrix(attrs, labels)


def write_triplets(ds: RatingsDataset, path) -> None:
    """Write the canonical triplet TSV: user, item, rating with 0-based indices."""
    with open(path, "w") as fh:
        for u, i, r in zip(ds.users, ds.items, ds.ratings):
            fh.write(f"{u}\t{i}\t{r:.17g}\n")
