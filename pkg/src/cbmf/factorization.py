"""Latent factor models with content-boosted penalties.

Five objective variants share one alternating gradient descent trainer:

* ``bl``  - plain regularized factorization of the rating matrix,
* ``ab``  - subtracts an alignment reward pulling each item toward the
            centroid of items sharing at least a threshold of attributes,
* ``gab`` - the smooth generalization of ``ab`` with logistic weights,
* ``tg``  - adds a weighted squared-distance penalty between item factors
            (cosine attribute similarity weights),
* ``rc``  - constrains item factors to be linear in the attributes,
            learning one latent vector per attribute instead of per item.

Updates are simultaneous: all gradient directions are evaluated on the
parameter snapshot from the previous iteration and applied at once, so the
result does not depend on the order users or items are visited in.  Gradient
directions follow the halved-scale convention (the proportionality constant
is absorbed into the learning rate).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .anova import AnovaModel, baseline_predict, baseline_predict_pairs
from .datasets import AttributeMatrix, RatingsDataset
from .errors import TrainingAbortedError
from .weights import NeighborSets, WeightMatrix


class Variant(str, Enum):
    BL = "bl"
    AB = "ab"
    GAB = "gab"
    TG = "tg"
    RC = "rc"

    def __str__(self) -> str:
        return self.value


WEIGHTED_VARIANTS = (Variant.AB, Variant.GAB, Variant.TG)


@dataclass(frozen=True)
class Hyperparams:
    """Training settings; item_scale="auto" resolves per variant and dataset."""

    n_factors: int = 5
    penalty: float = 25.0
    item_scale: float | str = "auto"
    learning_rate: float = 0.002
    tol: float = 0.005
    max_iters: int = 500
    min_shared: int = 1
    sharpness: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_factors < 1:
            raise ValueError("n_factors must be at least 1")
        if self.penalty <= 0 or self.learning_rate <= 0 or self.tol <= 0:
            raise ValueError("penalty, learning_rate and tol must be positive")
        if self.item_scale != "auto" and float(self.item_scale) <= 0:
            raise ValueError("item_scale must be positive or 'auto'")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.min_shared < 1:
            raise ValueError("min_shared must be at least 1")
        if self.sharpness <= 0:
            raise ValueError("sharpness must be positive")

    def scale(self) -> float:
        if self.item_scale == "auto":
            raise ValueError("item_scale is unresolved; call resolve_gamma first")
        return float(self.item_scale)


def resolve_gamma(
    variant, n_users: int, n_items: int, n_attrs: int | None = None, override=None
) -> float:
    """Item-penalty scale balancing the two penalty terms.

    Defaults depend on the variant (N/M for bl, ab and gab; N/(3M) for tg to
    cancel the factor of three its distance penalty puts on the item norms;
    N/D for rc).  An explicit override wins.
    """
    variant = Variant(variant)
    if override is not None and override != "auto":
        value = float(override)
        if value <= 0:
            raise ValueError("item_scale override must be positive")
        return value
    if variant is Variant.RC:
        if not n_attrs:
            raise ValueError("rc requires a positive attribute count")
        return n_users / n_attrs
    if n_items <= 0:
        raise ValueError("item count must be positive")
    if variant is Variant.TG:
        return n_users / (3.0 * n_items)
    return n_users / n_items


@dataclass(frozen=True)
class FactorModel:
    """Trained factors plus the normalization model they were fitted under."""

    variant: Variant
    P: np.ndarray
    Q: np.ndarray | None
    B: np.ndarray | None
    anova: AnovaModel
    rating_min: float
    rating_max: float

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.RC:
            if self.B is None or self.Q is not None:
                raise ValueError("rc models carry attribute factors B, not item factors Q")
        else:
            if self.Q is None or self.B is not None:
                raise ValueError(f"{self.variant} models carry item factors Q, not B")
        side = self.B if self.variant is Variant.RC else self.Q
        if side.shape[1] != self.P.shape[1]:
            raise ValueError("factor matrices must share the latent dimension")
        if not (np.isfinite(self.P).all() and np.isfinite(side).all()):
            raise ValueError("factor matrices must be finite")
        if self.anova.n_users != self.P.shape[0]:
            raise ValueError("normalization model does not match the user count")
        if self.variant is not Variant.RC and self.anova.n_items != self.Q.shape[0]:
            raise ValueError("normalization model does not match the item count")

    @property
    def n_factors(self) -> int:
        return self.P.shape[1]


@dataclass(frozen=True)
class TraceLog:
    """Objective trajectory of one training run.

    objectives[0] is the value at the initial state; entry j is the value
    after update j.  rel_improvements[j-1] holds the relative improvement of
    step j and seconds the cumulative wall time when each state was recorded.
    """

    objectives: np.ndarray
    rel_improvements: np.ndarray
    seconds: np.ndarray
    diverged: bool

    @property
    def n_iters(self) -> int:
        return len(self.objectives) - 1

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,objective,rel_improvement,seconds\n")
            for j, (obj, sec) in enumerate(zip(self.objectives, self.seconds)):
                rel = "" if j == 0 else f"{self.rel_improvements[j - 1]:.17g}"
                fh.write(f"{j},{obj:.17g},{rel},{sec:.6f}\n")


def _check_structures(variant, train, weights, attrs):
    variant = Variant(variant)
    if variant in WEIGHTED_VARIANTS:
        if weights is None:
            raise ValueError(f"{variant} requires an item similarity structure")
        if variant is Variant.AB and not isinstance(weights, NeighborSets):
            raise TypeError("ab expects NeighborSets")
        if variant in (Variant.GAB, Variant.TG) and not isinstance(weights, WeightMatrix):
            raise TypeError(f"{variant} expects a WeightMatrix")
        if weights.n_items != train.n_items:
            raise ValueError("similarity structure does not match the item count")
    elif weights is not None:
        raise ValueError(f"{variant} does not take item similarity weights")
    if variant is Variant.RC:
        if attrs is None:
            raise ValueError("rc requires an attribute matrix")
        if attrs.n_items != train.n_items:
            raise ValueError("attribute matrix does not match the item count")
    elif attrs is not None:
        raise ValueError(f"{variant} does not take an attribute matrix")
    return variant


class _Problem:
    """Precomputed structures shared by objective and gradient evaluation."""

    def __init__(self, variant, train: RatingsDataset, hyper: Hyperparams,
                 weights=None, attrs: AttributeMatrix | None = None):
        self.variant = _check_structures(variant, train, weights, attrs)
        self.train = train
        self.lam = hyper.penalty
        self.gamma = hyper.scale()
        self.n_users = train.n_users
        self.n_items = train.n_items

        order = np.lexsort((train.items, train.users))
        indptr = np.concatenate(
            ([0], np.cumsum(np.bincount(train.users, minlength=train.n_users)))
        )
        self._order = order
        self._E = sp.csr_matrix(
            (np.zeros(len(train)), train.items[order], indptr),
            shape=(train.n_users, train.n_items),
        )

        self.mix = None
        self.tg_rows = None
        self.tg_cols = None
        if self.variant is Variant.AB:
            self.mix = weights.centroid_matrix
        elif self.variant in (Variant.GAB, Variant.TG):
            self.mix = weights.matrix
            if self.variant is Variant.TG:
                self.tg_rows = weights.row_sums
                self.tg_cols = weights.matrix.sum(axis=0)
        self.A = attrs.matrix if self.variant is Variant.RC else None

    def item_factors(self, X: np.ndarray) -> np.ndarray:
        """Effective item factors: X itself, or A @ X under the rc constraint."""
        return self.A @ X if self.variant is Variant.RC else X

    def stats(self, P: np.ndarray, X: np.ndarray):
        q_eff = self.item_factors(X)
        t = self.train
        e = t.ratings - np.einsum("ij,ij->i", P[t.users], q_eff[t.items])
        # canonical (user, item) order makes every sum independent of the
        # order the triplets were stored in
        e = e[self._order]
        mixed = self.mix @ q_eff if self.mix is not None else None
        return e, q_eff, mixed

    def objective(self, P, X, stats=None) -> float:
        e, q_eff, mixed = stats if stats is not None else self.stats(P, X)
        value = float(e @ e) + self.lam * float((P * P).sum())
        if self.variant is Variant.TG:
            sq = (q_eff * q_eff).sum(axis=1)
            item_term = sq.sum() + (
                self.tg_rows @ sq + self.tg_cols @ sq - 2.0 * float((mixed * q_eff).sum())
            )
        elif self.variant in (Variant.AB, Variant.GAB):
            item_term = (q_eff * q_eff).sum() - float((mixed * q_eff).sum())
        else:
            item_term = (X * X).sum()
        return value + self.lam * self.gamma * float(item_term)

    def gradients(self, P, X, stats=None):
        e, q_eff, mixed = stats if stats is not None else self.stats(P, X)
        self._E.data = e
        g_p = -(self._E @ q_eff) + self.lam * P
        resid_items = self._E.T @ P
        lg = self.lam * self.gamma
        if self.variant is Variant.RC:
            g_x = -(self.A.T @ resid_items) + lg * X
        elif self.variant is Variant.BL:
            g_x = -resid_items + lg * X
        elif self.variant is Variant.TG:
            g_x = -resid_items + lg * (
                (1.0 + 2.0 * self.tg_rows)[:, None] * X - 2.0 * mixed
            )
        else:
            g_x = -resid_items + lg * (X - mixed)
        return g_p, g_x


def _check_state(train, hyper, variant, P, X, attrs):
    k = hyper.n_factors
    if P.shape != (train.n_users, k):
        raise ValueError(f"P must have shape ({train.n_users}, {k}), got {P.shape}")
    rows = attrs.n_attrs if Variant(variant) is Variant.RC else train.n_items
    if X.shape != (rows, k):
        raise ValueError(f"item-side factors must have shape ({rows}, {k}), got {X.shape}")


def objective(variant, train, P, X, hyper, weights=None, attrs=None) -> float:
    """Value of the variant's objective at factors (P, X).

    X holds the item factors Q, or the attribute factors B for rc.
    """
    return _Problem(variant, train, hyper, weights, attrs).objective(
        np.asarray(P, dtype=np.float64), np.asarray(X, dtype=np.float64)
    )


def all_gradients(variant, train, P, X, hyper, weights=None, attrs=None):
    """Gradient directions for every row of P and of the item-side factors."""
    return _Problem(variant, train, hyper, weights, attrs).gradients(
        np.asarray(P, dtype=np.float64), np.asarray(X, dtype=np.float64)
    )


def grad_user(variant, u, train, P, X, hyper, attrs=None) -> np.ndarray:
    """Gradient direction for one user's latent vector.

    Identical across bl, ab, gab and tg; under rc the effective item factors
    are the attribute rows mapped through B.
    """
    variant = Variant(variant)
    items_u, r_u = train.rated_by(u)
    if variant is Variant.RC:
        if attrs is None:
            raise ValueError("rc requires an attribute matrix")
        q_sel = attrs.matrix[items_u] @ X
    else:
        q_sel = X[items_u]
    e_u = r_u - q_sel @ P[u]
    return -(e_u[:, None] * q_sel).sum(axis=0) + hyper.penalty * P[u]


def grad_item(variant, i, train, P, Q, hyper, weights=None) -> np.ndarray:
    """Gradient direction for one item's latent vector (not defined for rc)."""
    variant = Variant(variant)
    if variant is Variant.RC:
        raise ValueError("rc has no per-item gradient; use grad_attr_factors")
    _check_structures(variant, train, weights, None)
    users_i, r_i = train.raters_of(i)
    p_sel = P[users_i]
    e_i = r_i - p_sel @ Q[i]
    data = -(e_i[:, None] * p_sel).sum(axis=0)
    lg = hyper.penalty * hyper.scale()
    if variant is Variant.BL:
        return data + lg * Q[i]
    if variant is Variant.AB:
        nbrs = weights.neighbors[i]
        centroid = Q[nbrs].mean(axis=0) if len(nbrs) else np.zeros(Q.shape[1])
        return data + lg * (Q[i] - centroid)
    if variant is Variant.GAB:
        return data + lg * (Q[i] - weights.matrix[i] @ Q)
    row_sum = weights.row_sums[i]
    return data + lg * ((1.0 + 2.0 * row_sum) * Q[i] - 2.0 * (weights.matrix[i] @ Q))


def grad_attr_factors(train, P, B, attrs, hyper) -> np.ndarray:
    """Gradient direction for the full attribute-factor matrix under rc."""
    q_eff = attrs.matrix @ B
    e = train.ratings - np.einsum("ij,ij->i", P[train.users], q_eff[train.items])
    resid_items = np.zeros((train.n_items, B.shape[1]))
    np.add.at(resid_items, train.items, e[:, None] * P[train.users])
    return -(attrs.matrix.T @ resid_items) + hyper.penalty * hyper.scale() * B


def train(
    variant,
    train_data: RatingsDataset,
    hyper: Hyperparams,
    init_state,
    weights=None,
    attrs: AttributeMatrix | None = None,
    anova: AnovaModel | None = None,
    rating_range: tuple[float, float] | None = None,
) -> tuple[FactorModel, TraceLog]:
    """Run alternating gradient descent from init_state until convergence.

    init_state is (P0, Q0), or (P0, B0) for rc.  Each iteration evaluates
    both gradient directions on the current snapshot, then applies both
    steps.  Training stops when the relative objective improvement drops
    below hyper.tol, at hyper.max_iters, or - with the divergence flag set -
    as soon as the objective increases.  A non-finite objective aborts.

    Returns the fitted model (with the supplied normalization model attached)
    and the objective trace.
    """
    variant = Variant(variant)
    if hyper.item_scale == "auto":
        n_attrs = attrs.n_attrs if attrs is not None else None
        hyper = replace(
            hyper,
            item_scale=resolve_gamma(variant, train_data.n_users, train_data.n_items, n_attrs),
        )
    problem = _Problem(variant, train_data, hyper, weights, attrs)
    p, x = init_state
    p = np.array(p, dtype=np.float64)
    x = np.array(x, dtype=np.float64)
    _check_state(train_data, hyper, variant, p, x, attrs)
    eta = hyper.learning_rate
    start = time.perf_counter()

    stats = problem.stats(p, x)
    value = problem.objective(p, x, stats)
    if not np.isfinite(value):
        raise TrainingAbortedError(0, eta)
    objectives = [value]
    rels: list[float] = []
    seconds = [time.perf_counter() - start]
    diverged = False

    for _ in range(hyper.max_iters):
        g_p, g_x = problem.gradients(p, x, stats)
        p -= eta * g_p
        x -= eta * g_x
        stats = problem.stats(p, x)
        new_value = problem.objective(p, x, stats)
        if not np.isfinite(new_value):
            raise TrainingAbortedError(len(objectives), eta)
        rel = (value - new_value) / value if value != 0.0 else 0.0
        objectives.append(new_value)
        rels.append(rel)
        seconds.append(time.perf_counter() - start)
        if new_value > value:
            diverged = True
            break
        value = new_value
        if rel < hyper.tol:
            break

    if anova is None:
        anova = AnovaModel.zero(train_data.n_users, train_data.n_items)
    if rating_range is None:
        rating_range = (train_data.rating_min, train_data.rating_max)
    model = FactorModel(
        variant=variant,
        P=p,
        Q=None if variant is Variant.RC else x,
        B=x if variant is Variant.RC else None,
        anova=anova,
        rating_min=float(rating_range[0]),
        rating_max=float(rating_range[1]),
    )
    trace = TraceLog(
        objectives=np.array(objectives),
        rel_improvements=np.array(rels),
        seconds=np.array(seconds),
        diverged=diverged,
    )
    return model, trace


def _check_bounds(n: int, idx, kind: str) -> np.ndarray:
    idx = np.asarray(idx)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"{kind} index out of range")
    return idx


def predict(model: FactorModel, u: int, i: int, attrs: AttributeMatrix | None = None) -> float:
    """Predicted rating for one pair: latent inner product plus the
    normalization add-back.  No clamping is applied here."""
    base = baseline_predict(model.anova, u, i)
    if model.variant is Variant.RC:
        if attrs is None:
            raise ValueError("rc predictions require the attribute matrix")
        q_i = attrs.matrix[i] @ model.B
    else:
        q_i = model.Q[i]
    return base + float(model.P[u] @ q_i)


def predict_pairs(model: FactorModel, users, items, attrs: AttributeMatrix | None = None) -> np.ndarray:
    """Vectorized predict over parallel index arrays."""
    users = _check_bounds(model.P.shape[0], users, "user")
    items = _check_bounds(model.anova.n_items, items, "item")
    base = baseline_predict_pairs(model.anova, users, items)
    if model.variant is Variant.RC:
        if attrs is None:
            raise ValueError("rc predictions require the attribute matrix")
        q_eff = attrs.matrix @ model.B
    else:
        q_eff = model.Q
    return base + np.einsum("ij,ij->i", model.P[users], q_eff[items])
