"""Main-effects normalization: global mean plus user and item effects.

The model r ~ mu + alpha_u + beta_i is fitted by backfitting: the global
mean first, then alternating exact user-effect and item-effect updates until
the largest coefficient change falls below tolerance.  Users or items with no
training ratings keep an effect of zero, which doubles as the cold-start
prediction convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import RatingsDataset

BACKFIT_TOL = 1e-10
BACKFIT_MAX_SWEEPS = 200


@dataclass(frozen=True)
class AnovaModel:
    """Fitted global mean and per-user / per-item additive effects."""

    mu: float
    alpha: np.ndarray
    beta: np.ndarray
    sse_path: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        alpha = np.ascontiguousarray(self.alpha, dtype=np.float64)
        beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        if not (np.isfinite(self.mu) and np.isfinite(alpha).all() and np.isfinite(beta).all()):
            raise ValueError("ANOVA model coefficients must be finite")
        alpha.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_users(self) -> int:
        return len(self.alpha)

    @property
    def n_items(self) -> int:
        return len(self.beta)

    @classmethod
    def zero(cls, n_users: int, n_items: int) -> "AnovaModel":
        return cls(0.0, np.zeros(n_users), np.zeros(n_items))


def _group_mean(index, values, size):
    counts = np.bincount(index, minlength=size)
    sums = np.bincount(index, weights=values, minlength=size)
    out = np.zeros(size)
    np.divide(sums, counts, out=out, where=counts > 0)
    return out


def fit_anova(train: RatingsDataset) -> AnovaModel:
    """Backfit mu, alpha, beta on the observed ratings of the training set.

    Sweep order is fixed (mu once, then alpha given beta, then beta given the
    fresh alpha), which pins down a unique solution for the otherwise
    unidentifiable additive decomposition.  The per-sweep sum of squared
    residuals is recorded on the returned model.
    """
    if len(train) == 0:
        raise ValueError("cannot fit the normalization model on an empty training set")
    u, i, r = train.users, train.items, train.ratings
    mu = float(r.mean())
    alpha = np.zeros(train.n_users)
    beta = np.zeros(train.n_items)
    sse = [float(np.sum((r - mu) ** 2))]
    for _ in range(BACKFIT_MAX_SWEEPS):
        new_alpha = _group_mean(u, r - mu - beta[i], train.n_users)
        delta = np.max(np.abs(new_alpha - alpha))
        alpha = new_alpha
        new_beta = _group_mean(i, r - mu - alpha[u], train.n_items)
        delta = max(delta, np.max(np.abs(new_beta - beta)))
        beta = new_beta
        sse.append(float(np.sum((r - mu - alpha[u] - beta[i]) ** 2)))
        if delta < BACKFIT_TOL:
            break
    return AnovaModel(mu, alpha, beta, sse_path=np.array(sse))


def residualize(ds: RatingsDataset, model: AnovaModel) -> RatingsDataset:
    """Subtract mu + alpha_u + beta_i from every rating.

    The rating-range metadata widens to the interval residuals can attain
    under the model, so downstream range checks stay valid.
    """
    if model.n_users != ds.n_users or model.n_items != ds.n_items:
        raise ValueError("model dimensions do not match the dataset")
    resid = ds.ratings - model.mu - model.alpha[ds.users] - model.beta[ds.items]
    lo = ds.rating_min - model.mu - model.alpha.max(initial=0.0) - model.beta.max(initial=0.0)
    hi = ds.rating_max - model.mu - model.alpha.min(initial=0.0) - model.beta.min(initial=0.0)
    return RatingsDataset(
        n_users=ds.n_users,
        n_items=ds.n_items,
        users=ds.users,
        items=ds.items,
        ratings=resid,
        rating_min=lo,
        rating_max=hi,
    )


def baseline_predict(model: AnovaModel, u: int, i: int) -> float:
    """Main-effects-only prediction mu + alpha_u + beta_i."""
    if not 0 <= u < model.n_users:
        raise IndexError(f"user index {u} out of range")
    if not 0 <= i < model.n_items:
        raise IndexError(f"item index {i} out of range")
    return model.mu + float(model.alpha[u]) + float(model.beta[i])


def baseline_predict_pairs(model: AnovaModel, users, items) -> np.ndarray:
    """Vectorized form of baseline_predict for index arrays."""
    users = np.asarray(users)
    items = np.asarray(items)
    return model.mu + model.alpha[users] + model.beta[items]
