"""Scikit-learn style estimator wrapping the full training pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .anova import fit_anova, residualize
from .factorization import (
    Hyperparams,
    Variant,
    predict_pairs,
    resolve_gamma,
    train,
)
from .initialization import (
    InitConfig,
    derive_seed,
    map_b,
    mixed_init,
    random_init,
    svd_init,
)
from .validation import check_paired, check_ratings
from .weights import cosine_weights, logistic_weights, neighbor_sets


class ContentBoostedMF(BaseEstimator):
    """Matrix factorization recommender with optional content boosting.

    Fits user/item main effects first, then factorizes the residual ratings
    with the chosen objective variant by alternating gradient descent.
    Predictions add the main effects back and are left unclamped.

    Parameters
    ----------
    variant : str
        One of "bl", "ab", "gab", "tg", "rc".  All but "bl" need an
        attribute matrix at fit time.
    n_factors : int
        Latent dimension of the factorization.
    penalty : float
        Regularization weight on the factor norms.
    item_scale : float or "auto"
        Scale of the item-side penalty relative to the user side; "auto"
        picks the variant's standard ratio from the dataset dimensions.
    learning_rate, tol, max_iters :
        Gradient step size, relative-improvement stopping threshold, and
        iteration cap.
    min_shared : int
        Shared-attribute threshold for the "ab" and "gab" variants.
    sharpness : float
        Logistic sharpness of the "gab" weights.
    init : str
        "svd", "random", or "mixed" initialization.
    svd_blend : float
        Weight of the SVD part in mixed initialization (1 = pure SVD).
    noise_scale : float
        Standard deviation of the random initialization component.
    ridge : float or "auto"
        Ridge used when mapping item factors to attribute factors for "rc".
    seed : int
        Seed for every random component.
    """

    def __init__(self, variant="bl", n_factors=5, penalty=25.0, item_scale="auto",
                 learning_rate=0.002, tol=0.005, max_iters=500, min_shared=1,
                 sharpness=1.0, init="mixed", svd_blend=0.5, noise_scale=0.01,
                 ridge="auto", seed=0):
        self.variant = variant
        self.n_factors = n_factors
        self.penalty = penalty
        self.item_scale = item_scale
        self.learning_rate = learning_rate
        self.tol = tol
        self.max_iters = max_iters
        self.min_shared = min_shared
        self.sharpness = sharpness
        self.init = init
        self.svd_blend = svd_blend
        self.noise_scale = noise_scale
        self.ridge = ridge
        self.seed = seed

    def _init_config(self) -> InitConfig:
        return InitConfig(
            strategy=self.init,
            svd_blend=self.svd_blend,
            noise_scale=self.noise_scale,
            ridge=self.ridge,
            seed=self.seed,
        )

    def _initial_state(self, cfg: InitConfig, resid, variant, attrs):
        k = self.n_factors
        side_rows = attrs.n_attrs if variant is Variant.RC else resid.n_items
        if cfg.strategy == "random":
            p0 = random_init(resid.n_users, k, cfg.noise_scale, derive_seed(cfg.seed, 0))
            x0 = random_init(side_rows, k, cfg.noise_scale, derive_seed(cfg.seed, 1))
            return p0, x0
        p_svd, q_svd = svd_init(resid, k)
        x_svd = map_b(attrs, q_svd, cfg.ridge) if variant is Variant.RC else q_svd
        if cfg.strategy == "svd":
            return p_svd, x_svd
        p0 = mixed_init(p_svd, cfg.noise_scale, cfg.svd_blend, derive_seed(cfg.seed, 0))
        x0 = mixed_init(x_svd, cfg.noise_scale, cfg.svd_blend, derive_seed(cfg.seed, 1))
        return p0, x0

    def fit(self, ratings, attributes=None):
        """Fit on a RatingsDataset, with an AttributeMatrix for content variants."""
        ds = check_ratings(ratings)
        variant = Variant(self.variant)
        attrs = None
        if variant is not Variant.BL:
            if attributes is None:
                raise ValueError(f"variant {variant} requires an attribute matrix")
            attrs = check_paired(ds, attributes)

        weights = None
        if variant is Variant.AB:
            weights = neighbor_sets(attrs, self.min_shared)
        elif variant is Variant.GAB:
            weights = logistic_weights(attrs, self.min_shared, self.sharpness)
        elif variant is Variant.TG:
            weights = cosine_weights(attrs)

        anova_model = fit_anova(ds)
        resid = residualize(ds, anova_model)
        gamma = resolve_gamma(
            variant, ds.n_users, ds.n_items,
            attrs.n_attrs if attrs is not None else None,
            override=None if self.item_scale == "auto" else self.item_scale,
        )
        hyper = Hyperparams(
            n_factors=self.n_factors,
            penalty=self.penalty,
            item_scale=gamma,
            learning_rate=self.learning_rate,
            tol=self.tol,
            max_iters=self.max_iters,
            min_shared=self.min_shared,
            sharpness=self.sharpness,
            seed=self.seed,
        )
        init_state = self._initial_state(self._init_config(), resid, variant, attrs)
        model, trace = train(
            variant, resid, hyper, init_state,
            weights=weights,
            attrs=attrs if variant is Variant.RC else None,
            anova=anova_model,
            rating_range=(ds.rating_min, ds.rating_max),
        )
        self.model_ = model
        self.trace_ = trace
        self.hyper_ = hyper
        self.anova_ = anova_model
        self.P_ = model.P
        self.Q_ = model.Q
        self.B_ = model.B
        self.gamma_ = gamma
        self.n_iter_ = trace.n_iters
        self.diverged_ = trace.diverged
        self.objective_ = float(trace.objectives[-1])
        self._attrs = attrs
        return self

    def predict(self, users, items) -> np.ndarray:
        """Predicted ratings for parallel user/item index arrays (unclamped)."""
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted")
        attrs = self._attrs if self.model_.variant is Variant.RC else None
        return predict_pairs(self.model_, users, items, attrs)

    def predict_one(self, user: int, item: int) -> float:
        return float(self.predict([user], [item])[0])
