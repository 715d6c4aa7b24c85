import numpy as np
import pytest
from sklearn.base import clone

import cbmf

from conftest import random_attrs, random_dataset


@pytest.fixture(scope="module")
def small_data():
    rng = np.random.default_rng(0)
    ds = random_dataset(rng, 15, 12, density=0.5, lo=1, hi=5)
    attrs = random_attrs(rng, 12, 5)
    return ds, attrs


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        est = cbmf.ContentBoostedMF(variant="ab", n_factors=7, penalty=3.0)
        params = est.get_params()
        assert params["variant"] == "ab"
        assert params["n_factors"] == 7
        rebuilt = cbmf.ContentBoostedMF(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        est = cbmf.ContentBoostedMF()
        est.set_params(variant="rc", penalty=9.0)
        assert est.variant == "rc"
        assert est.penalty == 9.0

    def test_clone(self, small_data):
        ds, attrs = small_data
        est = cbmf.ContentBoostedMF(variant="tg", n_factors=2, learning_rate=0.01)
        est.fit(ds, attrs)
        fresh = clone(est)
        assert not hasattr(fresh, "model_")
        assert fresh.variant == "tg"


class TestFit:
    def test_all_variants_fit_and_predict(self, small_data):
        ds, attrs = small_data
        for variant in ("bl", "ab", "gab", "tg", "rc"):
            est = cbmf.ContentBoostedMF(variant=variant, n_factors=2, penalty=2.0,
                                        learning_rate=0.01, tol=1e-4, seed=3)
            est.fit(ds, attrs if variant != "bl" else None)
            preds = est.predict(ds.users[:10], ds.items[:10])
            assert preds.shape == (10,)
            assert np.all(np.isfinite(preds))
            if variant == "rc":
                assert est.B_ is not None and est.Q_ is None
            else:
                assert est.Q_ is not None and est.B_ is None

    def test_content_variant_requires_attrs(self, small_data):
        ds, _ = small_data
        with pytest.raises(ValueError, match="attribute"):
            cbmf.ContentBoostedMF(variant="ab").fit(ds)

    def test_seed_determinism(self, small_data):
        ds, attrs = small_data
        kw = dict(variant="gab", n_factors=2, penalty=2.0, learning_rate=0.01,
                  tol=1e-4, seed=11)
        a = cbmf.ContentBoostedMF(**kw).fit(ds, attrs)
        b = cbmf.ContentBoostedMF(**kw).fit(ds, attrs)
        assert np.array_equal(a.P_, b.P_)
        assert np.array_equal(a.Q_, b.Q_)

    def test_init_strategies_differ(self, small_data):
        ds, attrs = small_data
        fits = {}
        for strategy in ("svd", "random", "mixed"):
            est = cbmf.ContentBoostedMF(variant="bl", n_factors=2, penalty=2.0,
                                        learning_rate=1e-4, tol=1e-3, max_iters=2,
                                        init=strategy, seed=5)
            fits[strategy] = est.fit(ds).P_
        assert not np.array_equal(fits["svd"], fits["random"])
        assert not np.array_equal(fits["svd"], fits["mixed"])
        assert not np.array_equal(fits["random"], fits["mixed"])

    def test_auto_gamma_resolved_per_variant(self, small_data):
        ds, attrs = small_data
        bl = cbmf.ContentBoostedMF(variant="bl", n_factors=2, learning_rate=1e-4,
                                   max_iters=2).fit(ds)
        tg = cbmf.ContentBoostedMF(variant="tg", n_factors=2, learning_rate=1e-4,
                                   max_iters=2).fit(ds, attrs)
        rc = cbmf.ContentBoostedMF(variant="rc", n_factors=2, learning_rate=1e-4,
                                   max_iters=2).fit(ds, attrs)
        assert bl.gamma_ == pytest.approx(ds.n_users / ds.n_items)
        assert tg.gamma_ == pytest.approx(ds.n_users / (3 * ds.n_items))
        assert rc.gamma_ == pytest.approx(ds.n_users / attrs.n_attrs)

    def test_explicit_gamma_override(self, small_data):
        ds, _ = small_data
        est = cbmf.ContentBoostedMF(variant="bl", n_factors=2, item_scale=0.77,
                                    learning_rate=1e-4, max_iters=2).fit(ds)
        assert est.gamma_ == 0.77

    def test_unfitted_predict_rejected(self):
        with pytest.raises(RuntimeError, match="not fitted"):
            cbmf.ContentBoostedMF().predict([0], [0])

    def test_predict_one_matches_vector(self, small_data):
        ds, attrs = small_data
        est = cbmf.ContentBoostedMF(variant="rc", n_factors=2, penalty=2.0,
                                    learning_rate=0.01, tol=1e-4).fit(ds, attrs)
        u, i = int(ds.users[0]), int(ds.items[0])
        assert est.predict_one(u, i) == est.predict([u], [i])[0]
