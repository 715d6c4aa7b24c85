import numpy as np
import pytest

import cbmf


class TestAttributeCosine:
    def test_parallel_rows(self):
        b = np.array([[1.0, 2.0], [2.0, 4.0]])
        assert cbmf.attribute_cosine(b, 0, 1) == pytest.approx(1.0)

    def test_antiparallel_rows(self):
        b = np.array([[1.0, 0.0], [-2.0, 0.0]])
        assert cbmf.attribute_cosine(b, 0, 1) == pytest.approx(-1.0)

    def test_orthogonal_rows(self):
        b = np.array([[1.0, 0.0], [0.0, 3.0]])
        assert cbmf.attribute_cosine(b, 0, 1) == pytest.approx(0.0)

    def test_zero_row_rejected(self):
        b = np.array([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(ValueError, match="zero"):
            cbmf.attribute_cosine(b, 0, 1)

    def test_symmetry_and_scale_invariance(self):
        rng = np.random.default_rng(0)
        b = rng.normal(0, 1, (6, 4))
        for _ in range(20):
            d, d2 = rng.integers(0, 6, 2)
            if d == d2:
                continue
            c1, c2 = rng.uniform(0.1, 10, 2)
            scaled = b.copy()
            scaled[d] *= c1
            scaled[d2] *= c2
            assert abs(cbmf.attribute_cosine(b, d, d2)
                       - cbmf.attribute_cosine(b, d2, d)) < 1e-12
            assert abs(cbmf.attribute_cosine(scaled, d, d2)
                       - cbmf.attribute_cosine(b, d, d2)) < 1e-12


class TestTopPairs:
    def test_two_attributes_one_pair(self):
        b = np.array([[1.0, 0.0], [0.0, 1.0]])
        report = cbmf.top_pairs(b, ["x", "y"], count=10)
        assert len(report.pairs) == 1

    def test_identical_rows_rank_first(self):
        rng = np.random.default_rng(1)
        b = rng.normal(0, 1, (5, 3))
        b[3] = b[1]
        report = cbmf.top_pairs(b, list("abcde"), count=3)
        top = report.pairs[0]
        assert {top[0], top[1]} == {"b", "d"}
        assert top[2] == pytest.approx(1.0)

    def test_negated_row_ranks_first_dissimilar(self):
        rng = np.random.default_rng(2)
        b = rng.normal(0, 1, (5, 3))
        b[4] = -b[0]
        report = cbmf.top_pairs(b, list("abcde"), count=2, direction="dissimilar")
        top = report.pairs[0]
        assert {top[0], top[1]} == {"a", "e"}
        assert top[2] == pytest.approx(-1.0)

    def test_fewer_than_two_attributes_rejected(self):
        with pytest.raises(ValueError):
            cbmf.top_pairs(np.ones((1, 3)), ["only"], count=1)

    def test_csv_output(self, tmp_path):
        b = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        report = cbmf.top_pairs(b, ["x", "y", "z"], count=3)
        out = tmp_path / "sim.csv"
        report.write_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "label1,label2,cosine"
        assert len(lines) == 4


class TestItemMap:
    def test_axis_aligned_two_dim_is_identity(self):
        # exactly uncorrelated columns with decreasing variance: the principal
        # axes coincide with the coordinate axes
        rng = np.random.default_rng(3)
        a = rng.normal(size=40)
        a -= a.mean()
        b = rng.normal(size=40)
        b -= b.mean()
        b -= (a @ b / (a @ a)) * a
        a *= 5.0 / a.std()
        b *= 1.0 / b.std()
        q = np.column_stack([a, b])
        mapped = cbmf.item_map(q, [str(i) for i in range(40)], list(range(40)))
        centered = q - q.mean(axis=0)
        # projection must equal the centered coordinates up to per-axis sign
        for axis in range(2):
            col = mapped.coords[:, axis]
            ref = centered[:, axis]
            assert min(np.max(np.abs(col - ref)), np.max(np.abs(col + ref))) < 1e-8

    def test_duplicate_items_map_identically(self):
        rng = np.random.default_rng(4)
        q = rng.normal(0, 1, (10, 4))
        q[7] = q[2]
        mapped = cbmf.item_map(q, ["a", "b"], [2, 7])
        assert np.allclose(mapped.coords[0], mapped.coords[1], atol=1e-12)

    def test_projected_covariance_is_diagonal(self):
        rng = np.random.default_rng(5)
        q = rng.normal(0, 1, (30, 5))
        mapped = cbmf.item_map(q, [str(i) for i in range(30)], list(range(30)))
        cov = np.cov(mapped.coords.T)
        assert abs(cov[0, 1]) < 1e-8

    def test_invariant_under_item_reordering(self):
        rng = np.random.default_rng(6)
        q = rng.normal(0, 1, (12, 4))
        perm = rng.permutation(12)
        selection = [3, 5, 9]
        labels = ["x", "y", "z"]
        direct = cbmf.item_map(q, labels, selection)
        inv = np.argsort(perm)
        permuted = cbmf.item_map(q[perm], labels, [int(inv[i]) for i in selection])
        assert np.allclose(direct.coords, permuted.coords, atol=1e-10)

    def test_one_dim_factors_rejected(self):
        with pytest.raises(ValueError):
            cbmf.item_map(np.ones((5, 1)), ["a"], [0])

    def test_empty_selection_rejected(self):
        with pytest.raises(ValueError):
            cbmf.item_map(np.ones((5, 3)), [], [])

    def test_csv_output(self, tmp_path):
        rng = np.random.default_rng(7)
        q = rng.normal(0, 1, (6, 3))
        mapped = cbmf.item_map(q, ["a", "b"], [0, 1])
        out = tmp_path / "map.csv"
        mapped.write_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "label,pc1,pc2"
        assert len(lines) == 3
