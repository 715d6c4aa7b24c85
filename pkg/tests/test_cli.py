import numpy as np
import pytest

import cbmf
from cbmf.cli import main

from conftest import write_mini_movielens


@pytest.fixture()
def triplet_data(tmp_path):
    """A generic triplet file plus an attribute incidence file."""
    rng = np.random.default_rng(0)
    ds, attrs = cbmf.synth_recipes(seed=2, n_users=40, n_items=25, n_attrs=8,
                                   density=0.3, attrs_per_item=2)
    ratings = tmp_path / "ratings.tsv"
    cbmf.write_triplets(ds, ratings)
    attr_file = tmp_path / "attrs.csv"
    with open(attr_file, "w") as fh:
        for i in range(attrs.n_items):
            for d in np.flatnonzero(attrs.matrix[i]):
                fh.write(f"{i},{attrs.labels[d]}\n")
    return ratings, attr_file, ds, attrs


class TestSummary:
    def test_triplet_file(self, triplet_data, capsys):
        ratings, attr_file, ds, attrs = triplet_data
        code = main(["summary", "--ratings", str(ratings), "--attributes", str(attr_file)])
        out = capsys.readouterr().out
        assert code == 0
        assert f"n_users\t{ds.n_users}" in out
        assert f"n_ratings\t{len(ds)}" in out
        assert "%" in out

    def test_mini_movielens_directory(self, tmp_path, capsys):
        d = write_mini_movielens(tmp_path / "ml", n_items=1)
        code = main(["summary", "--ratings", str(d)])
        out = capsys.readouterr().out
        assert code == 0
        assert "n_users\t2" in out
        assert "n_attrs\t19" in out

    def test_bad_path_exits_2(self, tmp_path, capsys):
        code = main(["summary", "--ratings", str(tmp_path / "nope.csv")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_env_var_default_directory(self, tmp_path, capsys, monkeypatch):
        d = write_mini_movielens(tmp_path / "ml", n_items=1)
        monkeypatch.setenv("CBMF_DATA_DIR", str(d))
        assert main(["summary"]) == 0
        monkeypatch.delenv("CBMF_DATA_DIR")
        assert main(["summary"]) == 2


class TestTrain:
    def test_train_writes_model_and_trace(self, triplet_data, tmp_path, capsys):
        ratings, attr_file, ds, attrs = triplet_data
        model_path = tmp_path / "bl.model"
        trace_path = tmp_path / "trace.csv"
        code = main([
            "train", "--algo", "bl", "--k", "3", "--lambda", "2", "--eta", "0.01",
            "--epsilon", "1e-4", "--ratings", str(ratings),
            "--out", str(model_path), "--trace", str(trace_path), "--seed", "4",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert model_path.exists() and trace_path.exists()
        assert "lambda\t2" in out
        loaded = cbmf.load_model(model_path)
        assert loaded.model.variant is cbmf.Variant.BL
        assert loaded.hyper.seed == 4

    def test_defaults_come_from_profile_schedule(self, triplet_data, tmp_path, capsys):
        ratings, attr_file, ds, attrs = triplet_data
        model_path = tmp_path / "bl.model"
        code = main([
            "train", "--algo", "bl", "--k", "5", "--max-iters", "3",
            "--ratings", str(ratings), "--out", str(model_path),
        ])
        out = capsys.readouterr().out
        assert code == 0
        # triplet files default to the sparser benchmark's schedule
        assert "lambda\t8.0" in out
        assert "eta\t0.002" in out

    def test_directory_input_uses_movies_schedule(self, tmp_path, capsys):
        lines = [f"{u}\t{i}\t{(u + i) % 5 + 1}\t0" for u in range(1, 7)
                 for i in range(1, 9) if (u * i) % 3]
        d = write_mini_movielens(tmp_path / "ml", ratings_lines=lines, n_items=8)
        code = main([
            "train", "--algo", "bl", "--k", "5", "--init", "random",
            "--max-iters", "3", "--ratings", str(d),
            "--out", str(tmp_path / "m.model"),
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "lambda\t25.0" in out
        assert "eta\t0.002" in out

    def test_rc_without_attributes_exits_2(self, triplet_data, tmp_path, capsys):
        ratings, _, _, _ = triplet_data
        code = main([
            "train", "--algo", "rc", "--k", "3", "--lambda", "2", "--eta", "0.01",
            "--ratings", str(ratings), "--out", str(tmp_path / "rc.model"),
        ])
        assert code == 2
        assert "RC requires attributes" in capsys.readouterr().err

    def test_gamma_auto_recorded_for_tg(self, triplet_data, tmp_path):
        ratings, attr_file, ds, attrs = triplet_data
        model_path = tmp_path / "tg.model"
        code = main([
            "train", "--algo", "tg", "--k", "2", "--lambda", "2", "--eta", "0.005",
            "--gamma", "auto", "--max-iters", "5",
            "--ratings", str(ratings), "--attributes", str(attr_file),
            "--out", str(model_path),
        ])
        assert code == 0
        loaded = cbmf.load_model(model_path)
        assert loaded.hyper.item_scale == pytest.approx(ds.n_users / (3 * ds.n_items))

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_numeric_failure_exits_3(self, triplet_data, tmp_path, capsys):
        ratings, _, _, _ = triplet_data
        code = main([
            "train", "--algo", "bl", "--k", "3", "--lambda", "2", "--eta", "1e200",
            "--init", "random", "--ratings", str(ratings),
            "--out", str(tmp_path / "x.model"),
        ])
        assert code == 3
        assert "non-finite" in capsys.readouterr().err

    def test_identical_runs_are_byte_identical(self, triplet_data, tmp_path):
        ratings, attr_file, _, _ = triplet_data
        args = [
            "train", "--algo", "ab", "--k", "2", "--lambda", "2", "--eta", "0.01",
            "--ratings", str(ratings), "--attributes", str(attr_file), "--seed", "9",
        ]
        a, b = tmp_path / "a.model", tmp_path / "b.model"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestEvaluate:
    def test_detail_rows_and_outputs(self, triplet_data, tmp_path, capsys):
        ratings, attr_file, _, _ = triplet_data
        out_dir = tmp_path / "report"
        code = main([
            "evaluate", "--ratings", str(ratings), "--attributes", str(attr_file),
            "--repeats", "2", "--algos", "bl,ab", "--ks", "5", "--seed", "0",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        detail = (out_dir / "detail.csv").read_text().strip().splitlines()
        assert len(detail) == 1 + 4
        assert (out_dir / "summary.csv").exists()
        assert "beats BL" in capsys.readouterr().out

    def test_holdout_one_exits_2(self, triplet_data, tmp_path, capsys):
        ratings, attr_file, _, _ = triplet_data
        code = main([
            "evaluate", "--ratings", str(ratings), "--attributes", str(attr_file),
            "--repeats", "1", "--algos", "bl", "--ks", "3",
            "--holdout", "1.0", "--out-dir", str(tmp_path / "r"),
        ])
        assert code == 2


@pytest.fixture()
def rc_model_file(triplet_data, tmp_path):
    ratings, attr_file, ds, attrs = triplet_data
    path = tmp_path / "rc.model"
    code = main([
        "train", "--algo", "rc", "--k", "3", "--lambda", "2", "--eta", "0.01",
        "--ratings", str(ratings), "--attributes", str(attr_file),
        "--out", str(path),
    ])
    assert code == 0
    return path


@pytest.fixture()
def bl_model_file(triplet_data, tmp_path):
    ratings, _, _, _ = triplet_data
    path = tmp_path / "bl.model"
    code = main([
        "train", "--algo", "bl", "--k", "3", "--lambda", "2", "--eta", "0.01",
        "--ratings", str(ratings), "--out", str(path),
    ])
    assert code == 0
    return path


class TestAttrSim:
    def test_top_pairs_csv(self, rc_model_file, tmp_path, capsys):
        out = tmp_path / "sim.csv"
        code = main(["attr-sim", "--model", str(rc_model_file), "--top", "5",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "label1,label2,cosine"
        assert len(lines) == 6

    def test_non_rc_model_exits_2(self, bl_model_file, capsys):
        code = main(["attr-sim", "--model", str(bl_model_file), "--top", "3"])
        assert code == 2
        assert "attribute factors absent" in capsys.readouterr().err

    def test_labels_file(self, rc_model_file, tmp_path, capsys):
        labels = tmp_path / "labels.txt"
        labels.write_text("\n".join(f"ingredient{i}" for i in range(8)) + "\n")
        code = main(["attr-sim", "--model", str(rc_model_file), "--top", "2",
                     "--labels", str(labels)])
        out = capsys.readouterr().out
        assert code == 0
        assert "ingredient" in out


class TestItemMap:
    def test_coordinate_rows(self, bl_model_file, tmp_path, capsys):
        items = tmp_path / "items.txt"
        items.write_text("0\tfirst\n3\tsecond\n7\tthird\n")
        code = main(["item-map", "--model", str(bl_model_file), "--items", str(items)])
        out = capsys.readouterr().out.strip().splitlines()
        assert code == 0
        assert out[0] == "label,pc1,pc2"
        assert len(out) == 4
        assert out[1].startswith("first,")

    def test_rc_model_exits_2(self, rc_model_file, tmp_path, capsys):
        items = tmp_path / "items.txt"
        items.write_text("0\n")
        code = main(["item-map", "--model", str(rc_model_file), "--items", str(items)])
        assert code == 2
        assert "item factors absent" in capsys.readouterr().err
