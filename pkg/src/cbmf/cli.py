"""Command-line interface: summary, train, evaluate, attr-sim, item-map.

Exit codes: 0 on success, 2 on usage or input errors, 3 when training aborts
on a non-finite objective.  When --ratings is omitted, the CBMF_DATA_DIR
environment variable supplies the dataset path.  A directory is read as a
MovieLens-100K-style dataset; a file is read as generic user/item/rating
triplets (with --attributes for content data).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .datasets import (
    parse_attributes,
    parse_movielens,
    parse_triplets_indexed,
    summarize,
)
from .errors import DataFormatError, TrainingAbortedError
from .estimator import ContentBoostedMF
from .evaluation import compare_table, default_schedule, run_experiment
from .factorization import Variant
from .insight import item_map, top_pairs
from .model_io import load_model, save_model

DATA_DIR_ENV = "CBMF_DATA_DIR"
ALGO_CHOICES = ("bl", "ab", "gab", "tg", "rc")


def _resolve_ratings_path(args) -> Path:
    if args.ratings:
        return Path(args.ratings)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    raise DataFormatError(f"no --ratings given and {DATA_DIR_ENV} is not set")


def _load_dataset(args):
    """Returns (dataset, attrs_or_None, profile)."""
    path = _resolve_ratings_path(args)
    if path.is_dir():
        ds, attrs = parse_movielens(path)
        return ds, attrs, "movies"
    ds, _, item_idx = parse_triplets_indexed(path, args.rating_min, args.rating_max)
    attrs = None
    if getattr(args, "attributes", None):
        attrs = parse_attributes(args.attributes, item_idx)
    return ds, attrs, "recipes"


def _add_dataset_flags(parser):
    parser.add_argument("--ratings", help="dataset directory or triplet file")
    parser.add_argument("--attributes", help="attribute file for triplet datasets")
    parser.add_argument("--rating-min", type=float, default=0.0,
                        help="rating scale lower bound for triplet files")
    parser.add_argument("--rating-max", type=float, default=5.0,
                        help="rating scale upper bound for triplet files")
    parser.add_argument("--profile", choices=("movies", "recipes"),
                        help="default tuning profile (inferred from the input kind if omitted)")


def cmd_summary(args) -> int:
    ds, attrs, _ = _load_dataset(args)
    s = summarize(ds, attrs)
    print(f"n_users\t{s.n_users}")
    print(f"n_items\t{s.n_items}")
    print(f"n_attrs\t{s.n_attrs}")
    print(f"n_ratings\t{s.n_ratings}")
    print(f"density\t{s.density:.6f} ({100 * s.density:.1f}%)")
    return 0


def _resolve_schedule_entry(args, profile):
    penalty, learning_rate = args.penalty, args.eta
    if penalty is None or learning_rate is None:
        schedule = default_schedule(args.profile or profile)
        if args.k not in schedule:
            raise DataFormatError(
                f"no default penalty/learning-rate for K={args.k}; "
                "pass --lambda and --eta explicitly"
            )
        default_penalty, default_eta = schedule[args.k]
        penalty = default_penalty if penalty is None else penalty
        learning_rate = default_eta if learning_rate is None else learning_rate
    return penalty, learning_rate


def cmd_train(args) -> int:
    ds, attrs, profile = _load_dataset(args)
    if args.algo == "rc" and attrs is None:
        raise DataFormatError("RC requires attributes")
    if args.algo in ("ab", "gab", "tg") and attrs is None:
        raise DataFormatError(f"{args.algo} requires attributes")
    penalty, learning_rate = _resolve_schedule_entry(args, profile)
    gamma = "auto" if args.gamma == "auto" else float(args.gamma)
    est = ContentBoostedMF(
        variant=args.algo,
        n_factors=args.k,
        penalty=penalty,
        item_scale=gamma,
        learning_rate=learning_rate,
        tol=args.epsilon,
        max_iters=args.max_iters,
        min_shared=args.c,
        sharpness=args.theta,
        init=args.init,
        svd_blend=args.kappa,
        noise_scale=args.sigma,
        ridge="auto" if args.ridge == "auto" else float(args.ridge),
        seed=args.seed,
    )
    est.fit(ds, attrs)
    n_attrs = attrs.n_attrs if attrs is not None else 0
    save_model(args.out, est.model_, est.hyper_, fingerprint=ds.fingerprint(),
               n_attrs=n_attrs)
    if args.trace:
        est.trace_.write_csv(args.trace)
    for key, value in (
        ("algo", args.algo), ("k", args.k), ("lambda", penalty),
        ("gamma", est.gamma_), ("eta", learning_rate), ("epsilon", args.epsilon),
        ("c", args.c), ("theta", args.theta), ("max_iters", args.max_iters),
        ("init", args.init), ("kappa", args.kappa), ("sigma", args.sigma),
        ("seed", args.seed), ("iterations", est.n_iter_),
        ("diverged", est.diverged_), ("objective", est.objective_),
        ("out", args.out),
    ):
        print(f"{key}\t{value}")
    return 0


def cmd_evaluate(args) -> int:
    ds, attrs, profile = _load_dataset(args)
    variants = [v.strip() for v in args.algos.split(",") if v.strip()]
    k_list = [int(k) for k in args.ks.split(",") if k.strip()]
    report = run_experiment(
        ds, attrs, variants, k_list,
        repeats=args.repeats,
        base_seed=args.seed,
        holdout=args.holdout,
        profile=args.profile or profile,
        tol=args.epsilon,
        min_shared=args.c,
        sharpness=args.theta,
        noise_scale=args.sigma,
        calibrate=not args.no_calibration,
        dataset_id=args.dataset_id or profile,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_detail_csv(out_dir / "detail.csv")
    report.write_summary_csv(out_dir / "summary.csv")
    table = compare_table(report)
    (out_dir / "comparison.txt").write_text(table + "\n")
    print(table)
    return 0


def _read_labels(path, expected: int):
    labels = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    if len(labels) != expected:
        raise DataFormatError(
            f"{path}: expected {expected} labels, found {len(labels)}"
        )
    return labels


def cmd_attr_sim(args) -> int:
    loaded = load_model(args.model)
    if loaded.model.variant is not Variant.RC:
        raise DataFormatError("attribute factors absent (model is not rc)")
    b = loaded.model.B
    labels = (_read_labels(args.labels, b.shape[0]) if args.labels
              else [f"a{d}" for d in range(b.shape[0])])
    report = top_pairs(b, labels, args.top, args.direction)
    if args.out:
        report.write_csv(args.out)
    else:
        print("label1,label2,cosine")
        for a, b_label, value in report.pairs:
            print(f"{a},{b_label},{value:.4f}")
    return 0


def _read_item_selection(path):
    selection, labels = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split(",")
            try:
                selection.append(int(parts[0]))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: bad item index") from exc
            labels.append(parts[1].strip() if len(parts) > 1 else parts[0])
    if not selection:
        raise DataFormatError(f"{path}: no items listed")
    return selection, labels


def cmd_item_map(args) -> int:
    loaded = load_model(args.model)
    if loaded.model.Q is None:
        raise DataFormatError("item factors absent (rc models have no per-item factors)")
    selection, labels = _read_item_selection(args.items)
    mapping = item_map(loaded.model.Q, labels, selection)
    if args.out:
        mapping.write_csv(args.out)
    else:
        print("label,pc1,pc2")
        for label, (x, y) in zip(mapping.labels, mapping.coords):
            print(f"{label},{x:.6f},{y:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbmf",
        description="Content-boosted matrix factorization for collaborative filtering",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summary", help="print dataset summary statistics")
    _add_dataset_flags(p)
    p.set_defaults(handler=cmd_summary)

    p = sub.add_parser("train", help="train one model and write a model file")
    _add_dataset_flags(p)
    p.add_argument("--algo", choices=ALGO_CHOICES, required=True)
    p.add_argument("--k", type=int, default=5, help="latent dimension")
    p.add_argument("--lambda", dest="penalty", type=float, default=None,
                   help="penalty weight (defaults from the profile schedule)")
    p.add_argument("--eta", type=float, default=None,
                   help="learning rate (defaults from the profile schedule)")
    p.add_argument("--gamma", default="auto", help="item-penalty scale or 'auto'")
    p.add_argument("--c", type=int, default=1, help="shared-attribute threshold")
    p.add_argument("--theta", type=float, default=1.0, help="logistic sharpness")
    p.add_argument("--epsilon", type=float, default=0.005,
                   help="relative-improvement stopping threshold")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--init", choices=("svd", "random", "mixed"), default="mixed")
    p.add_argument("--kappa", type=float, default=0.5, help="SVD blend weight")
    p.add_argument("--sigma", type=float, default=0.01, help="random init scale")
    p.add_argument("--ridge", default="auto", help="ridge for the rc attribute mapping")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--trace", help="optional objective trace CSV")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="run the repeated holdout comparison")
    _add_dataset_flags(p)
    p.add_argument("--repeats", type=int, default=15)
    p.add_argument("--holdout", type=float, default=0.5)
    p.add_argument("--algos", default="bl,ab,gab,tg,rc",
                   help="comma-separated variant list")
    p.add_argument("--ks", default="5,10,15", help="comma-separated latent dimensions")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--epsilon", type=float, default=0.005)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--no-calibration", action="store_true",
                   help="skip initialization calibration, use --kappa 0.5 for all")
    p.add_argument("--dataset-id", help="dataset tag for the report CSVs")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("attr-sim", help="rank attribute pairs by factor cosine")
    p.add_argument("--model", required=True, help="trained rc model file")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--direction", choices=("similar", "dissimilar"), default="similar")
    p.add_argument("--labels", help="file with one attribute label per line")
    p.add_argument("--out", help="output CSV (stdout if omitted)")
    p.set_defaults(handler=cmd_attr_sim)

    p = sub.add_parser("item-map", help="project item factors to 2-D coordinates")
    p.add_argument("--model", required=True, help="trained model file (not rc)")
    p.add_argument("--items", required=True,
                   help="file of item selections: index[\\tlabel] per line")
    p.add_argument("--out", help="output CSV (stdout if omitted)")
    p.set_defaults(handler=cmd_item_map)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except TrainingAbortedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DataFormatError, ValueError, TypeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
