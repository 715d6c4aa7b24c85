"""Text serialization of trained models.

The format is line-oriented: a header of key/value pairs, then an [anova]
section (global mean, user effects, item effects), the user factors under
[P], and the item-side factors under [Q] (or [B] for the
attribute-constrained variant).  Floats are written with 17 significant
digits, which round-trips doubles exactly; writing a reloaded model
reproduces the file byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anova import AnovaModel
from .errors import DataFormatError
from .factorization import FactorModel, Hyperparams, Variant

FORMAT_TAG = "cbmf-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class LoadedModel:
    """A deserialized model plus the header metadata it was saved with."""

    model: FactorModel
    hyper: Hyperparams
    n_attrs: int
    fingerprint: str


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def save_model(path, model: FactorModel, hyper: Hyperparams,
               fingerprint: str = "", n_attrs: int = 0) -> None:
    """Write the model file; hyper.item_scale must already be resolved."""
    side = model.B if model.variant is Variant.RC else model.Q
    if model.variant is Variant.RC:
        n_attrs = side.shape[0]
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"variant {model.variant}",
        f"n_users {model.P.shape[0]}",
        f"n_items {model.anova.n_items}",
        f"n_attrs {n_attrs}",
        f"n_factors {model.n_factors}",
        f"penalty {_fmt(hyper.penalty)}",
        f"item_scale {_fmt(hyper.scale())}",
        f"learning_rate {_fmt(hyper.learning_rate)}",
        f"tol {_fmt(hyper.tol)}",
        f"seed {hyper.seed}",
        f"rating_min {_fmt(model.rating_min)}",
        f"rating_max {_fmt(model.rating_max)}",
        f"fingerprint {fingerprint}",
        "[anova]",
        _fmt(model.anova.mu),
    ]
    lines.extend(_fmt(v) for v in model.anova.alpha)
    lines.extend(_fmt(v) for v in model.anova.beta)
    lines.append("[P]")
    lines.extend(" ".join(_fmt(v) for v in row) for row in model.P)
    lines.append("[B]" if model.variant is Variant.RC else "[Q]")
    lines.extend(" ".join(_fmt(v) for v in row) for row in side)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _take(lines, n, what):
    if len(lines) < n:
        raise DataFormatError(f"model file truncated while reading {what}")
    return lines[:n], lines[n:]


def load_model(path) -> LoadedModel:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line]
    if not lines or not lines[0].startswith(FORMAT_TAG):
        raise DataFormatError(f"{path}: not a model file")
    version = lines[0].split()[1]
    if int(version) != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version}")
    lines = lines[1:]

    header: dict[str, str] = {}
    while lines and not lines[0].startswith("["):
        key, _, value = lines[0].partition(" ")
        header[key] = value
        lines = lines[1:]
    try:
        variant = Variant(header["variant"])
        n_users = int(header["n_users"])
        n_items = int(header["n_items"])
        n_attrs = int(header["n_attrs"])
        n_factors = int(header["n_factors"])
        hyper = Hyperparams(
            n_factors=n_factors,
            penalty=float(header["penalty"]),
            item_scale=float(header["item_scale"]),
            learning_rate=float(header["learning_rate"]),
            tol=float(header["tol"]),
            seed=int(header["seed"]),
        )
        rating_min = float(header["rating_min"])
        rating_max = float(header["rating_max"])
        fingerprint = header.get("fingerprint", "")
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing header field {exc}") from exc

    if not lines or lines[0] != "[anova]":
        raise DataFormatError(f"{path}: expected [anova] section")
    lines = lines[1:]
    block, lines = _take(lines, 1 + n_users + n_items, "anova coefficients")
    mu = float(block[0])
    alpha = np.array([float(v) for v in block[1:1 + n_users]])
    beta = np.array([float(v) for v in block[1 + n_users:]])

    if not lines or lines[0] != "[P]":
        raise DataFormatError(f"{path}: expected [P] section")
    lines = lines[1:]
    block, lines = _take(lines, n_users, "user factors")
    p = np.array([[float(v) for v in row.split()] for row in block])

    side_tag = "[B]" if variant is Variant.RC else "[Q]"
    if not lines or lines[0] != side_tag:
        raise DataFormatError(f"{path}: expected {side_tag} section")
    lines = lines[1:]
    side_rows = n_attrs if variant is Variant.RC else n_items
    block, lines = _take(lines, side_rows, "item-side factors")
    side = np.array([[float(v) for v in row.split()] for row in block])
    if lines:
        raise DataFormatError(f"{path}: trailing content after factor sections")
    if p.shape != (n_users, n_factors) or side.shape != (side_rows, n_factors):
        raise DataFormatError(f"{path}: factor section shape does not match header")

    model = FactorModel(
        variant=variant,
        P=p,
        Q=None if variant is Variant.RC else side,
        B=side if variant is Variant.RC else None,
        anova=AnovaModel(mu, alpha, beta),
        rating_min=rating_min,
        rating_max=rating_max,
    )
    return LoadedModel(model=model, hyper=hyper, n_attrs=n_attrs, fingerprint=fingerprint)
