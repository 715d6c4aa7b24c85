"""Factor-matrix initialization: truncated SVD, Gaussian, and mixtures.

The SVD strategy zero-imputes the missing entries of the normalized rating
matrix, takes the best rank-K approximation, and splits the singular values
evenly between the two factors.  A mixed strategy blends the SVD factors with
Gaussian noise; the blend weight can be calibrated so two model families
start from initializations of matching validation quality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .datasets import AttributeMatrix, RatingsDataset

CONDITION_LIMIT = 1e12
SINGULAR_LIMIT = 1e14


def derive_seed(*key: int) -> int:
    """Deterministic child seed for a tuple of non-negative integers."""
    return int(np.random.SeedSequence(key).generate_state(1)[0])


@dataclass(frozen=True)
class InitConfig:
    """Initialization settings: strategy, blend weight, noise scale, ridge."""

    strategy: str = "mixed"
    svd_blend: float = 0.5
    noise_scale: float = 0.01
    ridge: float | str = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in ("svd", "random", "mixed"):
            raise ValueError(f"unknown init strategy {self.strategy!r}")
        if not 0.0 <= self.svd_blend <= 1.0:
            raise ValueError("svd_blend must lie in [0, 1]")
        if self.noise_scale <= 0.0:
            raise ValueError("noise_scale must be positive")
        if self.ridge != "auto" and float(self.ridge) < 0.0:
            raise ValueError("ridge must be nonnegative or 'auto'")


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> None:
    # Largest-magnitude entry of each left singular vector is made
    # nonnegative, so the decomposition is reproducible across runs.
    for k in range(u.shape[1]):
        j = int(np.argmax(np.abs(u[:, k])))
        if u[j, k] < 0:
            u[:, k] *= -1.0
            vt[k, :] *= -1.0


def svd_init(train: RatingsDataset, n_factors: int) -> tuple[np.ndarray, np.ndarray]:
    """Rank-K SVD factors of the zero-imputed rating matrix.

    Returns (P0, Q0) with P0 = U sqrt(S) and Q0 = V sqrt(S); both have
    orthogonal columns scaled by the shared singular values.
    """
    if n_factors > min(train.n_users, train.n_items):
        raise ValueError(
            f"n_factors={n_factors} exceeds min(n_users, n_items)="
            f"{min(train.n_users, train.n_items)}"
        )
    r = np.zeros((train.n_users, train.n_items))
    r[train.users, train.items] = train.ratings
    u, s, vt = np.linalg.svd(r, full_matrices=False)
    u = np.ascontiguousarray(u[:, :n_factors])
    vt = np.ascontiguousarray(vt[:n_factors, :])
    _fix_signs(u, vt)
    scale = np.sqrt(s[:n_factors])
    return u * scale, vt.T * scale


def map_b(attrs: AttributeMatrix, q0: np.ndarray, ridge: float | str = "auto") -> np.ndarray:
    """Map item factors to attribute factors via least squares on Q ~ A B.

    A plain normal-equation solve is used when A'A is well conditioned and
    there are no more attributes than items; otherwise a ridge term is added,
    defaulting to the median diagonal of A'A.  ridge=0 forces the plain solve
    and raises if the system is singular.
    """
    a = attrs.matrix
    m, d = a.shape
    gram = a.T @ a
    rhs = a.T @ q0
    if ridge == "auto":
        cond = np.linalg.cond(gram)
        use_ridge = d > m or not np.isfinite(cond) or cond > CONDITION_LIMIT
        delta = float(np.median(np.diagonal(gram))) if use_ridge else 0.0
    else:
        delta = float(ridge)
        use_ridge = delta > 0.0
        if not use_ridge:
            cond = np.linalg.cond(gram)
            if not np.isfinite(cond) or cond > SINGULAR_LIMIT:
                raise np.linalg.LinAlgError(
                    f"attribute Gram matrix is singular (cond={cond:.3g}) "
                    "and ridge=0 was forced; use a positive ridge"
                )
    if use_ridge:
        gram = gram + delta * np.eye(d)
    try:
        return scipy.linalg.solve(gram, rhs, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"attribute Gram matrix is singular (ridge={delta}); "
            "use a positive ridge"
        ) from exc


def random_init(rows: int, n_factors: int, noise_scale: float, seed: int) -> np.ndarray:
    """I.i.d. Gaussian matrix with standard deviation noise_scale."""
    if noise_scale <= 0.0:
        raise ValueError("noise_scale must be positive")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, noise_scale, (rows, n_factors))


def mixed_init(svd_part: np.ndarray, noise_scale: float, svd_blend: float, seed: int) -> np.ndarray:
    """Blend kappa * SVD factors with (1 - kappa) * Gaussian noise."""
    if not 0.0 <= svd_blend <= 1.0:
        raise ValueError("svd_blend must lie in [0, 1]")
    noise = random_init(svd_part.shape[0], svd_part.shape[1], noise_scale, seed)
    return svd_blend * svd_part + (1.0 - svd_blend) * noise


@dataclass(frozen=True)
class CalibrationResult:
    """Blend weights chosen for the two model families, with the MAEs reached."""

    kappa_a: float
    kappa_b: float
    matched: bool
    mae_a: float
    mae_b: float


def calibrate_kappa(
    mae_group_a: Callable[[float], float],
    mae_group_b: Callable[[float], float],
    tolerance: float = 0.002,
    max_steps: int = 30,
) -> CalibrationResult:
    """Equalize the initial validation MAE of two model families.

    Each argument maps a blend weight kappa to the validation MAE of that
    family's initial factorization.  The family that is weaker at kappa=1
    stays there; the stronger family's kappa is bisected downward (more
    noise) until the MAEs agree within tolerance.  If even pure noise stays
    stronger than the weaker family, the best effort (kappa=0) is returned
    with matched=False.
    """
    mae_a = float(mae_group_a(1.0))
    mae_b = float(mae_group_b(1.0))
    if abs(mae_a - mae_b) <= tolerance:
        return CalibrationResult(1.0, 1.0, True, mae_a, mae_b)

    a_is_stronger = mae_a < mae_b
    stronger = mae_group_a if a_is_stronger else mae_group_b
    target = mae_b if a_is_stronger else mae_a

    lo, hi = 0.0, 1.0
    kappa = 0.0
    value = float(stronger(kappa))
    matched = abs(value - target) <= tolerance
    if value < target and not matched:
        # Even pure noise beats the weaker family: keep kappa=0, flag it.
        pass
    else:
        for _ in range(max_steps):
            if matched:
                break
            kappa = 0.5 * (lo + hi)
            value = float(stronger(kappa))
            matched = abs(value - target) <= tolerance
            if value > target:
                lo = kappa
            else:
                hi = kappa

    if a_is_stronger:
        return CalibrationResult(kappa, 1.0, matched, value, mae_b)
    return CalibrationResult(1.0, kappa, matched, mae_a, value)
