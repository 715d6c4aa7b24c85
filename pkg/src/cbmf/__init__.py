"""Content-boosted matrix factorization for collaborative filtering.

Rating prediction by regularized latent factor models whose item side can be
informed by binary item attributes: through alignment penalties that pull
content-similar items together in the latent space, or through a regression
constraint that makes item factors linear functions of the attributes.
"""

from .anova import AnovaModel, baseline_predict, fit_anova, residualize
from .datasets import (
    AttributeMatrix,
    DatasetSummary,
    RatingsDataset,
    parse_attributes,
    parse_movielens,
    parse_triplets,
    split_holdout,
    summarize,
    synth_recipes,
    write_triplets,
)
from .errors import DataFormatError, TrainingAbortedError
from .estimator import ContentBoostedMF
from .evaluation import clamp, compare_table, mae, run_experiment
from .factorization import (
    FactorModel,
    Hyperparams,
    TraceLog,
    Variant,
    all_gradients,
    grad_attr_factors,
    grad_item,
    grad_user,
    objective,
    predict,
    predict_pairs,
    resolve_gamma,
    train,
)
from .initialization import (
    CalibrationResult,
    InitConfig,
    calibrate_kappa,
    map_b,
    mixed_init,
    random_init,
    svd_init,
)
from .insight import ItemMap, SimilarityReport, attribute_cosine, item_map, top_pairs
from .model_io import LoadedModel, load_model, save_model
from .weights import (
    NeighborSets,
    WeightMatrix,
    cosine_weights,
    logistic_kernel,
    logistic_weights,
    neighbor_sets,
    shared_count,
)

__version__ = "0.1.0"

__all__ = [
    "AnovaModel", "AttributeMatrix", "CalibrationResult", "ContentBoostedMF",
    "DataFormatError", "DatasetSummary", "FactorModel", "Hyperparams",
    "InitConfig", "ItemMap", "LoadedModel", "NeighborSets", "RatingsDataset",
    "SimilarityReport", "TraceLog", "TrainingAbortedError", "Variant",
    "WeightMatrix", "all_gradients", "attribute_cosine", "baseline_predict",
    "calibrate_kappa", "clamp", "compare_table", "cosine_weights",
    "fit_anova", "grad_attr_factors", "grad_item", "grad_user", "item_map",
    "load_model", "logistic_kernel", "logistic_weights", "mae", "map_b",
    "mixed_init", "neighbor_sets", "objective", "parse_attributes",
    "parse_movielens", "parse_triplets", "predict", "predict_pairs",
    "random_init", "residualize", "resolve_gamma", "run_experiment",
    "save_model", "shared_count", "split_holdout", "summarize", "svd_init",
    "synth_recipes", "top_pairs", "train", "write_triplets",
]
