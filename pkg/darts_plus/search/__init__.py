from darts_plus.search.bilevel import (
    EpochRecord,
    SearchState,
    alpha_step,
    batch_loss,
    evaluate,
    feature_dispersion,
    run_search,
    weight_step,
)
from darts_plus.search.config import DataConfig, SearchConfig
from darts_plus.search.data import Dataset, make_texture_dataset, split_data

__all__ = [
    "EpochRecord",
    "SearchState",
    "alpha_step",
    "batch_loss",
    "evaluate",
    "feature_dispersion",
    "run_search",
    "weight_step",
    "DataConfig",
    "SearchConfig",
    "Dataset",
    "make_texture_dataset",
    "split_data",
]
