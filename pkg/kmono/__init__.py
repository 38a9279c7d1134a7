from . import (
    compounding,
    configs,
    errors,
    grid_monotone,
    interval_partition,
    messages,
    multilinear,
    subset_core,
    univariate,
)

__all__ = [
    "compounding",
    "configs",
    "errors",
    "grid_monotone",
    "interval_partition",
    "messages",
    "multilinear",
    "subset_core",
    "univariate",
]
