"""Group sequential designs for multivariate endpoints with a scalar summary statistic."""

from ._mgst import (
    ConfigError,
    InfeasibleDesign,
    SummaryStatistic,
    __version__,
    attained_power,
    conditional_law,
    evaluate_design,
    information,
    linear_statistic,
    mvn_density,
    norm_cdf,
    norm_quantile,
    region_of,
    sample_size,
    signed_product_statistic,
    solve_design,
    stage_targets,
)

__all__ = [
    "ConfigError",
    "InfeasibleDesign",
    "SummaryStatistic",
    "__version__",
    "attained_power",
    "conditional_law",
    "evaluate_design",
    "information",
    "linear_statistic",
    "mvn_density",
    "norm_cdf",
    "norm_quantile",
    "region_of",
    "sample_size",
    "signed_product_statistic",
    "solve_design",
    "stage_targets",
]
