"""MTD estimation and simplex utilities"""

from .mtd import (
    LambdaMatrix,
    MtdModel,
    TransitionTensor,
    estimate_lambda,
    estimate_transition_matrices,
    fit_mtd,
    load_model,
    mtd_log_likelihood,
    mtd_simulate,
    one_step_distribution,
    save_model,
)
from .simplex import project_box_simplex, project_simplex

__all__ = [
    "LambdaMatrix",
    "MtdModel",
    "TransitionTensor",
    "estimate_lambda",
    "estimate_transition_matrices",
    "fit_mtd",
    "load_model",
    "mtd_log_likelihood",
    "mtd_simulate",
    "one_step_distribution",
    "save_model",
    "project_box_simplex",
    "project_simplex",
]
