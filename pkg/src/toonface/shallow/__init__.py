"""Classical recognizers over bottleneck features."""

from .scaler import MinMaxScaler
from .svm import (
    BinarySvm,
    SvmModel,
    SvmParams,
    dual_objective,
    fit_platt,
    platt_probability,
    rbf_kernel,
    smo_solve,
    svm_train,
)
from .gb import GbModel, GbParams, RegressionTree, gb_train
from .gridsearch import (
    GridSearchResult,
    grid_search_cv,
    stratified_folds,
)

__all__ = [
    "BinarySvm",
    "GbModel",
    "GbParams",
    "GridSearchResult",
    "MinMaxScaler",
    "RegressionTree",
    "SvmModel",
    "SvmParams",
    "dual_objective",
    "fit_platt",
    "gb_train",
    "grid_search_cv",
    "platt_probability",
    "rbf_kernel",
    "smo_solve",
    "stratified_folds",
    "svm_train",
]
