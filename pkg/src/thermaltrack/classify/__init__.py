"""People-count classification: RBF-SVM, k-means baseline, evaluation."""

from .dataset import CLASSES, Dataset, split_per_class
from .evaluation import (
    DEFAULT_C_GRID,
    DEFAULT_GAMMA_GRID,
    CVResult,
    EvalReport,
    cross_validate,
    evaluate,
    format_report,
    stratified_folds,
)
from .kmeans import KMeansModel, kmeans_cluster, purity
from .svm import (
    MODEL_HEADER,
    SvmModel,
    format_model,
    load_model,
    parse_model,
    predict,
    save_model,
    train_svm,
)

__all__ = [
    "CLASSES", "Dataset", "split_per_class", "DEFAULT_C_GRID", "DEFAULT_GAMMA_GRID",
    "CVResult", "EvalReport", "cross_validate", "evaluate", "format_report", "stratified_folds",
    "KMeansModel", "kmeans_cluster", "purity", "MODEL_HEADER", "SvmModel",
    "format_model", "load_model", "parse_model", "predict", "save_model", "train_svm",
]
