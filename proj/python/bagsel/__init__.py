"""Bagging-ensemble model selection toolkit (python bindings)."""

from ._core import (
    BagselError,
    Model,
    averaged_gini,
    classification_report,
    confusion_matrix,
    gini_index,
    gini_pvalue,
    hidden_neuron_candidates,
    label_targets,
    nguyen_widrow_beta,
    normalize_scores,
    optimal_threshold,
    pca_project,
    predict_classes,
    stratified_split,
    synthetic_blobs,
    __version__,
)

__all__ = [
    "BagselError",
    "Model",
    "averaged_gini",
    "classification_report",
    "confusion_matrix",
    "gini_index",
    "gini_pvalue",
    "hidden_neuron_candidates",
    "label_targets",
    "nguyen_widrow_beta",
    "normalize_scores",
    "optimal_threshold",
    "pca_project",
    "predict_classes",
    "stratified_split",
    "synthetic_blobs",
    "__version__",
]
