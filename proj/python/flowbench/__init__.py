"""Flow-based intrusion detection benchmark."""

from ._flowbench import (
    AeModel,
    FlowbenchError,
    LdaModel,
    PcaModel,
    ae_fit,
    builtin_schemas,
    class_weights,
    evaluate,
    fit_predict,
    lda_fit,
    load_dataset,
    minmax_scale,
    pca_fit,
    report,
    roc_auc,
    run_experiment,
    stratified_kfold,
    synth,
)

__all__ = [
    "AeModel",
    "FlowbenchError",
    "LdaModel",
    "PcaModel",
    "ae_fit",
    "builtin_schemas",
    "class_weights",
    "evaluate",
    "fit_predict",
    "lda_fit",
    "load_dataset",
    "minmax_scale",
    "pca_fit",
    "report",
    "roc_auc",
    "run_experiment",
    "stratified_kfold",
    "synth",
]
