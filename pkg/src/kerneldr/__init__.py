"""Kernel dimension reduction (PCA, LDA, KPCA, SKPCA, KLDA) with linear SVM classification."""
from .classify import (
    EvalReport,
    LinearSvmModel,
    evaluate,
    platt_fit,
    svm_decision,
    svm_fit,
    svm_predict,
)
from .data import Dataset, read_dataset, write_dataset
from .dimred import Projector, fit, transform
from .hsic import LinkSpec, hsic_empirical, link_matrix
from .kernels import KernelSpec, center_gram, cross_gram, gram
from .numerics import EigenPairs, cholesky, gen_eig, sym_eig
from .pipeline import (
    ExperimentConfig,
    alternating_protocol,
    bootstrap_ensemble,
    grid_search,
    lopo_cv,
    run_single,
)
from .synthdata import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Dataset", "EigenPairs", "EvalReport", "ExperimentConfig", "KernelSpec", "LinearSvmModel",
    "LinkSpec", "Projector", "SynthSpec", "alternating_protocol", "bootstrap_ensemble",
    "center_gram", "cholesky", "cross_gram", "evaluate", "fit", "gen_eig", "generate", "gram",
    "grid_search", "hsic_empirical", "link_matrix", "lopo_cv", "platt_fit", "read_dataset",
    "run_single", "svm_decision", "svm_fit", "svm_predict", "sym_eig", "transform",
    "write_dataset",
]
