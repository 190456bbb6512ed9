"""Interferometric graph transform.

Learned complex spectral representations for signals on graphs: a unitary
Fourier operator built by Hilbert-pairing Laplacian eigenvectors, cascades of
non-expansive filter banks with modulus and averaging, layer-wise projected
gradient training, and linear-classifier evaluation.
"""

from .budgets import ConstraintBudgets, constraint_budgets, tightness
from .datasets import (Dataset, gen_diffusion_dataset, gen_graph, gen_torus_textures,
                       parse_idx, sbm_graph)
from .fourier import PairMap, SpectralFourier, build_fourier, pairing_cost
from .graph import (GraphSpec, LaplacianEig, build_laplacian, eigendecompose, laplacian_eig,
                    pad_to_odd, parse_edge_list)
from .matching import max_weight_perfect_matching
from .pipeline import evaluate_pipeline
from .svm import ClassifierModel, fit_linear_svm
from .training import (TrainConfig, empirical_loss, greedy_train, loss_gradient,
                       project_onto_constraint, train_layer)
from .transform import (AveragingOp, FilterBank, IGTModel, Representation, energy_profile,
                        igt_transform, layer_forward, make_averaging, normalize_to_extremal)

__all__ = [
    "AveragingOp", "ClassifierModel", "ConstraintBudgets", "Dataset", "FilterBank",
    "GraphSpec", "IGTModel", "LaplacianEig", "PairMap", "Representation", "SpectralFourier",
    "TrainConfig", "build_fourier", "build_laplacian", "constraint_budgets", "eigendecompose",
    "empirical_loss", "energy_profile", "evaluate_pipeline", "fit_linear_svm",
    "gen_diffusion_dataset", "gen_graph", "gen_torus_textures", "greedy_train",
    "igt_transform", "laplacian_eig", "layer_forward", "loss_gradient", "make_averaging",
    "max_weight_perfect_matching", "normalize_to_extremal", "pad_to_odd", "pairing_cost",
    "parse_edge_list", "parse_idx", "project_onto_constraint", "sbm_graph", "tightness",
    "train_layer",
]
