"""Privacy-preserving data perturbation with a generator trained against frozen classifiers."""

from .config import ClassifierConfig, HyperParams, RunConfig
from .data import DatasetKind, LabeledDataset
from .gan import perturb, train_prgan, tune

__all__ = ["ClassifierConfig", "DatasetKind", "HyperParams", "LabeledDataset", "RunConfig",
           "perturb", "train_prgan", "tune"]
__version__ = "0.1.0"
