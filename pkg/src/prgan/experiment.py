"""Shared state of one experiment: data, slices and the frozen slice-A classifiers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import ClassifierConfig
from .data import LabeledDataset
from .models import TrainedModel, build_classifier, dataset_kind_of, train_classifier
from .splits import SplitPlan, slice_dataset

log = logging.getLogger(__name__)


@dataclass
class ExperimentContext:
    """Dataset, slice plan and the D_L / D_P pair trained on slice A.

    Slice roles: A trains the classifiers (A.test selects their checkpoint),
    B trains and tunes perturbation methods, C is used only for reporting.
    """

    dataset: LabeledDataset
    plan: SplitPlan
    target_clf: TrainedModel
    sensitive_clf: TrainedModel
    classifier_config: ClassifierConfig
    extra_models: dict = field(default_factory=dict)

    @property
    def arch_kind(self) -> str:
        return dataset_kind_of(self.dataset.name)

    @property
    def tuning_set(self) -> LabeledDataset:
        return self.dataset.subset(self.plan.B.train)

    @property
    def report_set(self) -> LabeledDataset:
        return self.dataset.subset(self.plan.C.test)

    @property
    def report_train_set(self) -> LabeledDataset:
        return self.dataset.subset(self.plan.C.train)

    def classifiers(self, arch_id: str = "M1") -> tuple[TrainedModel, TrainedModel]:
        """(target, sensitive) classifiers of architecture ``arch_id`` on original slice-A data."""
        if arch_id == "M1":
            return self.target_clf, self.sensitive_clf
        if arch_id not in self.extra_models:
            self.extra_models[arch_id] = train_pair(self.dataset, self.plan, self.classifier_config, arch_id)
        return self.extra_models[arch_id]


def train_task_classifier(dataset: LabeledDataset, train_idx, val_idx, task: str, config: ClassifierConfig,
                          arch_id: str = "M1", labels=None) -> TrainedModel:
    """One classifier for ``task`` ("target" or "sensitive") on the given records."""
    y = dataset.target_labels if task == "target" else dataset.sensitive_labels
    if labels is not None:
        y = labels
    k = dataset.target_classes if task == "target" else dataset.sensitive_classes
    spec = build_classifier(arch_id, dataset_kind_of(dataset.name), k, width=config.width,
                            input_shape=dataset.input_shape)
    return train_classifier(spec, dataset.features[train_idx], y[train_idx], config,
                            val_x=dataset.features[val_idx], val_y=y[val_idx],
                            meta={"task": task, "arch_id": arch_id, "source": dataset.name})


def train_pair(dataset: LabeledDataset, plan: SplitPlan, config: ClassifierConfig, arch_id: str = "M1"):
    out = []
    for task in ("target", "sensitive"):
        log.info("training %s %s classifier on slice A", arch_id, task)
        out.append(train_task_classifier(dataset, plan.A.train, plan.A.test, task, config, arch_id))
    return tuple(out)


def build_context(dataset: LabeledDataset, seed: int = 0, config: ClassifierConfig | None = None,
                  plan: SplitPlan | None = None) -> ExperimentContext:
    config = config or ClassifierConfig(seed=seed)
    plan = plan or slice_dataset(dataset, seed)
    target, sensitive = train_pair(dataset, plan, config)
    return ExperimentContext(dataset, plan, target, sensitive, config)


def original_accuracies(ctx: ExperimentContext, dataset: LabeledDataset | None = None):
    from .models import accuracy

    ds = ctx.report_set if dataset is None else dataset
    return (accuracy(ctx.target_clf, ds.features, ds.target_labels),
            accuracy(ctx.sensitive_clf, ds.features, ds.sensitive_labels))


def seeds_for(base: int, n: int) -> list[int]:
    return [int(s) for s in np.arange(base, base + n)]
