"""Comparison methods: NGP and AP ablations, Laplace mechanism and randomized response."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DatasetKind, LabeledDataset
from .errors import NoFeasibleEpsilon, WrongKind
from .gan import GanRun, PerturbedDataset, train_prgan
from .models import accuracy


def train_ngp(train_set, target_clf, sensitive_clf, hyper, **kw) -> GanRun:
    """PR-GAN without the GAN discriminator: objective ``alpha*L_Adv + beta*L_hinge``."""
    return train_prgan(train_set, target_clf, sensitive_clf, hyper, use_discriminator=False, method="NGP", **kw)


def train_ap(train_set, target_clf, sensitive_clf, hyper, **kw) -> GanRun:
    """PR-GAN without the target classifier: ``L_GAN - alpha*lambda*CE(D_P) + beta*L_hinge``.

    ``target_clf`` is accepted for a uniform trainer signature and ignored.
    """
    return train_prgan(train_set, None, sensitive_clf, hyper, use_target=False, method="AP", **kw)


TRAINERS = {"PRGAN": train_prgan, "NGP": train_ngp, "AP": train_ap}


@dataclass(frozen=True)
class DPParams:
    """Privacy parameter of one of the two mechanisms.

    Laplace: ``epsilon = 1/b``. Randomized response: ``epsilon = ln((1+p)/(1-p))``.
    """

    mechanism: str
    epsilon: float
    laplace_scale: float | None = None
    rr_truth_prob: float | None = None

    @classmethod
    def laplace(cls, b: float) -> DPParams:
        if not b > 0:
            raise ValueError("Laplace scale must be positive")
        return cls("laplace", 1.0 / b, laplace_scale=b)

    @classmethod
    def randomized_response(cls, p: float) -> DPParams:
        if not 0 <= p < 1:
            raise ValueError("truth probability must be in [0, 1)")
        return cls("randomized_response", math.log((1 + p) / (1 - p)), rr_truth_prob=p)

    @classmethod
    def for_epsilon(cls, epsilon: float, kind: DatasetKind) -> DPParams:
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        if DatasetKind(kind) is DatasetKind.BINARY:
            # ln((1+p)/(1-p)) = eps  <=>  p = tanh(eps/2)
            p = math.tanh(epsilon / 2)
            return cls("randomized_response", epsilon, rr_truth_prob=p)
        return cls("laplace", epsilon, laplace_scale=1.0 / epsilon)

    def to_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def laplace_noise(shape, b: float, rng) -> np.ndarray:
    return rng.laplace(0.0, b, size=shape)


def laplace_perturb(dataset: LabeledDataset, b: float, seed: int) -> PerturbedDataset:
    """Independent Laplace(b) noise per feature, then clipped back to [0, 1]."""
    if dataset.kind is not DatasetKind.REAL_VALUED:
        raise WrongKind("the Laplace mechanism applies to real-valued data")
    params = DPParams.laplace(b)
    rng = np.random.default_rng(seed)
    noisy = dataset.features + laplace_noise(dataset.features.shape, b, rng)
    out = np.clip(noisy, 0.0, 1.0).astype(np.float32)
    return PerturbedDataset(dataset.with_features(out), _sidecar(dataset, params, seed))


def randomized_response(dataset: LabeledDataset, p: float, seed: int) -> PerturbedDataset:
    """Per bit: keep the true value with probability ``p``, else report a fair coin."""
    if dataset.kind is not DatasetKind.BINARY:
        raise WrongKind("randomized response applies to binary data")
    params = DPParams.randomized_response(p)
    rng = np.random.default_rng(seed)
    keep = rng.random(dataset.features.shape) < p
    coin = rng.integers(0, 2, size=dataset.features.shape).astype(np.float32)
    out = np.where(keep, dataset.features, coin).astype(np.float32)
    return PerturbedDataset(dataset.with_features(out), _sidecar(dataset, params, seed))


def _sidecar(dataset, params, seed):
    return {"method": "DP", "dp_params": params.to_dict(), "seed": seed, "source_hash": dataset.content_hash()}


def apply_mechanism(dataset: LabeledDataset, params: DPParams, seed: int) -> PerturbedDataset:
    if params.mechanism == "laplace":
        return laplace_perturb(dataset, params.laplace_scale, seed)
    return randomized_response(dataset, params.rr_truth_prob, seed)


def epsilon_grid(n: int = 20, low: float = 0.01, high: float = 10.0) -> np.ndarray:
    return np.logspace(math.log10(low), math.log10(high), n)


@dataclass
class SweepPoint:
    epsilon: float
    params: DPParams
    acc_target: float
    acc_sensitive: float
    mean_norm: float


@dataclass
class DPSweepResult:
    chosen: SweepPoint
    points: list
    perturbed: PerturbedDataset | None = None
    acc_target: float | None = None
    acc_sensitive: float | None = None

    @property
    def epsilon(self):
        return self.chosen.epsilon


def sweep_points(val_set: LabeledDataset, target_clf, sensitive_clf, epsilons=None, seed: int = 0) -> list:
    """Validation accuracies of the kind-appropriate mechanism at every epsilon."""
    epsilons = epsilon_grid() if epsilons is None else np.asarray(epsilons, dtype=float)
    points = []
    for i, eps in enumerate(epsilons):
        params = DPParams.for_epsilon(float(eps), val_set.kind)
        pert = apply_mechanism(val_set, params, seed + i).dataset
        acc_t = accuracy(target_clf, pert.features, pert.target_labels)
        acc_s = accuracy(sensitive_clf, pert.features, pert.sensitive_labels)
        norm = float(np.linalg.norm(pert.features - val_set.features, axis=1).mean())
        points.append(SweepPoint(float(eps), params, acc_t, acc_s, norm))
    return points


def choose_epsilon(points, threshold: float, prefer: str = "most_noise") -> SweepPoint:
    """Pick an epsilon whose validation Acc(D_L) meets ``threshold``.

    ``prefer="most_noise"`` (default) takes the smallest feasible epsilon, the
    strongest privacy that still passes the utility threshold. ``"least_noise"``
    takes the largest feasible epsilon.
    """
    feasible = [p for p in points if p.acc_target >= threshold]
    if not feasible:
        best = max((p.acc_target for p in points), default=float("nan"))
        raise NoFeasibleEpsilon(f"no epsilon reaches Acc(D_L) >= {threshold} (best {best:.4f})")
    if prefer == "most_noise":
        return min(feasible, key=lambda p: p.epsilon)
    if prefer == "least_noise":
        return max(feasible, key=lambda p: p.epsilon)
    raise ValueError(f"unknown preference {prefer!r}")


def dp_sweep(val_set: LabeledDataset, target_clf, sensitive_clf, threshold: float, test_set=None,
             epsilons=None, seed: int = 0, prefer: str = "most_noise") -> DPSweepResult:
    """Sweep epsilon on ``val_set``, choose per ``threshold``, then report on ``test_set``."""
    points = sweep_points(val_set, target_clf, sensitive_clf, epsilons, seed)
    chosen = choose_epsilon(points, threshold, prefer)
    result = DPSweepResult(chosen, points)
    if test_set is not None:
        result.perturbed = apply_mechanism(test_set, chosen.params, seed + 10_000)
        pert = result.perturbed.dataset
        result.acc_target = accuracy(target_clf, pert.features, pert.target_labels)
        result.acc_sensitive = accuracy(sensitive_clf, pert.features, pert.sensitive_labels)
    return result
