"""Generator/discriminator training against frozen target and sensitive classifiers.

One trainer covers PR-GAN and its two ablations through feature flags:
``use_discriminator=False`` drops the GAN discriminator (NGP) and
``use_target=False`` drops the target classifier (AP). Everything else is shared.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import losses
from .config import HyperParams
from .data import DatasetKind, LabeledDataset
from .errors import Divergence, FrozenModelMutated, NoFeasibleCandidate, ShapeMismatch
from .models import (
    GeneratorModel,
    TrainedModel,
    build_network,
    dataset_kind_of,
    discriminator_spec,
    generator_spec,
)
from .splits import validation_split

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "step", "L_D", "L_GAN", "L_Adv", "L_target", "L_sensitive", "L_hinge", "L_G")


@dataclass
class GanRun:
    generator: GeneratorModel
    discriminator: TrainedModel | None
    log: list[dict]
    hyper: HyperParams
    method: str = "PRGAN"


def _kind_for(dataset: LabeledDataset) -> str:
    try:
        return dataset_kind_of(dataset.name)
    except KeyError:
        return "vector"


def default_specs(dataset: LabeledDataset):
    kind = _kind_for(dataset)
    return generator_spec(kind, dataset.input_shape), discriminator_spec(kind, dataset.input_shape)


def recompute_total(row: dict, hyper: HyperParams) -> float:
    """Recombine a log row's components into the generator objective."""
    return row.get("L_GAN", 0.0) + hyper.alpha * row["L_Adv"] + hyper.beta_hinge * row["L_hinge"]


def train_prgan(train_set: LabeledDataset, target_clf: TrainedModel | None, sensitive_clf: TrainedModel,
                hyper: HyperParams, *, use_discriminator: bool = True, use_target: bool = True,
                gen_spec=None, disc_spec=None, method: str = "PRGAN", nonsaturating: bool = True,
                binarize: bool | None = None) -> GanRun:
    """Alternate discriminator and generator updates for ``hyper.epochs`` passes.

    Each iteration runs ``steps_per_side`` discriminator updates, then
    ``steps_per_side`` generator updates. The frozen classifiers are verified
    unchanged after every epoch.

    Binary datasets are published thresholded at 0.5 (see :func:`perturb`). With
    ``binarize`` (default: on for binary data) training sees the same thresholded
    records, with gradients passed straight through the threshold.

    The log records the stated losses. With ``nonsaturating=True`` (default) the
    update steps descend the cross-entropy discriminator loss and ``-log D(G(x))``
    instead, which have the same optimum but do not stall when the discriminator
    saturates; ``False`` descends the logged losses directly.
    """
    if use_target and target_clf is None:
        raise ValueError("target classifier required unless use_target=False")
    g_spec_default, d_spec_default = default_specs(train_set)
    g_spec = gen_spec or g_spec_default
    d_spec = disc_spec or d_spec_default
    if int(np.prod(g_spec.input_shape)) != train_set.n_features:
        raise ShapeMismatch(f"generator expects {g_spec.input_shape}, data has {train_set.n_features} features")

    frozen = {"sensitive": sensitive_clf}
    if use_target:
        frozen["target"] = target_clf
    before = {k: m.checksum() for k, m in frozen.items()}
    dl_net = target_clf.network() if use_target else None
    dp_net = sensitive_clf.network()

    G = build_network(g_spec, hyper.seed)
    opt_g = torch.optim.Adam(G.parameters(), lr=hyper.g_lr, betas=(0.5, 0.999))
    D = opt_d = None
    if use_discriminator:
        D = build_network(d_spec, hyper.seed + 1)
        opt_d = torch.optim.Adam(D.parameters(), lr=hyper.d_lr, betas=(0.5, 0.999))

    X = torch.from_numpy(np.array(train_set.features))
    yl = torch.from_numpy(np.array(train_set.target_labels))
    yp = torch.from_numpy(np.array(train_set.sensitive_labels))
    n, bs = len(X), min(hyper.batch_size, len(X))
    gen = torch.Generator().manual_seed(hyper.seed)
    if binarize is None:
        binarize = train_set.kind is DatasetKind.BINARY

    def generate(x):
        out = G(x)
        if binarize:
            out = out + ((out >= 0.5).to(out.dtype) - out).detach()
        return out

    def extra_batch():
        return torch.randint(n, (bs,), generator=gen)

    rows, step, last_d = [], 0, None
    for epoch in range(hyper.epochs):
        G.train()
        perm = torch.randperm(n, generator=gen)
        for start in range(0, n, bs):
            batch = perm[start:start + bs]
            if use_discriminator:
                D.train()
                for k in range(hyper.steps_per_side):
                    idx = batch if k == 0 else extra_batch()
                    real = X[idx]
                    with torch.no_grad():
                        fake = generate(real)
                    fake_z, real_z = D(fake, logits=True), D(real, logits=True)
                    l_d = losses.discriminator_loss_from_logits(fake_z, real_z)
                    step_loss = (losses.discriminator_surrogate_from_logits(fake_z, real_z)
                                 if nonsaturating else l_d)
                    opt_d.zero_grad()
                    step_loss.backward()
                    opt_d.step()
                    last_d = l_d.item()
                D.eval()
            for k in range(hyper.steps_per_side):
                idx = batch if k == 0 else extra_batch()
                real = X[idx]
                fake = generate(real)
                row = {"epoch": epoch, "step": step}
                gan = torch.zeros((), dtype=torch.float64)
                gan_step = gan
                if use_discriminator:
                    fake_z = D(fake, logits=True)
                    gan = losses.gan_generator_loss_from_logits(fake_z).double()
                    gan_step = (losses.gan_generator_surrogate_from_logits(fake_z).double()
                                if nonsaturating else gan)
                    row["L_D"] = last_d
                    row["L_GAN"] = gan.item()
                adv = torch.zeros((), dtype=torch.float64)
                if use_target:
                    l_t = losses.cross_entropy_from_logits(dl_net(fake, logits=True), yl[idx]).double()
                    adv = adv + l_t
                    row["L_target"] = l_t.item()
                l_s = losses.cross_entropy_from_logits(dp_net(fake, logits=True), yp[idx]).double()
                adv = adv - hyper.lambda_tradeoff * l_s
                row["L_sensitive"] = l_s.item()
                hinge = losses.hinge_loss(fake, real, hyper.hinge_cap).double()
                total = losses.generator_total_loss(gan, adv, hinge, hyper.alpha, hyper.beta_hinge)
                step_total = total if gan_step is gan else losses.generator_total_loss(
                    gan_step, adv, hinge, hyper.alpha, hyper.beta_hinge)
                row["L_Adv"] = adv.item()
                row["L_hinge"] = hinge.item()
                row["L_G"] = total.item()
                if not all(math.isfinite(v) for k_, v in row.items() if v is not None):
                    raise Divergence(f"{method}: non-finite loss at epoch {epoch} step {step}",
                                     rows[-1] if rows else row)
                opt_g.zero_grad()
                step_total.backward()
                opt_g.step()
                rows.append(row)
                step += 1
        for name, model in frozen.items():
            if model.checksum() != before[name]:
                raise FrozenModelMutated(f"{name} classifier changed during {method} training (epoch {epoch})")

    G.eval()
    meta = {"method": method, "hyper": hyper.to_dict(), "epochs": hyper.epochs, "seed": hyper.seed,
            "source": train_set.name, "role": "generator", "binarized": bool(binarize)}
    generator = GeneratorModel.from_network(G, meta)
    disc = None
    if use_discriminator:
        D.eval()
        disc = TrainedModel.from_network(D, {**meta, "role": "discriminator"})
    return GanRun(generator, disc, rows, hyper, method)


# --------------------------------------------------------------------------- perturbation

@dataclass(eq=False)
class PerturbedDataset:
    """Perturbed copy of a dataset; record ``i`` perturbs source record ``i``."""

    dataset: LabeledDataset
    provenance: dict = field(default_factory=dict)

    @property
    def features(self):
        return self.dataset.features

    def __len__(self):
        return len(self.dataset)

    def save(self, path) -> None:
        path = Path(path)
        self.dataset.save(path)
        sidecar = {**self.provenance, "content_hash": self.dataset.content_hash()}
        Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> PerturbedDataset:
        ds = LabeledDataset.load(path)
        prov = json.loads(Path(str(path) + ".json").read_text())
        return cls(ds, prov)


def perturb(generator: GeneratorModel, dataset: LabeledDataset, hyper: HyperParams | None = None,
            method: str = "PRGAN") -> PerturbedDataset:
    """Apply the generator record-wise; binary data is thresholded at 0.5."""
    width = int(np.prod(generator.spec.input_shape))
    if dataset.n_features != width:
        raise ShapeMismatch(f"generator takes {width} features, dataset has {dataset.n_features}")
    out = generator.apply(dataset.features)
    if dataset.kind is DatasetKind.BINARY:
        out = (out >= 0.5).astype(np.float32)
    else:
        out = np.clip(out, 0.0, 1.0)
    prov = {
        "method": method,
        "generator_id": generator.id,
        "source_hash": dataset.content_hash(),
        "hyperparams": (hyper or HyperParams(**generator.meta["hyper"])).to_dict()
        if (hyper or "hyper" in generator.meta) else None,
    }
    return PerturbedDataset(dataset.with_features(out, name=dataset.name), prov)


def identity_perturbation(dataset: LabeledDataset) -> PerturbedDataset:
    return PerturbedDataset(dataset, {"method": "identity", "source_hash": dataset.content_hash()})


# --------------------------------------------------------------------------- tuning

@dataclass
class CandidateResult:
    index: int
    hyper: HyperParams
    acc_target: float
    acc_sensitive: float
    mean_norm: float
    run: GanRun | None = None

    def summary(self) -> dict:
        return {"index": self.index, **self.hyper.to_dict(), "acc_target": self.acc_target,
                "acc_sensitive": self.acc_sensitive, "mean_norm": self.mean_norm}


@dataclass
class TuneResult:
    best: CandidateResult
    candidates: list
    fit_indices: np.ndarray
    val_indices: np.ndarray


def evaluate_perturbed(perturbed: LabeledDataset, original: LabeledDataset, target_clf, sensitive_clf):
    """(Acc(D_L), Acc(D_P), mean perturbation norm) of a perturbed dataset."""
    from .models import accuracy

    acc_t = accuracy(target_clf, perturbed.features, perturbed.target_labels) if target_clf else float("nan")
    acc_s = accuracy(sensitive_clf, perturbed.features, perturbed.sensitive_labels)
    norm = float(np.linalg.norm(perturbed.features - original.features, axis=1).mean())
    return acc_t, acc_s, norm


def select_candidate(candidates, threshold=None, budget=None) -> CandidateResult:
    """Best feasible candidate; ties go to the smaller mean perturbation norm.

    Threshold mode minimises Acc(D_P) subject to Acc(D_L) >= threshold; budget
    mode maximises Acc(D_L) subject to Acc(D_P) <= budget.
    """
    if (threshold is None) == (budget is None):
        raise ValueError("give exactly one of threshold / budget")
    if threshold is not None:
        feasible = [c for c in candidates if c.acc_target >= threshold]
        key = lambda c: (c.acc_sensitive, c.mean_norm, c.index)  # noqa: E731
        what = f"Acc(D_L) >= {threshold}"
    else:
        feasible = [c for c in candidates if c.acc_sensitive <= budget]
        key = lambda c: (-c.acc_target, c.mean_norm, c.index)  # noqa: E731
        what = f"Acc(D_P) <= {budget}"
    if not feasible:
        best_t = max((c.acc_target for c in candidates), default=float("nan"))
        best_s = min((c.acc_sensitive for c in candidates), default=float("nan"))
        raise NoFeasibleCandidate(
            f"none of {len(candidates)} candidates meets {what} "
            f"(best Acc(D_L)={best_t:.4f}, best Acc(D_P)={best_s:.4f})"
        )
    return min(feasible, key=key)


def evaluate_candidates(train_set, val_set, target_clf, sensitive_clf, search_space, trainer=None,
                        **trainer_kw) -> list[CandidateResult]:
    """Train one run per hyperparameter set and score it on ``val_set``.

    Candidate ``i`` is trained with seed ``hyper.seed + i``.
    """
    trainer = trainer or train_prgan
    results = []
    for i, hyper in enumerate(search_space):
        h = hyper.replace(seed=hyper.seed + i)
        run = trainer(train_set, target_clf, sensitive_clf, h, **trainer_kw)
        pert = perturb(run.generator, val_set, h, method=run.method).dataset
        acc_t, acc_s, norm = evaluate_perturbed(pert, val_set, target_clf, sensitive_clf)
        log.info("%s candidate %d %s: Acc(D_L)=%.4f Acc(D_P)=%.4f norm=%.3f",
                 run.method, i, _short(h), acc_t, acc_s, norm)
        results.append(CandidateResult(i, h, acc_t, acc_s, norm, run))
    return results


def _short(h: HyperParams) -> str:
    return f"lambda={h.lambda_tradeoff:g} alpha={h.alpha:g} beta={h.beta_hinge:g} c={h.hinge_cap:g}"


def tune(train_set: LabeledDataset, target_clf, sensitive_clf, search_space, *, threshold=None,
         budget=None, seed: int = 0, trainer=None, **trainer_kw) -> TuneResult:
    """Grid search on a 4:1 class-preserving re-split of ``train_set``.

    Candidates train on the larger part; selection uses the smaller part.
    Raises :class:`NoFeasibleCandidate` rather than relaxing the constraint.
    """
    fit_idx, val_idx = validation_split(train_set, np.arange(len(train_set)), seed)
    fit, val = train_set.subset(fit_idx), train_set.subset(val_idx)
    results = evaluate_candidates(fit, val, target_clf, sensitive_clf, search_space, trainer, **trainer_kw)
    best = select_candidate(results, threshold=threshold, budget=budget)
    return TuneResult(best, results, fit_idx, val_idx)
