"""Experiment protocols and their metrics.

Accuracies are stored as fractions; :func:`render_percent` formats them for
tables. Every protocol evaluates all methods on the same slice C records.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .baselines import TRAINERS, choose_epsilon, apply_mechanism, epsilon_grid, sweep_points
from .config import HyperParams
from .errors import NoFeasibleCandidate, NoFeasibleEpsilon
from .experiment import ExperimentContext, original_accuracies, train_task_classifier
from .gan import evaluate_candidates, evaluate_perturbed, identity_perturbation, perturb, select_candidate
from .models import accuracy, count_cost, discriminator_spec, generator_spec
from .splits import validation_split

log = logging.getLogger(__name__)

# Published raw accuracies (percent) behind the transferability table:
# (utility M1, M2, M3), (privacy M1, M2, M3), random-classifier accuracy.
PUBLISHED_TRANSFER = {
    "MNIST": ((95.19, 94.07, 92.73), (12.49, 43.51, 46.18), 50.0),
    "PubFig": ((95.47, 95.23, 95.71), (17.5, 10.71, 17.38), 6.67),
    "WiFi": ((75.77, 76.96, 72.27), (17.75, 19.77, 20.66), 0.97),
}
PUBLISHED_TRANSFER_DROPS = {  # rendered averages: (utility, privacy)
    "MNIST": ("1.79", "0.00"),
    "PubFig": ("0.12", "0.00"),
    "WiFi": ("1.75", "2.47"),
}
PUBLISHED_TRAINING_UTILITY = {  # (inference, training), percent
    "MNIST": (95.19, 96.72),
    "PubFig": (95.47, 98.84),
    "WiFi": (75.77, 73.72),
}
PUBLISHED_PERFORMANCE = {  # Acc(D_P) at the high threshold: MNIST, PubFig, WiFi
    "PRGAN": (0.125, 0.175, 0.177),
    "NGP": (0.305, 0.211, 0.178),
    "AP": (0.897, 0.571, 0.477),
    "DP": (0.806, 0.783, 0.464),
    "Original": (0.984, 0.807, 0.759),
}
PUBLISHED_COST = {  # generator FLOPs and parameters
    "MNIST": (1.6e6, 235.4e3),
    "WiFi": (2.1e6, 1.1e6),
    "PubFig": (232e6, 644.2e3),
}


# --------------------------------------------------------------------------- metrics

def utility_drop(acc_m: float, acc_m_prime: float) -> float:
    """How much accuracy a new model loses relative to the reference model (never negative)."""
    return max(acc_m - acc_m_prime, 0.0)


def privacy_drop(acc_m: float, acc_m_prime: float, acc_rc: float) -> float:
    """How far a new model recovers the sensitive label beyond both the reference model
    and a uniform random guess (never negative)."""
    return max(acc_m_prime - max(acc_m, acc_rc), 0.0)


def random_classifier_accuracy(n_classes: int) -> float:
    if n_classes < 1:
        raise ValueError("need at least one class")
    return 1.0 / n_classes


def average_drops(utility_accs, privacy_accs, acc_rc):
    """Mean utility and privacy drops of models 2.. relative to model 1 (first entry)."""
    u = [utility_drop(utility_accs[0], a) for a in utility_accs[1:]]
    p = [privacy_drop(privacy_accs[0], a, acc_rc) for a in privacy_accs[1:]]
    return sum(u) / len(u), sum(p) / len(p), u, p


def render_percent(value: float, already_percent: bool = False) -> str:
    """Two-decimal rendering with half-up rounding after removing float noise."""
    v = value if already_percent else value * 100
    return str(Decimal(repr(round(v, 10))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def published_transfer_drops(dataset: str) -> tuple[str, str]:
    util, priv, rc = PUBLISHED_TRANSFER[dataset]
    u, p, _, _ = average_drops(util, priv, rc)
    return render_percent(u, True), render_percent(p, True)


# --------------------------------------------------------------------------- report

@dataclass
class EvaluationReport:
    kind: str
    dataset: str
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add(self, **row):
        self.rows.append(row)
        return row

    def columns(self):
        cols = []
        for r in self.rows:
            for k in r:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns(), lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _csv_value(v) for k, v in r.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "dataset": self.dataset, "rows": self.rows,
                           "provenance": self.provenance}, indent=2, sort_keys=True, default=_json_default)

    def save(self, directory, stem=None) -> list[Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        stem = stem or self.kind
        paths = [d / f"{stem}.csv", d / f"{stem}.json"]
        paths[0].write_text(self.to_csv())
        paths[1].write_text(self.to_json())
        return paths

    def where(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]

    def mean(self, column: str, **match) -> float:
        vals = [r[column] for r in self.where(**match) if r.get(column) is not None]
        vals = [v for v in vals if not (isinstance(v, float) and math.isnan(v))]
        return float(np.mean(vals)) if vals else float("nan")


def _csv_value(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(round(v, 10))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v, default=_json_default)
    return v


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, HyperParams):
        return o.to_dict()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _base_provenance(ctx: ExperimentContext) -> dict:
    return {
        "dataset_hash": ctx.dataset.content_hash(),
        "split_seed": ctx.plan.seed,
        "target_classifier": ctx.target_clf.id,
        "sensitive_classifier": ctx.sensitive_clf.id,
        "report_set_hash": ctx.report_set.content_hash(),
    }


# --------------------------------------------------------------------------- method pools

@dataclass
class MethodPool:
    """Validation scores of one method's candidates for one seed, reusable across constraints."""

    method: str
    seed: int
    candidates: list
    val_set: object
    dp_points: list | None = None

    def choose(self, threshold: float):
        if self.method == "DP":
            return choose_epsilon(self.dp_points, threshold)
        return select_candidate(self.candidates, threshold=threshold)

    def apply(self, choice, dataset, seed):
        if self.method == "DP":
            return apply_mechanism(dataset, choice.params, seed + 10_000)
        return perturb(choice.run.generator, dataset, choice.hyper, method=self.method)


def build_pool(ctx: ExperimentContext, method: str, search_space, seed: int, epsilons=None) -> MethodPool:
    """Train (or sweep) one method on slice B's 4/5 part and score it on the remaining 1/5."""
    tuning = ctx.tuning_set
    fit_idx, val_idx = validation_split(tuning, np.arange(len(tuning)), seed)
    fit, val = tuning.subset(fit_idx), tuning.subset(val_idx)
    if method == "DP":
        pts = sweep_points(val, ctx.target_clf, ctx.sensitive_clf, epsilons, seed)
        return MethodPool(method, seed, [], val, pts)
    space = [h.replace(seed=h.seed + 1000 * seed) for h in search_space]
    cands = evaluate_candidates(fit, val, ctx.target_clf, ctx.sensitive_clf, space, trainer=TRAINERS[method])
    return MethodPool(method, seed, cands, val)


# --------------------------------------------------------------------------- protocols

def run_performance_table(ctx: ExperimentContext, methods, threshold: float, search_spaces: dict,
                          seeds=(0,), epsilons=None, pools=None) -> EvaluationReport:
    """Acc(D_L) and Acc(D_P) on slice C for each method at utility threshold ``threshold``.

    ``search_spaces`` maps method name to a list of :class:`HyperParams`. Rows that
    cannot meet the threshold are kept with ``feasible = False``.
    """
    report = EvaluationReport("performance", ctx.dataset.name, provenance=_base_provenance(ctx))
    report.provenance.update(threshold=threshold, seeds=list(seeds))
    c = ctx.report_set
    acc_t, acc_s = original_accuracies(ctx)
    report.add(method="Original", seed=None, threshold=threshold, acc_target=acc_t, acc_sensitive=acc_s,
               mean_norm=0.0, feasible=True, choice=None)
    pools = pools if pools is not None else {}
    for method in methods:
        for seed in seeds:
            row = dict(method=method, seed=seed, threshold=threshold)
            if method == "identity":
                pert = identity_perturbation(c)
                choice_desc = None
            else:
                pool = pools.get((method, seed)) or build_pool(ctx, method, search_spaces.get(method), seed, epsilons)
                pools[(method, seed)] = pool
                try:
                    choice = pool.choose(threshold)
                except (NoFeasibleCandidate, NoFeasibleEpsilon) as exc:
                    report.add(**row, acc_target=float("nan"), acc_sensitive=float("nan"),
                               mean_norm=float("nan"), feasible=False, choice=str(exc))
                    continue
                pert = pool.apply(choice, c, seed)
                choice_desc = (choice.params.to_dict() if method == "DP" else choice.hyper.to_dict())
            t, s, norm = evaluate_perturbed(pert.dataset, c, ctx.target_clf, ctx.sensitive_clf)
            report.add(**row, acc_target=t, acc_sensitive=s, mean_norm=norm,
                       feasible=True, choice=choice_desc)
    return report


def run_tradeoff_sweep(ctx: ExperimentContext, methods, budgets, search_spaces: dict, seeds=(0,),
                       epsilons=None, pools=None) -> EvaluationReport:
    """Achieved privacy per method for each utility-loss budget.

    For budget ``b`` the threshold is ``Acc_val(D_L on original) - b``. The
    achieved privacy is ``Acc(D_P on original C) - Acc(D_P on perturbed C)``.
    Candidates are trained once per method and seed and re-selected per budget.
    """
    report = EvaluationReport("tradeoff", ctx.dataset.name, provenance=_base_provenance(ctx))
    report.provenance.update(budgets=list(budgets), seeds=list(seeds))
    c = ctx.report_set
    orig_t, orig_s = original_accuracies(ctx)
    pools = pools if pools is not None else {}
    for method in methods:
        for seed in seeds:
            pool = None
            if method != "identity":
                pool = pools.get((method, seed)) or build_pool(ctx, method, search_spaces.get(method), seed, epsilons)
                pools[(method, seed)] = pool
            for b in budgets:
                row = dict(method=method, seed=seed, budget=float(b))
                if pool is None:
                    report.add(**row, threshold=None, acc_target=orig_t, acc_sensitive=orig_s,
                               utility_loss=0.0, privacy=0.0, feasible=True, constraint_met=True)
                    continue
                val = pool.val_set
                val_t = accuracy(ctx.target_clf, val.features, val.target_labels)
                thr = val_t - float(b)
                try:
                    choice = pool.choose(thr)
                except (NoFeasibleCandidate, NoFeasibleEpsilon):
                    report.add(**row, threshold=thr, acc_target=float("nan"), acc_sensitive=float("nan"),
                               utility_loss=float("nan"), privacy=float("nan"), feasible=False,
                               constraint_met=False)
                    continue
                pert = pool.apply(choice, c, seed)
                t, s, _ = evaluate_perturbed(pert.dataset, c, ctx.target_clf, ctx.sensitive_clf)
                val_loss = val_t - choice.acc_target
                report.add(**row, threshold=thr, acc_target=t, acc_sensitive=s, utility_loss=orig_t - t,
                           privacy=orig_s - s, feasible=True, constraint_met=val_loss <= b + 1e-12)
    return report


def run_transferability(ctx: ExperimentContext, perturbed_c, arch_ids=("M2", "M3")) -> EvaluationReport:
    """Accuracy of the reference models (M1) and of new architectures trained on the
    original slice-A data, all on the perturbed slice C, with averaged drops."""
    report = EvaluationReport("transfer", ctx.dataset.name, provenance=_base_provenance(ctx))
    data = perturbed_c.dataset if hasattr(perturbed_c, "dataset") else perturbed_c
    report.provenance["perturbed_hash"] = data.content_hash()
    rc = random_classifier_accuracy(ctx.dataset.sensitive_classes)
    util, priv = [], []
    for arch in ("M1", *arch_ids):
        t_clf, s_clf = ctx.classifiers(arch)
        t = accuracy(t_clf, data.features, data.target_labels)
        s = accuracy(s_clf, data.features, data.sensitive_labels)
        util.append(t)
        priv.append(s)
        report.add(model=arch, acc_target=t, acc_sensitive=s,
                   utility_drop=utility_drop(util[0], t), privacy_drop=privacy_drop(priv[0], s, rc))
    u, p, _, _ = average_drops(util, priv, rc)
    report.add(model="average", acc_target=None, acc_sensitive=None, utility_drop=u, privacy_drop=p)
    report.provenance["random_classifier"] = rc
    return report


def run_training_utility(ctx: ExperimentContext, perturbed_train, original_test=None, arch_id: str = "M1",
                         inference_accuracy: float | None = None) -> EvaluationReport:
    """Train a fresh target classifier on perturbed records (original target labels)
    and test it on original data."""
    train = perturbed_train.dataset if hasattr(perturbed_train, "dataset") else perturbed_train
    test = ctx.report_set if original_test is None else original_test
    # hold out 1/5 of the perturbed records for checkpoint selection
    fit_idx, val_idx = validation_split(train, np.arange(len(train)), ctx.plan.seed)
    clf = train_task_classifier(train, fit_idx, val_idx, "target", ctx.classifier_config, arch_id)
    acc = accuracy(clf, test.features, test.target_labels)
    report = EvaluationReport("training-utility", ctx.dataset.name, provenance=_base_provenance(ctx))
    report.provenance.update(perturbed_hash=train.content_hash(), classifier=clf.id)
    row = report.add(arch=arch_id, training_utility=acc, inference_utility=inference_accuracy)
    if inference_accuracy is not None:
        row["gap"] = acc - inference_accuracy
    return report


def cost_report(dataset_kind: str, input_shape=None, classifier_classes=None) -> EvaluationReport:
    """FLOPs and parameter counts of the generator, discriminator and registry classifiers."""
    from .models import build_classifier

    report = EvaluationReport("cost", dataset_kind)
    published = {"mnist": "MNIST", "wifi": "WiFi"}.get(dataset_kind)
    for role, spec in (("generator", generator_spec(dataset_kind, input_shape)),
                       ("discriminator", discriminator_spec(dataset_kind, input_shape))):
        cost = count_cost(spec)
        row = report.add(model=role, flops=cost.flops, params=cost.params)
        if role == "generator" and published:
            row["published_flops"], row["published_params"] = PUBLISHED_COST[published]
    for arch, k in (classifier_classes or {}).items():
        cost = count_cost(build_classifier(arch, dataset_kind, k, input_shape=input_shape))
        report.add(model=arch, flops=cost.flops, params=cost.params)
    return report

