"""Command-line entry point: ``prgan prepare | train | evaluate | theory``.

Artifacts live under ``$PRGAN_HOME/runs/<run-id>/`` (``PRGAN_HOME`` defaults to
the working directory) with ``data/``, ``checkpoints/``, ``reports/`` and a
``manifest.json`` listing every file with its sha256.

Exit codes: 0 success, 1 run failure (divergence, infeasible constraint),
2 input error, 64 usage, 65 data format, 70 internal assertion.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import theory
from .config import Method, RunConfig, load_config
from .data import LabeledDataset, load_mnist, load_mnist_sample, load_uji
from .errors import (
    Divergence,
    MissingArtifact,
    MissingCoordinates,
    NoFeasibleCandidate,
    NoFeasibleEpsilon,
    PrganError,
    SchemaMismatch,
    TooFewPoints,
    TooFewRecords,
)
from .models import TrainedModel, dataset_kind_of

log = logging.getLogger("prgan")

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_USAGE, EXIT_DATA, EXIT_ASSERT = 0, 1, 2, 64, 65, 70
HOME_ENV = "PRGAN_HOME"
REPORT_KINDS = ("performance", "tradeoff", "transfer", "training-utility", "cost")
THEORY_SUITES = ("tv", "flipmap", "theorem1", "theorem2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------- run directory

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class RunDir:
    def __init__(self, run_id: str, home=None):
        home = Path(home or os.environ.get(HOME_ENV) or Path.cwd())
        self.run_id = run_id
        self.root = home / "runs" / run_id
        self.data = self.root / "data"
        self.checkpoints = self.root / "checkpoints"
        self.reports = self.root / "reports"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def create(self):
        for d in (self.data, self.checkpoints, self.reports):
            d.mkdir(parents=True, exist_ok=True)
        return self

    def manifest(self) -> dict:
        if self.manifest_path.exists():
            return json.loads(self.manifest_path.read_text())
        return {"run_id": self.run_id, "layout": ["data", "checkpoints", "reports"], "commands": {}, "files": {}}

    def record(self, command: str, argv, config: RunConfig | None = None, extra=None):
        """Store the command and rehash every file under the run directory."""
        m = self.manifest()
        entry = {"argv": list(argv)}
        if config is not None:
            entry["config"] = config.to_dict()
        if extra:
            entry.update(extra)
        m["commands"][command] = entry
        m["files"] = {
            str(p.relative_to(self.root)): sha256_file(p)
            for p in sorted(self.root.rglob("*"))
            if p.is_file() and p != self.manifest_path
        }
        self.manifest_path.write_text(json.dumps(m, indent=2, sort_keys=True, default=str) + "\n")

    def require(self, rel: str) -> Path:
        path = self.root / rel
        if not path.exists():
            raise MissingArtifact(f"run {self.run_id!r} has no {rel} (run the producing command first)", entry=rel)
        return path

    def dataset(self) -> LabeledDataset:
        return LabeledDataset.load(self.require("data/dataset.npz"))

    def plan(self):
        from .splits import SplitPlan

        return SplitPlan.load(self.require("data/splits.json"))


def _run_id(config: RunConfig | None, args) -> str:
    if getattr(args, "run_id", None):
        return args.run_id
    if config is not None and config.run_id:
        return config.run_id
    dataset = config.dataset if config is not None else args.dataset
    seed = config.seed if config is not None else args.seed
    return f"{dataset}-seed{seed}"


# --------------------------------------------------------------------------- prepare

def cmd_prepare(args, argv) -> int:
    from .splits import slice_dataset

    if args.dataset == "mnist":
        if bool(args.images) != bool(args.labels):
            raise UsageError("prepare mnist: give both --images and --labels, or neither")
        ds = load_mnist(args.images, args.labels) if args.images else load_mnist_sample()
    else:
        if args.csv:
            ds = load_uji(args.csv, seed=args.seed)
        else:
            from .synthetic import UJI_RECORDS, synthesize_uji

            table = synthesize_uji(args.records or UJI_RECORDS, seed=args.seed)
            ds = load_uji(table, seed=args.seed)
            ds = ds._replace(meta={**ds.meta, "synthetic": True, "records": len(table)})
    plan = slice_dataset(ds, args.seed)
    run = RunDir(args.run_id or f"{args.dataset}-seed{args.seed}").create()
    ds.save(run.data / "dataset.npz")
    plan.save(run.data / "splits.json")
    run.record("prepare", argv, extra={"dataset": args.dataset, "seed": args.seed})
    print(f"prepared {ds.name}: {len(ds)} records, {ds.n_features} {ds.kind.value} features, "
          f"{ds.target_classes} target classes, {ds.sensitive_classes} sensitive classes")
    print(f"slices A/B/C: {len(plan.A.all)}/{len(plan.B.all)}/{len(plan.C.all)} records -> {run.root}")
    return EXIT_OK


# --------------------------------------------------------------------------- train

def _context(run: RunDir, config: RunConfig):
    """Experiment context, training and caching the slice-A classifiers on first use."""
    from .experiment import ExperimentContext, train_task_classifier

    ds, plan = run.dataset(), run.plan()
    models = []
    for task in ("target", "sensitive"):
        path = run.checkpoints / f"{task}_M1.pt"
        if path.exists():
            models.append(TrainedModel.load(path))
        else:
            log.info("training %s classifier on slice A", task)
            m = train_task_classifier(ds, plan.A.train, plan.A.test, task, config.classifier)
            m.save(path)
            models.append(m)
    return ExperimentContext(ds, plan, models[0], models[1], config.classifier)


def _write_log(path: Path, rows):
    cols = [c for c in ("epoch", "step", "L_D", "L_GAN", "L_Adv", "L_target", "L_sensitive", "L_hinge", "L_G")
            if any(c in r for r in rows)]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k) for k in cols})


def cmd_train(args, argv) -> int:
    from .baselines import TRAINERS, dp_sweep
    from .evaluation import EvaluationReport
    from .gan import evaluate_perturbed, perturb, train_prgan, tune

    config = load_config(args.config)
    run = RunDir(_run_id(config, args))
    ctx = _context(run, config)
    method = config.method.value
    tag = method.lower()
    c_test, c_train = ctx.report_set, ctx.report_train_set
    summary = EvaluationReport("train", ctx.dataset.name)

    if config.method is Method.DP:
        threshold = config.threshold
        if threshold is None:
            raise UsageError("train: method DP needs 'threshold' in the config")
        from .baselines import epsilon_grid

        res = dp_sweep(ctx.tuning_set, ctx.target_clf, ctx.sensitive_clf, threshold, test_set=c_test,
                       epsilons=epsilon_grid(config.epsilons), seed=config.seed)
        res.perturbed.save(run.data / f"perturbed_{tag}_C_test.npz")
        from .baselines import apply_mechanism

        apply_mechanism(c_train, res.chosen.params, config.seed + 20_000).save(run.data / f"perturbed_{tag}_C_train.npz")
        chosen = {"epsilon": res.epsilon, **res.chosen.params.to_dict(), "threshold": threshold,
                  "val_acc_target": res.chosen.acc_target, "val_acc_sensitive": res.chosen.acc_sensitive}
        (run.reports / "dp_epsilon.json").write_text(json.dumps(chosen, indent=2, sort_keys=True) + "\n")
        print(f"DP: chosen epsilon {res.epsilon:.6g}; slice C Acc(D_L)={res.acc_target:.4f} "
              f"Acc(D_P)={res.acc_sensitive:.4f}")
        run.record("train:DP", argv, config)
        return EXIT_OK

    trainer = TRAINERS[method]
    space = config.search_space()
    if len(space) > 1 or config.threshold is not None or config.budget is not None:
        if config.threshold is None and config.budget is None:
            raise UsageError("train: a grid search needs 'threshold' or 'budget' in the config")
        result = tune(ctx.tuning_set, ctx.target_clf, ctx.sensitive_clf, space, threshold=config.threshold,
                      budget=config.budget, seed=config.seed, trainer=trainer)
        gan_run = result.best.run
        for cand in result.candidates:
            summary.add(**cand.summary(), selected=cand.index == result.best.index)
        summary.save(run.reports, f"tuning_{tag}")
    else:
        gan_run = trainer(ctx.tuning_set, ctx.target_clf, ctx.sensitive_clf, space[0])
    gan_run.generator.save(run.checkpoints / f"generator_{tag}.pt")
    if gan_run.discriminator is not None:
        gan_run.discriminator.save(run.checkpoints / f"discriminator_{tag}.pt")
    _write_log(run.reports / f"loss_log_{tag}.csv", gan_run.log)
    pert = perturb(gan_run.generator, c_test, gan_run.hyper, method=method)
    pert.save(run.data / f"perturbed_{tag}_C_test.npz")
    perturb(gan_run.generator, c_train, gan_run.hyper, method=method).save(run.data / f"perturbed_{tag}_C_train.npz")
    t, s, norm = evaluate_perturbed(pert.dataset, c_test, ctx.target_clf, ctx.sensitive_clf)
    print(f"{method}: slice C Acc(D_L)={t:.4f} Acc(D_P)={s:.4f} mean |G(x)-x|={norm:.4f}")
    run.record(f"train:{method}", argv, config)
    return EXIT_OK


# --------------------------------------------------------------------------- evaluate

def _default_grid(config: RunConfig):
    return {m: config.search_space() for m in ("PRGAN", "NGP", "AP")}


def cmd_evaluate(args, argv) -> int:
    from . import evaluation as ev

    if args.kind == "cost":
        kind = dataset_kind_of(args.dataset or (load_config(args.config).dataset if args.config else "mnist"))
        classes = {"mnist": 2, "wifi": 13}[kind]
        report = ev.cost_report(kind, classifier_classes={a: classes for a in ("M1", "M2", "M3")})
        for r in report.rows:
            print(f"{r['model']:>13}: {r['params']:>12,d} params {r['flops']:>14,d} FLOPs")
        if args.config:
            config = load_config(args.config)
            run = RunDir(_run_id(config, args))
            if run.root.exists():
                report.save(run.reports, "cost")
                run.record("evaluate:cost", argv, config)
        return EXIT_OK

    if not args.config:
        raise UsageError(f"evaluate {args.kind}: --config is required")
    config = load_config(args.config)
    run = RunDir(_run_id(config, args))
    ctx = _context(run, config)
    seeds = [config.seed + i for i in range(args.seeds)]
    method = config.method.value
    tag = method.lower()
    if args.kind == "performance":
        threshold = args.threshold if args.threshold is not None else config.threshold
        if threshold is None:
            raise UsageError("evaluate performance: give --threshold or 'threshold' in the config")
        report = ev.run_performance_table(ctx, config.methods, threshold, _default_grid(config), seeds,
                                          epsilons=_epsilons(config))
        for r in report.rows:
            print(f"{r['method']:>9} seed={r['seed']}: Acc(D_L)={_fmt(r['acc_target'])} "
                  f"Acc(D_P)={_fmt(r['acc_sensitive'])}{'' if r['feasible'] else ' (infeasible)'}")
    elif args.kind == "tradeoff":
        budgets = config.budgets or (0.03, 0.06, 0.09, 0.12)
        report = ev.run_tradeoff_sweep(ctx, config.methods, budgets, _default_grid(config), seeds,
                                       epsilons=_epsilons(config))
        for r in report.rows:
            print(f"{r['method']:>9} seed={r['seed']} budget={r['budget']:.3f}: privacy={_fmt(r['privacy'])}")
    elif args.kind == "transfer":
        pert = _load_perturbed(run, f"data/perturbed_{tag}_C_test.npz")
        report = ev.run_transferability(ctx, pert)
        for r in report.rows:
            print(f"{r['model']:>8}: utility drop {ev.render_percent(r['utility_drop'])}%, "
                  f"privacy drop {ev.render_percent(r['privacy_drop'])}%")
    else:
        pert_train = _load_perturbed(run, f"data/perturbed_{tag}_C_train.npz")
        pert_test = _load_perturbed(run, f"data/perturbed_{tag}_C_test.npz")
        from .models import accuracy

        inference = accuracy(ctx.target_clf, pert_test.features, pert_test.dataset.target_labels)
        report = ev.run_training_utility(ctx, pert_train, inference_accuracy=inference)
        r = report.rows[0]
        print(f"training utility {ev.render_percent(r['training_utility'])}%, "
              f"inference utility {ev.render_percent(r['inference_utility'])}%")
    report.save(run.reports, f"{args.kind}_{tag}" if args.kind in ("transfer", "training-utility") else args.kind)
    run.record(f"evaluate:{args.kind}", argv, config)
    return EXIT_OK


def _epsilons(config: RunConfig):
    from .baselines import epsilon_grid

    return epsilon_grid(config.epsilons)


def _fmt(v):
    return "   n/a" if v is None or v != v else f"{v:.4f}"


def _load_perturbed(run: RunDir, rel: str):
    from .gan import PerturbedDataset

    return PerturbedDataset.load(run.require(rel))


# --------------------------------------------------------------------------- theory

class InstanceFormatError(Exception):
    pass


def _load_instances(paths):
    out = []
    for p in paths:
        try:
            out.append((str(p), theory.DiscreteJointDistribution.load(p)))
        except FileNotFoundError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise InstanceFormatError(f"{p}: malformed instance ({exc})") from exc
    return out


def _random_instances(suite, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        size = int(rng.integers(2, 9 if suite != "theorem1" else 7))
        balanced = suite in ("theorem1",) or (suite == "flipmap" and rng.random() < 0.5)
        dist = theory.random_distribution(rng, size, balanced=balanced or None)
        out.append((f"random[{len(out)}]", dist))
    return out


def _theory_one(suite, dist, rng):
    """Return (ok, description) for one instance."""
    if suite == "tv":
        q = rng.dirichlet(np.ones(len(dist)))
        a, b = theory.tv_distance(dist.masses, q), theory.tv_distance_subset_max(dist.masses, q)
        return abs(a - b) <= 1e-12, f"half-L1 {a:.6f} subset-max {b:.6f}"
    if suite == "flipmap":
        balanced = theory.is_balanced(dist)
        exists = theory.flipping_coupling_exists(dist)
        if balanced:
            check = theory.verify_flipping_map(dist, theory.construct_flipping_map(dist))
            return check.ok and exists, f"balanced; map verified={check.ok}"
        return not exists, f"unbalanced; coupling exists={exists}"
    if suite == "theorem1":
        rep = theory.verify_theorem1(dist)
        return rep.holds, (f"TV={rep.tv:.2e} flip={rep.sensitive_flip_rate:.6f} "
                           f"preserve={rep.target_preserve_rate:.6f} objective={rep.objective:.6f}")
    n = len(dist)
    f = rng.integers(0, 2, size=n)
    g = rng.integers(0, 2, size=n)
    mapping = rng.integers(0, n, size=n)
    chk = theory.check_theorem2(f, g, mapping, dist)
    return chk.holds, f"lhs={chk.lhs:.6f} rhs={chk.rhs:.6f}"


def cmd_theory(args, argv) -> int:
    if not args.files and not args.random:
        raise UsageError("theory: give instance files or --random N")
    instances = _load_instances(args.files) + _random_instances(args.suite, args.random or 0, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    failures = 0
    for name, dist in instances:
        if args.suite == "theorem1" and not theory.is_balanced(dist):
            print(f"{name}: skipped (not balanced)")
            continue
        ok, desc = _theory_one(args.suite, dist, rng)
        failures += not ok
        if not ok or args.verbose or args.files:
            print(f"{name}: {'ok' if ok else 'VIOLATION'} {desc}")
    print(f"theory {args.suite}: {len(instances)} instances, {failures} violations")
    return EXIT_OK if failures == 0 else EXIT_ASSERT


# --------------------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prgan", description="Privacy-preserving perturbation experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pr = sub.add_parser("prepare", help="load a dataset and write its slice plan")
    pr.add_argument("dataset", choices=("mnist", "uji"))
    pr.add_argument("--images", help="MNIST idx image file (default: bundled 5000-image sample)")
    pr.add_argument("--labels", help="MNIST idx label file")
    pr.add_argument("--csv", help="UJIIndoorLoc CSV (default: synthetic data with the same schema)")
    pr.add_argument("--records", type=int, help="synthetic UJI record count")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--run-id")

    tr = sub.add_parser("train", help="train the configured method and perturb slice C")
    tr.add_argument("--config", required=True)
    tr.add_argument("--run-id")

    ev = sub.add_parser("evaluate", help="produce a report")
    ev.add_argument("kind", choices=REPORT_KINDS)
    ev.add_argument("--config")
    ev.add_argument("--dataset", help="dataset for the cost report when no config is given")
    ev.add_argument("--threshold", type=float)
    ev.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to average")
    ev.add_argument("--run-id")

    th = sub.add_parser("theory", help="check the discrete theory on instances")
    th.add_argument("suite", choices=THEORY_SUITES)
    th.add_argument("files", nargs="*")
    th.add_argument("--random", type=int, default=0, metavar="N")
    th.add_argument("--seed", type=int, default=0)
    th.add_argument("--verbose", action="store_true")
    return p


COMMANDS = {"prepare": cmd_prepare, "train": cmd_train, "evaluate": cmd_evaluate, "theory": cmd_theory}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"prgan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaMismatch as exc:
        col = f" (column {exc.column})" if exc.column else ""
        print(f"prgan: input error: {exc}{col}", file=sys.stderr)
        return EXIT_INPUT
    except InstanceFormatError as exc:
        print(f"prgan: data format error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MissingArtifact as exc:
        print(f"prgan: missing artifact {exc.entry}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"prgan: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MissingCoordinates, TooFewRecords, TooFewPoints) as exc:
        print(f"prgan: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Divergence as exc:
        print(f"prgan: training diverged: {exc}; last finite losses: {exc.last_losses}", file=sys.stderr)
        return EXIT_FAILURE
    except (NoFeasibleCandidate, NoFeasibleEpsilon) as exc:
        print(f"prgan: infeasible: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except AssertionError as exc:
        print(f"prgan: internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ValueError, PrganError) as exc:
        print(f"prgan: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
